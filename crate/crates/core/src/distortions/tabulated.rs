//! Rules given as a finite table of (belief, image) pairs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DistortionError;
use crate::simplex::Belief;

#[derive(Deserialize)]
struct RawTabulated {
    #[serde(default)]
    nodes: Vec<(Belief, Belief)>,
    #[serde(default)]
    csv: Option<String>,
    #[serde(default)]
    step: Option<f64>,
}

/// Nearest-node lookup table. Queries farther than half the lattice step
/// (sup norm) from every node fail with `GridMiss`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTabulated")]
pub struct Tabulated {
    nodes: Vec<(Belief, Belief)>,
    step: f64,
}

impl TryFrom<RawTabulated> for Tabulated {
    type Error = DistortionError;

    fn try_from(raw: RawTabulated) -> Result<Self, Self::Error> {
        let mut t = match (raw.csv, raw.nodes.is_empty()) {
            (Some(path), true) => Tabulated::from_csv_path(path)?,
            (None, false) => Tabulated::new(raw.nodes, None)?,
            _ => {
                return Err(DistortionError::InvalidRule(
                    "tabulated rule needs exactly one of 'nodes' or 'csv'".into(),
                ))
            }
        };
        if let Some(step) = raw.step {
            t.step = step;
            t.check()?;
        }
        Ok(t)
    }
}

impl Tabulated {
    /// `step` defaults to the smallest sup-distance between two nodes.
    pub fn new(nodes: Vec<(Belief, Belief)>, step: Option<f64>) -> Result<Self, DistortionError> {
        if nodes.is_empty() {
            return Err(DistortionError::InvalidRule("empty table".into()));
        }
        let step = step.unwrap_or_else(|| {
            let mut best = f64::INFINITY;
            for (i, (x, _)) in nodes.iter().enumerate() {
                for (y, _) in &nodes[i + 1..] {
                    let d = x.dist_inf(y);
                    if d > 0.0 && d < best {
                        best = d;
                    }
                }
            }
            if best.is_finite() {
                best
            } else {
                1.0
            }
        });
        let t = Self { nodes, step };
        t.check()?;
        Ok(t)
    }

    /// Tabulates `f` on the given nodes.
    pub fn from_fn<F>(nodes: Vec<Belief>, step: f64, f: F) -> Result<Self, DistortionError>
    where
        F: Fn(&Belief) -> Belief,
    {
        let pairs = nodes.into_iter().map(|x| {
            let y = f(&x);
            (x, y)
        });
        Self::new(pairs.collect(), Some(step))
    }

    pub(super) fn check(&self) -> Result<(), DistortionError> {
        let n = self.n();
        if self.nodes.iter().any(|(x, y)| x.dim() != n || y.dim() != n) {
            return Err(DistortionError::InvalidRule(
                "table rows differ in length".into(),
            ));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(DistortionError::InvalidRule("step must be positive".into()));
        }
        Ok(())
    }

    /// Rows of `x_1..x_n, image_1..image_n`. A leading header row is skipped.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, DistortionError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| {
            DistortionError::InvalidRule(format!("cannot open {}: {e}", path.display()))
        })?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, DistortionError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut nodes = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| DistortionError::InvalidRule(e.to_string()))?;
            let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            let vals = match parsed {
                Ok(v) => v,
                Err(_) if line == 0 => continue,
                Err(_) => {
                    return Err(DistortionError::InvalidRule(format!(
                        "non-numeric value on row {}",
                        line + 1
                    )))
                }
            };
            if vals.len() < 4 || vals.len() % 2 != 0 {
                return Err(DistortionError::InvalidRule(format!(
                    "row {} needs 2n columns",
                    line + 1
                )));
            }
            let n = vals.len() / 2;
            nodes.push((
                Belief::new(vals[..n].to_vec())?,
                Belief::new(vals[n..].to_vec())?,
            ));
        }
        Self::new(nodes, None)
    }

    pub fn n(&self) -> usize {
        self.nodes[0].0.dim()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn lookup(&self, x: &Belief) -> Result<Belief, DistortionError> {
        let (dist, img) = self
            .nodes
            .iter()
            .map(|(node, img)| (node.dist_inf(x), img))
            .fold((f64::INFINITY, None), |best, (d, img)| {
                if d < best.0 {
                    (d, Some(img))
                } else {
                    best
                }
            });
        let tolerance = self.step / 2.0;
        match img {
            Some(img) if dist <= tolerance + 1e-12 => Ok(img.clone()),
            _ => Err(DistortionError::GridMiss {
                distance: dist,
                tolerance,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortions::Distortion;

    #[test]
    fn csv_round_trip_and_lookup() {
        let text = "x1,x2,y1,y2\n0,1,0.1,0.9\n0.5,0.5,0.5,0.5\n1,0,0.9,0.1\n";
        let t = Tabulated::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.step(), 0.5);
        let img = t.lookup(&Belief::binary(0.8)).unwrap();
        assert_eq!(img.coords(), &[0.9, 0.1]);
        let d = Distortion::Tabulated(t);
        let back: Distortion = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn grid_miss() {
        let nodes = vec![
            (Belief::binary(0.0), Belief::binary(0.0)),
            (Belief::binary(0.1), Belief::binary(0.1)),
        ];
        let t = Tabulated::new(nodes, None).unwrap();
        assert!(t.lookup(&Belief::binary(0.05)).is_ok());
        assert!(matches!(
            t.lookup(&Belief::binary(0.5)),
            Err(DistortionError::GridMiss { .. })
        ));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(Tabulated::from_csv_reader("0,1,0.5\n".as_bytes()).is_err());
        assert!(Tabulated::from_csv_reader("0,1,0.5,0.5\nx,1,1,0\n".as_bytes()).is_err());
    }
}
