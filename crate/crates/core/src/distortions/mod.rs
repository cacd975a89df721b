//! Updating rules as distortion maps `φ^μ` from the Bayesian posterior to the
//! belief the agent actually holds.

mod checkers;
mod tabulated;

pub use checkers::{
    is_affine, is_occasionally_coarse, is_occasionally_stubborn, is_trivial_on_interior,
    CoarseVerdict, StubbornItem, StubbornVerdict,
};
pub use tabulated::Tabulated;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiments::{ExperimentError, PosteriorDistribution};
use crate::simplex::{on_segment, Belief, Face, GeometryError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DistortionError {
    #[error("no tabulated node within {tolerance} of the query (nearest at {distance})")]
    GridMiss { distance: f64, tolerance: f64 },
    #[error("rule requires {expected} states, got {got}")]
    WrongDimension { expected: String, got: usize },
    #[error("prior must have full support")]
    PriorNotInterior,
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}

/// Piecewise-constant rule that sends erring faces to a common belief.
///
/// * vertices listed in `vertex_images` map there; other vertices are fixed;
/// * relative interiors of `identity_faces` (and of their subfaces) are fixed;
/// * on `edge_case`, points strictly between the special vertex and `x_star`
///   map to `x_star` and the rest of the edge is fixed;
/// * every other point maps to `x_star`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StubbornSpec {
    pub x_star: Belief,
    #[serde(default)]
    pub vertex_images: Vec<(usize, Belief)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_case: Option<EdgeCase>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub identity_faces: Vec<Face>,
}

/// Half-identity edge: `x_star` sits in the relative interior of `edge`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCase {
    pub edge: Face,
    pub special_vertex: usize,
}

impl StubbornSpec {
    /// Builds the spec and checks it against the structural conditions that
    /// keep such rules consistent with the Blackwell order.
    pub fn new(
        x_star: Belief,
        vertex_images: Vec<(usize, Belief)>,
        edge_case: Option<EdgeCase>,
        identity_faces: Vec<Face>,
    ) -> Result<Self, DistortionError> {
        let spec = Self {
            x_star,
            vertex_images,
            edge_case,
            identity_faces,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.x_star.dim()
    }

    /// Shape checks only: indices in range, dimensions consistent.
    fn check_shape(&self) -> Result<(), DistortionError> {
        let n = self.n();
        let bad = |msg: String| Err(DistortionError::InvalidRule(msg));
        for (i, img) in &self.vertex_images {
            if *i >= n || img.dim() != n {
                return bad(format!("vertex image for {i} is malformed"));
            }
        }
        for f in &self.identity_faces {
            if f.support().iter().any(|&i| i >= n) {
                return bad("identity face out of range".into());
            }
        }
        if let Some(ec) = &self.edge_case {
            if ec.edge.dim() != 1 || !ec.edge.support().contains(&ec.special_vertex) {
                return bad("edge case needs an edge containing its special vertex".into());
            }
            if ec.edge.support().iter().any(|&i| i >= n) {
                return bad("edge case out of range".into());
            }
        }
        Ok(())
    }

    /// Full structural validation.
    pub fn validate(&self) -> Result<(), DistortionError> {
        self.check_shape()?;
        let n = self.n();
        let tol = 1e-9;
        let bad = |msg: String| Err(DistortionError::InvalidRule(msg));
        for (i, img) in &self.vertex_images {
            if on_segment(&self.x_star, &Belief::vertex(n, *i), img, tol).is_none() {
                return bad(format!(
                    "image of vertex {i} is not between x_star and the vertex"
                ));
            }
        }
        for f in &self.identity_faces {
            if let Some(i) = f
                .support()
                .iter()
                .find(|&&i| self.vertex_image(i).is_some())
            {
                return bad(format!("vertex {i} of an identity face is moved"));
            }
        }
        if let Some(ec) = &self.edge_case {
            if self.x_star.face(0.0) != ec.edge {
                return bad("x_star must lie in the relative interior of the special edge".into());
            }
            let other = ec
                .edge
                .support()
                .iter()
                .find(|&&i| i != ec.special_vertex)
                .unwrap();
            if self.vertex_image(*other).is_some() {
                return bad("the far vertex of the special edge must be fixed".into());
            }
            if self
                .identity_faces
                .iter()
                .any(|f| f.contains_face(&ec.edge))
            {
                return bad("the special edge cannot lie in an identity face".into());
            }
        }
        Ok(())
    }

    fn vertex_image(&self, i: usize) -> Option<&Belief> {
        self.vertex_images
            .iter()
            .find(|(j, _)| *j == i)
            .map(|(_, b)| b)
    }

    fn evaluate(&self, x: &Belief) -> Belief {
        let face = x.face(0.0);
        if face.dim() == 0 {
            let i = face.support()[0];
            return self.vertex_image(i).cloned().unwrap_or_else(|| x.clone());
        }
        if self.identity_faces.iter().any(|f| f.contains_face(&face)) {
            return x.clone();
        }
        if let Some(ec) = &self.edge_case {
            if face == ec.edge {
                let i = ec.special_vertex;
                return if x.coords()[i] > self.x_star.coords()[i] {
                    self.x_star.clone()
                } else {
                    x.clone()
                };
            }
        }
        self.x_star.clone()
    }
}

/// A distortion family. Families that only make sense for a fixed number of
/// states check the dimension of the prior at evaluation time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Distortion {
    Bayes,
    Trivial {
        x_star: Belief,
    },
    /// Two states. The scalar belief is the first coordinate.
    OccCoarse {
        a: f64,
        b: f64,
        u: f64,
        v: f64,
    },
    OccStubborn(StubbornSpec),
    /// `x̂(θ) ∝ (x(θ)/μ(θ))^α μ(θ)^β`.
    Grether {
        alpha: f64,
        beta: f64,
    },
    /// `x̂ = λ x + (1 − λ) μ`.
    Shrinkage {
        lambda: f64,
    },
    Tabulated(Tabulated),
}

impl Distortion {
    pub fn occ_coarse(a: f64, b: f64, u: f64, v: f64) -> Result<Self, DistortionError> {
        let d = Distortion::OccCoarse { a, b, u, v };
        d.validate()?;
        Ok(d)
    }

    pub fn grether(alpha: f64, beta: f64) -> Result<Self, DistortionError> {
        let d = Distortion::Grether { alpha, beta };
        d.validate()?;
        Ok(d)
    }

    pub fn shrinkage(lambda: f64) -> Result<Self, DistortionError> {
        let d = Distortion::Shrinkage { lambda };
        d.validate()?;
        Ok(d)
    }

    /// Three states: erring vertices (0,1,0) and (0,0,1) pulled toward
    /// `x_star = (2/5, 1/3, 4/15)`, everything else except (1,0,0) sent there.
    pub fn stubborn_a() -> Self {
        let spec = StubbornSpec::new(
            Belief::from_weights(vec![6.0, 5.0, 4.0]),
            vec![
                (1, Belief::from_weights(vec![9.0, 15.0, 6.0])),
                (2, Belief::from_weights(vec![6.0, 5.0, 19.0])),
            ],
            None,
            vec![],
        )
        .expect("valid stubborn spec");
        Distortion::OccStubborn(spec)
    }

    /// Same vertex images as [`Distortion::stubborn_a`] but with
    /// `x_star = (1/5, 1/3, 7/15)`; the vertex images then leave the segments
    /// toward `x_star`, so the rule is not consistent with the Blackwell order.
    pub fn stubborn_a_misaligned() -> Self {
        let spec = StubbornSpec {
            x_star: Belief::from_weights(vec![3.0, 5.0, 7.0]),
            vertex_images: vec![
                (1, Belief::from_weights(vec![9.0, 15.0, 6.0])),
                (2, Belief::from_weights(vec![6.0, 5.0, 19.0])),
            ],
            edge_case: None,
            identity_faces: vec![],
        };
        Distortion::OccStubborn(spec)
    }

    /// Three states: `x_star = (1/2, 1/2, 0)` on the edge {0,1}; that edge is
    /// fixed from `x_star` to (1,0,0) and collapsed on the half toward
    /// (0,1,0); the edge {0,2} is fixed; (0,1,0) maps to (3/10, 7/10, 0).
    pub fn stubborn_b() -> Self {
        let spec = StubbornSpec::new(
            Belief::new(vec![0.5, 0.5, 0.0]).unwrap(),
            vec![(1, Belief::new(vec![0.3, 0.7, 0.0]).unwrap())],
            Some(EdgeCase {
                edge: Face::new(vec![0, 1]),
                special_vertex: 1,
            }),
            vec![Face::new(vec![0, 2])],
        )
        .expect("valid stubborn spec");
        Distortion::OccStubborn(spec)
    }

    /// Number of states the family is tied to, if any.
    pub fn fixed_states(&self) -> Option<usize> {
        match self {
            Distortion::Trivial { x_star } => Some(x_star.dim()),
            Distortion::OccCoarse { .. } => Some(2),
            Distortion::OccStubborn(spec) => Some(spec.n()),
            Distortion::Tabulated(t) => Some(t.n()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), DistortionError> {
        let bad = |msg: &str| Err(DistortionError::InvalidRule(msg.into()));
        match self {
            Distortion::OccCoarse { a, b, u, v } => {
                let finite = [a, b, u, v].iter().all(|p| p.is_finite());
                if !finite || !(0.0 <= *a && a <= b && *b <= 1.0) {
                    return bad("occ-coarse needs 0 <= a <= b <= 1");
                }
                if !(0.0 <= *u && u <= a && b <= v && *v <= 1.0) {
                    return bad("occ-coarse needs 0 <= u <= a and b <= v <= 1");
                }
                Ok(())
            }
            Distortion::Grether { alpha, beta } => {
                if !(alpha.is_finite() && beta.is_finite() && *alpha > 0.0 && *beta > 0.0) {
                    return bad("grether needs positive alpha and beta");
                }
                Ok(())
            }
            Distortion::Shrinkage { lambda } => {
                if !(0.0..=1.0).contains(lambda) {
                    return bad("shrinkage needs lambda in [0, 1]");
                }
                Ok(())
            }
            Distortion::OccStubborn(spec) => {
                if spec.n() < 3 {
                    return bad("occ-stubborn needs at least three states");
                }
                spec.check_shape()
            }
            Distortion::Tabulated(t) => t.check(),
            Distortion::Bayes | Distortion::Trivial { .. } => Ok(()),
        }
    }

    /// `φ^μ(x)`.
    pub fn evaluate(&self, mu: &Belief, x: &Belief) -> Result<Belief, DistortionError> {
        let n = mu.dim();
        if x.dim() != n {
            return Err(DistortionError::WrongDimension {
                expected: n.to_string(),
                got: x.dim(),
            });
        }
        if let Some(k) = self.fixed_states() {
            if k != n {
                return Err(DistortionError::WrongDimension {
                    expected: k.to_string(),
                    got: n,
                });
            }
        }
        if !mu.is_interior() {
            return Err(DistortionError::PriorNotInterior);
        }
        Ok(match self {
            Distortion::Bayes => x.clone(),
            Distortion::Trivial { x_star } => x_star.clone(),
            Distortion::OccCoarse { a, b, u, v } => {
                let s = x.coords()[0];
                let img = if s <= 0.0 {
                    *u
                } else if s >= 1.0 {
                    *v
                } else {
                    s.clamp(*a, *b)
                };
                Belief::binary(img)
            }
            Distortion::OccStubborn(spec) => spec.evaluate(x),
            Distortion::Grether { alpha, beta } => {
                let w: Vec<f64> = x
                    .coords()
                    .iter()
                    .zip(mu.coords())
                    .map(|(&xi, &mi)| {
                        if xi <= 0.0 {
                            0.0
                        } else {
                            (xi / mi).powf(*alpha) * mi.powf(*beta)
                        }
                    })
                    .collect();
                Belief::from_weights(w)
            }
            Distortion::Shrinkage { lambda } => x.mix(mu, *lambda),
            Distortion::Tabulated(t) => t.lookup(x)?,
        })
    }

    /// Pushes a posterior distribution through the map, merging coincident images.
    pub fn pushforward(
        &self,
        mu: &Belief,
        rho_b: &PosteriorDistribution,
    ) -> Result<PosteriorDistribution, DistortionError> {
        let images = rho_b
            .support()
            .iter()
            .map(|x| self.evaluate(mu, x))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PosteriorDistribution::new(images, rho_b.probs().to_vec())?)
    }

    /// Short human-readable name used in reports.
    pub fn label(&self) -> String {
        match self {
            Distortion::Bayes => "bayes".into(),
            Distortion::Trivial { x_star } => format!("trivial({})", join(x_star.coords())),
            Distortion::OccCoarse { a, b, u, v } => format!("occ-coarse({a},{b},{u},{v})"),
            Distortion::OccStubborn(spec) => {
                format!("occ-stubborn(x*={})", join(spec.x_star.coords()))
            }
            Distortion::Grether { alpha, beta } => format!("grether({alpha},{beta})"),
            Distortion::Shrinkage { lambda } => format!("shrinkage({lambda})"),
            Distortion::Tabulated(t) => format!("tabulated({} nodes)", t.len()),
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Parses the shorthand forms `bayes`, `grether(a,b)`, `shrinkage(l)`,
/// `occ-coarse(a,b,u,v)`, `trivial(x1,...,xn)`, `occ-stubborn-a`,
/// `occ-stubborn-a-misaligned`, `occ-stubborn-b`, `tabulated:PATH`, or a JSON
/// rule object.
impl FromStr for Distortion {
    type Err = DistortionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.starts_with('{') {
            let d: Distortion =
                serde_json::from_str(s).map_err(|e| DistortionError::InvalidRule(e.to_string()))?;
            d.validate()?;
            return Ok(d);
        }
        if let Some(path) = s.strip_prefix("tabulated:") {
            return Ok(Distortion::Tabulated(Tabulated::from_csv_path(path)?));
        }
        let (name, args) = match s.find('(') {
            Some(open) => {
                let close = s
                    .strip_suffix(')')
                    .ok_or_else(|| DistortionError::InvalidRule(format!("unbalanced '{s}'")))?;
                let args = close[open + 1..]
                    .split(',')
                    .map(|t| {
                        t.trim().parse::<f64>().map_err(|_| {
                            DistortionError::InvalidRule(format!("bad number '{}'", t.trim()))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                (&s[..open], args)
            }
            None => (s, vec![]),
        };
        let arity = |k: usize| {
            if args.len() == k {
                Ok(())
            } else {
                Err(DistortionError::InvalidRule(format!(
                    "{name} takes {k} arguments, got {}",
                    args.len()
                )))
            }
        };
        match name.trim() {
            "bayes" => arity(0).map(|_| Distortion::Bayes),
            "grether" => arity(2).and_then(|_| Distortion::grether(args[0], args[1])),
            "shrinkage" => arity(1).and_then(|_| Distortion::shrinkage(args[0])),
            "occ-coarse" => {
                arity(4).and_then(|_| Distortion::occ_coarse(args[0], args[1], args[2], args[3]))
            }
            "trivial" => {
                let x_star = Belief::new(args)?;
                Ok(Distortion::Trivial { x_star })
            }
            "occ-stubborn-a" => arity(0).map(|_| Distortion::stubborn_a()),
            "occ-stubborn-a-misaligned" => arity(0).map(|_| Distortion::stubborn_a_misaligned()),
            "occ-stubborn-b" => arity(0).map(|_| Distortion::stubborn_b()),
            other => Err(DistortionError::InvalidRule(format!(
                "unknown rule '{other}'"
            ))),
        }
    }
}

/// Kind of deviation from Bayes' law at a single belief.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    None,
    Expansive,
    Contractive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorClass {
    pub kind: ErrorKind,
    /// For contractive errors, `φ(x) = λ x + (1 − λ) μ`.
    pub witness_lambda: Option<f64>,
}

/// Classifies the error at `x`: none, contractive (image on the segment to
/// the prior), or expansive (image off that segment).
pub fn classify_error(
    d: &Distortion,
    mu: &Belief,
    x: &Belief,
    tol: f64,
) -> Result<ErrorClass, DistortionError> {
    let img = d.evaluate(mu, x)?;
    Ok(classify_image(mu, x, &img, tol))
}

/// [`classify_error`] for an already evaluated image.
pub fn classify_image(mu: &Belief, x: &Belief, img: &Belief, tol: f64) -> ErrorClass {
    if img.dist_inf(x) <= tol {
        return ErrorClass {
            kind: ErrorKind::None,
            witness_lambda: None,
        };
    }
    match on_segment(x, mu, img, tol) {
        Some(lambda) => ErrorClass {
            kind: ErrorKind::Contractive,
            witness_lambda: Some(lambda),
        },
        None => ErrorClass {
            kind: ErrorKind::Expansive,
            witness_lambda: None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::TAU_GEO;

    fn b(c: &[f64]) -> Belief {
        Belief::new(c.to_vec()).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let mu = Belief::uniform(2);
        let x = b(&[0.7, 0.3]);
        assert_eq!(Distortion::Bayes.evaluate(&mu, &x).unwrap(), x);
        let g = Distortion::grether(2.0, 1.0)
            .unwrap()
            .evaluate(&mu, &x)
            .unwrap();
        assert!(g.dist_inf(&b(&[0.49 / 0.58, 0.09 / 0.58])) < 1e-12);

        let c = Distortion::occ_coarse(0.3, 0.7, 0.2, 0.8).unwrap();
        let at = |s: f64| c.evaluate(&mu, &Belief::binary(s)).unwrap().coords()[0];
        assert!((at(0.1) - 0.3).abs() < 1e-12);
        assert!((at(0.5) - 0.5).abs() < 1e-12);
        assert!((at(0.0) - 0.2).abs() < 1e-12);
        assert!((at(1.0) - 0.8).abs() < 1e-12);
        assert!((at(0.9) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn grether_fixes_vertices() {
        let mu = b(&[0.2, 0.3, 0.5]);
        let d = Distortion::grether(2.0, 0.5).unwrap();
        for i in 0..3 {
            let e = Belief::vertex(3, i);
            assert_eq!(d.evaluate(&mu, &e).unwrap(), e);
        }
    }

    #[test]
    fn coarse_parameter_validation() {
        assert!(Distortion::occ_coarse(0.7, 0.3, 0.2, 0.8).is_err());
        assert!(Distortion::occ_coarse(0.3, 0.7, 0.4, 0.8).is_err());
        assert!(Distortion::occ_coarse(0.3, 0.7, 0.2, 0.6).is_err());
        assert!(matches!(
            Distortion::occ_coarse(0.3, 0.7, 0.2, 0.8)
                .unwrap()
                .evaluate(&Belief::uniform(3), &Belief::uniform(3)),
            Err(DistortionError::WrongDimension { .. })
        ));
    }

    #[test]
    fn pushforward_examples() {
        let mu = Belief::uniform(2);
        let rho = PosteriorDistribution::new(vec![b(&[0.7, 0.3]), b(&[0.3, 0.7])], vec![0.5, 0.5])
            .unwrap();
        assert_eq!(Distortion::Bayes.pushforward(&mu, &rho).unwrap(), rho);
        let t = Distortion::Trivial {
            x_star: b(&[0.4, 0.6]),
        };
        let out = t.pushforward(&mu, &rho).unwrap();
        assert_eq!(out.len(), 1);
        let g = Distortion::grether(2.0, 1.0)
            .unwrap()
            .pushforward(&mu, &rho)
            .unwrap();
        assert!((g.support()[0].coords()[0] - 0.49 / 0.58).abs() < 1e-12);
        assert!((g.support()[1].coords()[0] - 0.09 / 0.58).abs() < 1e-12);
        assert_eq!(g.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn classification_examples() {
        let mu = Belief::uniform(2);
        let x = b(&[0.7, 0.3]);
        let none = classify_error(&Distortion::Bayes, &mu, &x, TAU_GEO).unwrap();
        assert_eq!(none.kind, ErrorKind::None);
        let c = classify_error(&Distortion::shrinkage(0.5).unwrap(), &mu, &x, TAU_GEO).unwrap();
        assert_eq!(c.kind, ErrorKind::Contractive);
        assert!((c.witness_lambda.unwrap() - 0.5).abs() < 1e-9);
        let e = classify_error(&Distortion::grether(2.0, 1.0).unwrap(), &mu, &x, TAU_GEO).unwrap();
        assert_eq!(e.kind, ErrorKind::Expansive);
        // An erring prior is expansive: no segment to contract along.
        let t = Distortion::Trivial {
            x_star: b(&[0.4, 0.6]),
        };
        assert_eq!(
            classify_error(&t, &mu, &mu, TAU_GEO).unwrap().kind,
            ErrorKind::Expansive
        );
    }

    #[test]
    fn stubborn_presets() {
        let mu = Belief::uniform(3);
        let a = Distortion::stubborn_a();
        let img = a.evaluate(&mu, &b(&[0.2, 0.3, 0.5])).unwrap();
        assert!(img.dist_inf(&b(&[0.4, 1.0 / 3.0, 4.0 / 15.0])) < 1e-12);
        assert_eq!(
            a.evaluate(&mu, &Belief::vertex(3, 0)).unwrap(),
            Belief::vertex(3, 0)
        );
        let e2 = a.evaluate(&mu, &Belief::vertex(3, 2)).unwrap();
        assert!(e2.dist_inf(&b(&[0.2, 1.0 / 6.0, 19.0 / 30.0])) < 1e-12);

        let bb = Distortion::stubborn_b();
        let x_star = b(&[0.5, 0.5, 0.0]);
        assert_eq!(bb.evaluate(&mu, &b(&[0.3, 0.7, 0.0])).unwrap(), x_star);
        assert_eq!(
            bb.evaluate(&mu, &b(&[0.6, 0.4, 0.0])).unwrap(),
            b(&[0.6, 0.4, 0.0])
        );
        assert_eq!(
            bb.evaluate(&mu, &b(&[0.6, 0.0, 0.4])).unwrap(),
            b(&[0.6, 0.0, 0.4])
        );
        assert_eq!(bb.evaluate(&mu, &b(&[0.0, 0.6, 0.4])).unwrap(), x_star);
        assert_eq!(bb.evaluate(&mu, &Belief::uniform(3)).unwrap(), x_star);
        assert_eq!(
            bb.evaluate(&mu, &Belief::vertex(3, 2)).unwrap(),
            Belief::vertex(3, 2)
        );

        if let Distortion::OccStubborn(spec) = Distortion::stubborn_a_misaligned() {
            assert!(spec.validate().is_err());
        } else {
            unreachable!();
        }
    }

    #[test]
    fn parse_shorthand() {
        assert_eq!("bayes".parse::<Distortion>().unwrap(), Distortion::Bayes);
        assert_eq!(
            "grether(2, 1)".parse::<Distortion>().unwrap(),
            Distortion::Grether {
                alpha: 2.0,
                beta: 1.0
            }
        );
        assert!("grether(2)".parse::<Distortion>().is_err());
        assert!("nope".parse::<Distortion>().is_err());
        let d: Distortion = r#"{"family": "shrinkage", "lambda": 0.25}"#.parse().unwrap();
        assert_eq!(d, Distortion::Shrinkage { lambda: 0.25 });
        assert!(r#"{"family": "shrinkage", "lambda": 2}"#.parse::<Distortion>().is_err());
        let round = serde_json::to_string(&Distortion::stubborn_b()).unwrap();
        assert_eq!(
            round.parse::<Distortion>().unwrap(),
            Distortion::stubborn_b()
        );
    }
}
