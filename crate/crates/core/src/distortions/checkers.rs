//! Structural checkers: occasionally coarse (two states), occasionally
//! stubborn (three or more states), trivial on the interior, and affine.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Distortion, DistortionError};
use crate::simplex::{on_segment, random_belief, Belief, Face};

/// Outcome of [`is_occasionally_coarse`]. Scalars are first coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum CoarseVerdict {
    Coarse {
        a: f64,
        b: f64,
        u: f64,
        v: f64,
        /// Grid step; `a` and `b` are only resolved to this precision.
        resolution: f64,
    },
    Refuted {
        x: f64,
        image: f64,
        /// Which defining condition fails (1: lower collapse, 2: upper
        /// collapse, 3: identity band, 4: endpoint images).
        condition: u8,
    },
}

impl CoarseVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, CoarseVerdict::Coarse { .. })
    }
}

/// Scans `x ∈ {0, 1/g, ..., 1}` and tests the two-state coarse structure:
/// collapse to `a` below `a`, identity on `[a, b]`, collapse to `b` above `b`,
/// and endpoint images no less extreme than `a`, `b`.
///
/// `a` is read off the image of the first interior node when that node errs;
/// otherwise the lower region is empty at this resolution. `b` likewise.
pub fn is_occasionally_coarse(
    d: &Distortion,
    mu: &Belief,
    grid: usize,
    tol: f64,
) -> Result<CoarseVerdict, DistortionError> {
    if mu.dim() != 2 {
        return Err(DistortionError::WrongDimension {
            expected: "2".into(),
            got: mu.dim(),
        });
    }
    let g = grid.max(2);
    let xs: Vec<f64> = (0..=g).map(|i| i as f64 / g as f64).collect();
    let imgs = xs
        .iter()
        .map(|&x| Ok(d.evaluate(mu, &Belief::binary(x))?.coords()[0]))
        .collect::<Result<Vec<f64>, DistortionError>>()?;
    let (u, v) = (imgs[0], imgs[g]);
    let (first, last) = (xs[1], xs[g - 1]);
    let a = if (imgs[1] - first).abs() > tol {
        imgs[1]
    } else {
        u.max(0.0).min(first)
    };
    let b = if (imgs[g - 1] - last).abs() > tol {
        imgs[g - 1]
    } else {
        v.min(1.0).max(last)
    };
    let refute = |i: usize, condition| CoarseVerdict::Refuted {
        x: xs[i],
        image: imgs[i],
        condition,
    };
    if a > b + tol {
        return Ok(refute(1, 1));
    }
    for i in 1..g {
        let (x, y) = (xs[i], imgs[i]);
        if x < a - tol {
            if (y - a).abs() > tol {
                return Ok(refute(i, 1));
            }
        } else if x > b + tol {
            if (y - b).abs() > tol {
                return Ok(refute(i, 2));
            }
        } else if (y - x).abs() > tol {
            return Ok(refute(i, 3));
        }
    }
    if u > a + tol {
        return Ok(refute(0, 4));
    }
    if v < b - tol {
        return Ok(refute(g, 4));
    }
    Ok(CoarseVerdict::Coarse {
        a,
        b,
        u,
        v,
        resolution: 1.0 / g as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StubbornItem {
    /// Erring faces of dimension two or more share one image.
    CommonImage,
    /// Erring edges collapse to the common image, with at most the
    /// half-identity exception on an edge containing it.
    EdgeBehavior,
    /// Erring vertices map between the common image and the vertex.
    VertexSegment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum StubbornVerdict {
    Stubborn {
        /// Absent when no sampled point errs.
        x_star: Option<Belief>,
        /// Edge carrying the half-identity exception and its special vertex.
        special_edge: Option<(Face, usize)>,
    },
    Refuted {
        item: StubbornItem,
        point: Belief,
        image: Belief,
    },
}

impl StubbornVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, StubbornVerdict::Stubborn { .. })
    }
}

struct FaceScan {
    face: Face,
    points: Vec<Belief>,
    images: Vec<Belief>,
    relint_errs: bool,
}

/// Samples every face (a fixed low-discrepancy set per face, plus vertices)
/// and checks the three structural items of occasionally stubborn rules.
pub fn is_occasionally_stubborn(
    d: &Distortion,
    mu: &Belief,
    samples_per_face: usize,
    tol: f64,
) -> Result<StubbornVerdict, DistortionError> {
    let n = mu.dim();
    if n < 3 {
        return Err(DistortionError::WrongDimension {
            expected: ">= 3".into(),
            got: n,
        });
    }
    let count = samples_per_face.max(1);
    let scans = Face::all(n)
        .into_iter()
        .map(|face| {
            let points = face.relint_samples(n, count);
            let images = points
                .iter()
                .map(|x| d.evaluate(mu, x))
                .collect::<Result<Vec<_>, _>>()?;
            let relint_errs = points.iter().zip(&images).any(|(x, y)| x.dist_inf(y) > tol);
            Ok(FaceScan {
                face,
                points,
                images,
                relint_errs,
            })
        })
        .collect::<Result<Vec<_>, DistortionError>>()?;
    let closed_errs = |face: &Face| {
        scans
            .iter()
            .any(|s| s.relint_errs && face.contains_face(&s.face))
    };
    let full = scans.last().expect("simplex has faces");
    if !closed_errs(&full.face) {
        return Ok(StubbornVerdict::Stubborn {
            x_star: None,
            special_edge: None,
        });
    }
    let x_star = full.images[0].clone();
    let refute = |item, point: &Belief, image: &Belief| StubbornVerdict::Refuted {
        item,
        point: point.clone(),
        image: image.clone(),
    };

    for s in scans
        .iter()
        .filter(|s| s.face.dim() >= 2 && closed_errs(&s.face))
    {
        for (x, y) in s.points.iter().zip(&s.images) {
            if y.dist_inf(&x_star) > tol {
                return Ok(refute(StubbornItem::CommonImage, x, y));
            }
        }
    }

    let star_face = x_star.face(tol);
    let mut special_edge = None;
    for s in scans
        .iter()
        .filter(|s| s.face.dim() == 1 && closed_errs(&s.face))
    {
        let all_star = s.images.iter().all(|y| y.dist_inf(&x_star) <= tol);
        if all_star {
            continue;
        }
        if s.face == star_face {
            let vertex_fixed = |i: usize| {
                let e = Belief::vertex(n, i);
                d.evaluate(mu, &e).map(|img| img.dist_inf(&e) <= tol)
            };
            let mut found = None;
            for &i in s.face.support() {
                let j = *s.face.support().iter().find(|&&j| j != i).unwrap();
                let consistent = s.points.iter().zip(&s.images).all(|(x, y)| {
                    if x.coords()[i] > x_star.coords()[i] {
                        y.dist_inf(&x_star) <= tol
                    } else {
                        y.dist_inf(x) <= tol
                    }
                });
                if consistent && vertex_fixed(j)? {
                    found = Some(i);
                    break;
                }
            }
            if let Some(i) = found {
                special_edge = Some((s.face.clone(), i));
                continue;
            }
        }
        let (x, y) = s
            .points
            .iter()
            .zip(&s.images)
            .find(|(_, y)| y.dist_inf(&x_star) > tol)
            .unwrap();
        return Ok(refute(StubbornItem::EdgeBehavior, x, y));
    }

    for s in scans.iter().filter(|s| s.face.dim() == 0) {
        let (e, img) = (&s.points[0], &s.images[0]);
        if e.dist_inf(img) > tol && on_segment(&x_star, e, img, tol).is_none() {
            return Ok(refute(StubbornItem::VertexSegment, e, img));
        }
    }

    Ok(StubbornVerdict::Stubborn {
        x_star: Some(x_star),
        special_edge,
    })
}

/// Whether all sampled interior beliefs share one image.
pub fn is_trivial_on_interior(
    d: &Distortion,
    mu: &Belief,
    samples: usize,
    tol: f64,
) -> Result<bool, DistortionError> {
    let n = mu.dim();
    let pts = Face::new((0..n).collect()).relint_samples(n, samples.max(2));
    let first = d.evaluate(mu, &pts[0])?;
    for x in &pts[1..] {
        if d.evaluate(mu, x)?.dist_inf(&first) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of random beliefs on which the fitted affine map is verified.
const AFFINE_CHECKS: usize = 128;

/// Fits a linear map `L` with `φ(x) = L x` on `n` affinely independent
/// interior points (on the simplex this is the same as an affine map), then
/// verifies it on vertices and on seeded random beliefs.
pub fn is_affine(d: &Distortion, mu: &Belief, tol: f64) -> Result<bool, DistortionError> {
    let n = mu.dim();
    let anchors: Vec<Belief> = (0..n)
        .map(|i| Belief::vertex(n, i).mix(&Belief::uniform(n), 0.5))
        .collect();
    let p = DMatrix::from_fn(n, n, |r, c| anchors[c].coords()[r]);
    let images = anchors
        .iter()
        .map(|x| d.evaluate(mu, x))
        .collect::<Result<Vec<_>, _>>()?;
    let phi = DMatrix::from_fn(n, n, |r, c| images[c].coords()[r]);
    let Some(p_inv) = p.try_inverse() else {
        return Ok(false);
    };
    let l = phi * p_inv;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_af1e);
    let probes = (0..n)
        .map(|i| Belief::vertex(n, i))
        .chain((0..AFFINE_CHECKS).map(|_| random_belief(&mut rng, n)));
    for x in probes {
        let y = d.evaluate(mu, &x)?;
        let pred = &l * nalgebra::DVector::from_column_slice(x.coords());
        let err = pred
            .iter()
            .zip(y.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if err > tol {
            return Ok(false);
        }
    }
    Ok(true)
}
