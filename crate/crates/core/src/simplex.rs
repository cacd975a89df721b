//! Geometry on the probability simplex: beliefs, faces, hyperplanes,
//! segment membership, affine independence, hull membership and strict
//! separation.
//!
//! Beliefs are stored with all `n` coordinates. Hyperplane normals act on the
//! full coordinate vector and are normalized to sum to zero, which removes the
//! one redundant degree of freedom on the affine hull of the simplex.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, Relation};

/// Default tolerance for membership and separation queries.
pub const TAU_GEO: f64 = 1e-9;
/// Coordinates of a stored belief sum to one within this tolerance.
pub const TAU_SUM: f64 = 1e-12;
/// Input tolerance accepted by [`Belief::new`] before renormalization.
const INPUT_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum GeometryError {
    #[error("empty input")]
    EmptyInput,
    #[error("not a belief: {0}")]
    NotABelief(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point lies in the hull; no strict separation exists")]
    NoStrictSeparation,
    #[error("linear program failed: {0}")]
    Lp(#[from] crate::lp::LpError),
}

/// A point of the probability simplex over `n` states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Belief {
    coords: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Belief {
    type Error = GeometryError;

    fn try_from(coords: Vec<f64>) -> Result<Self, Self::Error> {
        Belief::new(coords)
    }
}

impl From<Belief> for Vec<f64> {
    fn from(b: Belief) -> Self {
        b.coords
    }
}

impl Belief {
    /// Validates and stores `coords`. Inputs within 1e-9 of the simplex are
    /// clamped and renormalized so the stored sum is exact to `TAU_SUM`.
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::EmptyInput);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NotABelief("non-finite coordinate".into()));
        }
        if let Some(c) = coords.iter().find(|&&c| c < -INPUT_SUM_TOL) {
            return Err(GeometryError::NotABelief(format!(
                "negative coordinate {c}"
            )));
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > INPUT_SUM_TOL {
            return Err(GeometryError::NotABelief(format!(
                "coordinates sum to {sum}"
            )));
        }
        Ok(Self::normalized(coords))
    }

    /// Normalizes nonnegative weights. Panics if the total is not positive.
    pub fn from_weights(weights: Vec<f64>) -> Self {
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        assert!(total > 0.0, "weights must have positive total");
        Self::normalized(weights.into_iter().map(|w| w.max(0.0) / total).collect())
    }

    fn normalized(mut coords: Vec<f64>) -> Self {
        for c in coords.iter_mut() {
            if *c < 0.0 {
                *c = 0.0;
            }
        }
        let sum: f64 = coords.iter().sum();
        if sum != 1.0 {
            for c in coords.iter_mut() {
                *c /= sum;
            }
        }
        Self { coords }
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        let mut coords = vec![0.0; n];
        coords[i] = 1.0;
        Self { coords }
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            coords: vec![1.0 / n as f64; n],
        }
    }

    /// Binary belief `(p, 1 - p)`.
    pub fn binary(p: f64) -> Self {
        Self::normalized(vec![p.clamp(0.0, 1.0), (1.0 - p).clamp(0.0, 1.0)])
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_interior(&self) -> bool {
        self.coords.iter().all(|&c| c > 0.0)
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Belief, lambda: f64) -> Belief {
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Self::normalized(coords)
    }

    pub fn dist_inf(&self, other: &Belief) -> f64 {
        dist_inf(&self.coords, &other.coords)
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        dot(&self.coords, v)
    }

    pub fn face(&self, tol: f64) -> Face {
        Face::new(
            self.coords
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > tol)
                .map(|(i, _)| i)
                .collect(),
        )
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Weighted average of beliefs; weights need not be normalized.
pub fn combine(points: &[Belief], weights: &[f64]) -> Belief {
    let n = points[0].dim();
    let mut acc = vec![0.0; n];
    for (p, &w) in points.iter().zip(weights) {
        for (a, c) in acc.iter_mut().zip(p.coords()) {
            *a += w * c;
        }
    }
    Belief::from_weights(acc)
}

/// A face of the simplex, identified by the states carrying positive mass.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    support: Vec<usize>,
}

impl Face {
    pub fn new(mut support: Vec<usize>) -> Self {
        support.sort_unstable();
        support.dedup();
        assert!(!support.is_empty(), "a face needs at least one vertex");
        Self { support }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.support.len() - 1
    }

    /// Bitmask id; stable across runs and used to seed per-face sampling.
    pub fn id(&self) -> u64 {
        self.support.iter().fold(0u64, |acc, &i| acc | (1 << i))
    }

    pub fn contains_face(&self, other: &Face) -> bool {
        other.support.iter().all(|i| self.support.contains(i))
    }

    /// All faces of the `(n-1)`-simplex, ordered by dimension then id.
    pub fn all(n: usize) -> Vec<Face> {
        assert!(n < 64);
        let mut faces: Vec<Face> = (1u64..(1 << n))
            .map(|mask| Face::new((0..n).filter(|i| mask & (1 << i) != 0).collect()))
            .collect();
        faces.sort_by_key(|f| (f.dim(), f.id()));
        faces
    }

    /// Faces of the given face (including itself) of dimension >= 1.
    pub fn subfaces(&self) -> Vec<Face> {
        let k = self.support.len();
        (1u64..(1 << k))
            .filter(|mask| mask.count_ones() >= 2)
            .map(|mask| {
                Face::new(
                    (0..k)
                        .filter(|j| mask & (1 << j) != 0)
                        .map(|j| self.support[j])
                        .collect(),
                )
            })
            .collect()
    }

    /// Deterministic low-discrepancy points in the relative interior.
    ///
    /// Uses a Kronecker sequence with generalized golden-ratio increments,
    /// offset by the face id, mapped to the face through exponential spacings.
    pub fn relint_samples(&self, n: usize, count: usize) -> Vec<Belief> {
        let k = self.support.len();
        if k == 1 {
            return vec![Belief::vertex(n, self.support[0])];
        }
        // Root of x^(k+1) = x + 1.
        let mut g = 2.0f64;
        for _ in 0..64 {
            g = (1.0 + g).powf(1.0 / (k as f64 + 1.0));
        }
        let alphas: Vec<f64> = (1..=k).map(|j| (1.0 / g.powi(j as i32)).fract()).collect();
        let offset = (self.id() as f64 * 0.618_033_988_749_895).fract();
        (1..=count)
            .map(|t| {
                let mut coords = vec![0.0; n];
                for (j, &s) in self.support.iter().enumerate() {
                    let u = (offset + t as f64 * alphas[j]).fract();
                    coords[s] = -(u.max(1e-9)).ln();
                }
                let b = Belief::from_weights(coords);
                // Keep every sample strictly inside the face.
                let floor = 1e-4;
                let lifted: Vec<f64> = b
                    .coords()
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        if self.support.contains(&i) {
                            c.max(floor)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                Belief::from_weights(lifted)
            })
            .collect()
    }
}

/// Affine hyperplane `{x : normal · x = offset}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        assert!(normal.iter().any(|&a| a != 0.0), "normal must be nonzero");
        Self { normal, offset }
    }

    /// Signed value `normal · x - offset`.
    pub fn eval(&self, x: &Belief) -> f64 {
        x.dot(&self.normal) - self.offset
    }
}

/// Returns the segment parameter `lambda` with `z ≈ lambda x + (1 - lambda) y`
/// when `z` is within `tol` (sup norm) of the segment.
pub fn on_segment(x: &Belief, y: &Belief, z: &Belief, tol: f64) -> Option<f64> {
    let d: Vec<f64> = x
        .coords()
        .iter()
        .zip(y.coords())
        .map(|(a, b)| a - b)
        .collect();
    let norm2 = dot(&d, &d);
    let lambda = if norm2 <= f64::EPSILON * f64::EPSILON {
        1.0
    } else {
        let r: Vec<f64> = z
            .coords()
            .iter()
            .zip(y.coords())
            .map(|(a, b)| a - b)
            .collect();
        (dot(&r, &d) / norm2).clamp(0.0, 1.0)
    };
    let err = x
        .coords()
        .iter()
        .zip(y.coords())
        .zip(z.coords())
        .map(|((a, b), c)| (lambda * a + (1.0 - lambda) * b - c).abs())
        .fold(0.0, f64::max);
    (err <= tol).then_some(lambda)
}

/// Removes points within `tol` of an earlier point.
pub fn dedup_points(points: &[Belief], tol: f64) -> Vec<Belief> {
    let mut out: Vec<Belief> = Vec::with_capacity(points.len());
    for p in points {
        if !out.iter().any(|q| q.dist_inf(p) <= tol) {
            out.push(p.clone());
        }
    }
    out
}

/// Rank test on the difference vectors `p_i - p_1` via the smallest singular
/// value. Duplicates within `TAU_GEO` are merged first.
pub fn affinely_independent(points: &[Belief], tol: f64) -> Result<bool, GeometryError> {
    if points.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    let pts = dedup_points(points, TAU_GEO);
    let n = pts[0].dim();
    let k = pts.len();
    if k == 1 {
        return Ok(true);
    }
    if k > n {
        return Ok(false);
    }
    let m = DMatrix::from_fn(k - 1, n, |r, c| pts[r + 1].coords()[c] - pts[0].coords()[c]);
    let sv = m.singular_values();
    let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(smallest > tol)
}

/// Convex weights reproducing `p` within `tol` per coordinate, if any.
pub fn hull_weights(p: &Belief, hull: &[Belief], tol: f64) -> Option<Vec<f64>> {
    if hull.is_empty() {
        return None;
    }
    let k = hull.len();
    let n = p.dim();
    // Variables: w_1..w_k, t. Minimize the sup-norm residual t.
    let mut lp = LinearProgram::new(k + 1);
    let mut obj = vec![0.0; k + 1];
    obj[k] = 1.0;
    lp.minimize(obj);
    let mut ones = vec![1.0; k + 1];
    ones[k] = 0.0;
    lp.constrain(ones, Relation::Eq, 1.0);
    for i in 0..n {
        let mut row: Vec<f64> = hull.iter().map(|h| h.coords()[i]).collect();
        row.push(-1.0);
        lp.constrain(row.clone(), Relation::Le, p.coords()[i]);
        row[k] = 1.0;
        lp.constrain(row, Relation::Ge, p.coords()[i]);
    }
    let sol = lp.solve().ok()?;
    (sol.x[k] <= tol).then(|| sol.x[..k].to_vec())
}

pub fn in_convex_hull(p: &Belief, hull: &[Belief], tol: f64) -> bool {
    hull_weights(p, hull, tol).is_some()
}

/// Maximum-margin strict separation of `conv(upper)` from `conv(lower)`:
/// `normal · a >= offset + m` on `upper`, `normal · b <= offset - m` on `lower`.
///
/// The normal is constrained to sum to zero with entries in `[-1, 1]`; the
/// result is rescaled so that its largest entry has magnitude one. Fails with
/// `NoStrictSeparation` when the optimal margin does not exceed `min_margin`.
pub fn separate_sets(
    upper: &[Belief],
    lower: &[Belief],
    min_margin: f64,
) -> Result<(Hyperplane, f64), GeometryError> {
    if upper.is_empty() || lower.is_empty() {
        return Err(GeometryError::EmptyInput);
    }
    let n = upper[0].dim();
    if let Some(p) = upper.iter().chain(lower).find(|p| p.dim() != n) {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            got: p.dim(),
        });
    }
    // Variables: a+ (n), a- (n), b+, b-, m.
    let nv = 2 * n + 3;
    let (bp, bm, mg) = (2 * n, 2 * n + 1, 2 * n + 2);
    let mut lp = LinearProgram::new(nv);
    let mut obj = vec![0.0; nv];
    obj[mg] = -1.0;
    lp.minimize(obj);
    let normal_row = |x: &Belief, sign: f64| {
        let mut row = vec![0.0; nv];
        for i in 0..n {
            row[i] = sign * x.coords()[i];
            row[n + i] = -sign * x.coords()[i];
        }
        row
    };
    for a in upper {
        // a·x - b - m >= 0
        let mut row = normal_row(a, 1.0);
        row[bp] = -1.0;
        row[bm] = 1.0;
        row[mg] = -1.0;
        lp.constrain(row, Relation::Ge, 0.0);
    }
    for b in lower {
        // a·x - b + m <= 0
        let mut row = normal_row(b, 1.0);
        row[bp] = -1.0;
        row[bm] = 1.0;
        row[mg] = 1.0;
        lp.constrain(row, Relation::Le, 0.0);
    }
    let mut sum_row = vec![0.0; nv];
    for i in 0..n {
        sum_row[i] = 1.0;
        sum_row[n + i] = -1.0;
        lp.constrain_terms(&[(i, 1.0)], Relation::Le, 1.0);
        lp.constrain_terms(&[(n + i, 1.0)], Relation::Le, 1.0);
    }
    lp.constrain(sum_row, Relation::Eq, 0.0);
    lp.constrain_terms(&[(mg, 1.0)], Relation::Le, 1.0);
    let sol = lp.solve()?;
    let margin = sol.x[mg];
    if margin <= min_margin {
        return Err(GeometryError::NoStrictSeparation);
    }
    let mut normal: Vec<f64> = (0..n).map(|i| sol.x[i] - sol.x[n + i]).collect();
    let mut offset = sol.x[bp] - sol.x[bm];
    let scale = normal.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    for a in normal.iter_mut() {
        *a /= scale;
    }
    offset /= scale;
    Ok((Hyperplane::new(normal, offset), margin / scale))
}

/// Strictly separates `p` from `conv(hull)` with `p` on the positive side.
pub fn separating_hyperplane(
    p: &Belief,
    hull: &[Belief],
    margin: f64,
) -> Result<Hyperplane, GeometryError> {
    separate_sets(std::slice::from_ref(p), hull, margin).map(|(h, _)| h)
}

/// Every belief with coordinates in `{0, 1/k, ..., 1}`.
pub fn lattice(n: usize, k: usize) -> Vec<Belief> {
    fn rec(n: usize, left: usize, prefix: &mut Vec<usize>, k: usize, out: &mut Vec<Belief>) {
        if prefix.len() == n - 1 {
            prefix.push(left);
            out.push(Belief::normalized(
                prefix.iter().map(|&c| c as f64 / k as f64).collect(),
            ));
            prefix.pop();
            return;
        }
        for c in (0..=left).rev() {
            prefix.push(c);
            rec(n, left - c, prefix, k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::with_capacity(n), k, &mut out);
    out
}

/// Number of lattice points, `C(k + n - 1, n - 1)`.
pub fn lattice_size(n: usize, k: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 1..n as u128 {
        acc = acc * (k as u128 + i) / i;
    }
    acc
}

/// Uniform draw from the simplex.
pub fn random_belief<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Belief {
    let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    Belief::from_weights(w)
}

/// Uniform draw conditioned on every coordinate being at least `floor`.
pub fn random_interior<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> Belief {
    assert!(floor * (n as f64) < 1.0);
    let free = random_belief(rng, n);
    let rest = 1.0 - floor * n as f64;
    Belief::normalized(free.coords().iter().map(|c| floor + rest * c).collect())
}
