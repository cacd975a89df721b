//! Statistical experiments, Bayesian posteriors, garblings and the
//! mean-preserving contraction (MPC) order.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, Relation};
use crate::simplex::{
    affinely_independent, combine, dist_inf, in_convex_hull, random_belief, Belief, GeometryError,
    TAU_GEO,
};

/// Rows and probabilities are accepted within this tolerance and renormalized.
const INPUT_SUM_TOL: f64 = 1e-9;
/// Barycenter agreement required by [`experiment_from_posteriors`].
pub const BARYCENTER_TOL: f64 = 1e-10;
/// Smallest probability a re-solved support point may carry.
const MIN_WEIGHT: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ExperimentError {
    #[error("prior must have full support")]
    PriorNotInterior,
    #[error("barycenter mismatch (distance {0:e})")]
    BarycenterMismatch(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("support is not affinely independent")]
    NotAffinelyIndependent,
    #[error("target is outside the hull of the remaining support")]
    TargetOutsideOppositeHull,
    #[error("re-solved weights are not strictly positive")]
    InfeasibleWeights,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn normalize_row(row: &[f64], what: &str) -> Result<Vec<f64>, ExperimentError> {
    if row.iter().any(|v| !v.is_finite() || *v < -INPUT_SUM_TOL) {
        return Err(ExperimentError::InvalidExperiment(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > INPUT_SUM_TOL {
        return Err(ExperimentError::InvalidExperiment(format!(
            "{what} sums to {sum}"
        )));
    }
    let clipped: Vec<f64> = row.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    Ok(clipped.into_iter().map(|v| v / total).collect())
}

#[derive(Deserialize)]
struct RawExperiment {
    likelihoods: Vec<Vec<f64>>,
    #[serde(default)]
    signals: Vec<String>,
}

/// Likelihood matrix: row `θ` is the signal distribution `π(· | θ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExperiment")]
pub struct Experiment {
    likelihoods: Vec<Vec<f64>>,
    signals: Vec<String>,
}

impl TryFrom<RawExperiment> for Experiment {
    type Error = ExperimentError;

    fn try_from(raw: RawExperiment) -> Result<Self, Self::Error> {
        let signals = if raw.signals.is_empty() {
            None
        } else {
            Some(raw.signals)
        };
        Experiment::new(raw.likelihoods, signals)
    }
}

impl Experiment {
    pub fn new(
        likelihoods: Vec<Vec<f64>>,
        signals: Option<Vec<String>>,
    ) -> Result<Self, ExperimentError> {
        if likelihoods.is_empty() || likelihoods[0].is_empty() {
            return Err(ExperimentError::InvalidExperiment(
                "need at least one state and one signal".into(),
            ));
        }
        let width = likelihoods[0].len();
        let rows = likelihoods
            .iter()
            .enumerate()
            .map(|(t, row)| {
                if row.len() != width {
                    return Err(ExperimentError::DimensionMismatch {
                        expected: width,
                        got: row.len(),
                    });
                }
                normalize_row(row, &format!("likelihood row {t}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let signals = signals.unwrap_or_else(|| (0..width).map(|j| format!("s{j}")).collect());
        if signals.len() != width {
            return Err(ExperimentError::DimensionMismatch {
                expected: width,
                got: signals.len(),
            });
        }
        Ok(Self {
            likelihoods: rows,
            signals,
        })
    }

    /// One signal, uninformative.
    pub fn null(n: usize) -> Self {
        Self::new(vec![vec![1.0]; n], None).unwrap()
    }

    /// Signal reveals the state.
    pub fn full_information(n: usize) -> Self {
        let rows = (0..n)
            .map(|t| (0..n).map(|s| if s == t { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(rows, None).unwrap()
    }

    /// Two states, two signals, each state's own signal with probability `accuracy`.
    pub fn binary_symmetric(accuracy: f64) -> Self {
        Self::new(
            vec![
                vec![accuracy, 1.0 - accuracy],
                vec![1.0 - accuracy, accuracy],
            ],
            None,
        )
        .unwrap()
    }

    /// Each likelihood row drawn uniformly from the simplex over `signals`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, signals: usize) -> Self {
        let rows = (0..n)
            .map(|_| random_belief(rng, signals).coords().to_vec())
            .collect();
        Self::new(rows, None).unwrap()
    }

    pub fn likelihoods(&self) -> &[Vec<f64>] {
        &self.likelihoods
    }

    pub fn signals(&self) -> &[String] {
        &self.signals
    }

    pub fn num_states(&self) -> usize {
        self.likelihoods.len()
    }

    pub fn num_signals(&self) -> usize {
        self.signals.len()
    }
}

#[derive(Deserialize)]
struct RawGarbling(Vec<Vec<f64>>);

/// Row-stochastic post-processing of signals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGarbling")]
pub struct GarblingMatrix {
    entries: Vec<Vec<f64>>,
}

impl TryFrom<RawGarbling> for GarblingMatrix {
    type Error = ExperimentError;

    fn try_from(raw: RawGarbling) -> Result<Self, Self::Error> {
        GarblingMatrix::new(raw.0)
    }
}

impl GarblingMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self, ExperimentError> {
        if entries.is_empty() || entries[0].is_empty() {
            return Err(ExperimentError::InvalidExperiment("empty garbling".into()));
        }
        let width = entries[0].len();
        let rows = entries
            .iter()
            .enumerate()
            .map(|(i, row)| {
                if row.len() != width {
                    return Err(ExperimentError::DimensionMismatch {
                        expected: width,
                        got: row.len(),
                    });
                }
                normalize_row(row, &format!("garbling row {i}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { entries: rows })
    }

    pub fn identity(size: usize) -> Self {
        Experiment::full_information(size).into_garbling()
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, from: usize, to: usize) -> Self {
        Self::new(
            (0..from)
                .map(|_| random_belief(rng, to).coords().to_vec())
                .collect(),
        )
        .unwrap()
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }
}

impl Experiment {
    fn into_garbling(self) -> GarblingMatrix {
        GarblingMatrix {
            entries: self.likelihoods,
        }
    }
}

#[derive(Deserialize)]
struct RawPosterior {
    support: Vec<Belief>,
    probs: Vec<f64>,
}

/// Finite-support distribution over posterior beliefs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPosterior")]
pub struct PosteriorDistribution {
    support: Vec<Belief>,
    probs: Vec<f64>,
    #[serde(skip_serializing)]
    barycenter: Belief,
}

impl TryFrom<RawPosterior> for PosteriorDistribution {
    type Error = ExperimentError;

    fn try_from(raw: RawPosterior) -> Result<Self, Self::Error> {
        PosteriorDistribution::new(raw.support, raw.probs)
    }
}

impl PosteriorDistribution {
    /// Drops zero-probability points and merges points within `TAU_GEO`
    /// (probability-weighted position, summed probability).
    pub fn new(support: Vec<Belief>, probs: Vec<f64>) -> Result<Self, ExperimentError> {
        if support.is_empty() {
            return Err(ExperimentError::Geometry(GeometryError::EmptyInput));
        }
        if support.len() != probs.len() {
            return Err(ExperimentError::DimensionMismatch {
                expected: support.len(),
                got: probs.len(),
            });
        }
        let n = support[0].dim();
        if let Some(p) = support.iter().find(|p| p.dim() != n) {
            return Err(ExperimentError::DimensionMismatch {
                expected: n,
                got: p.dim(),
            });
        }
        let probs = normalize_row(&probs, "posterior probabilities")?;

        let mut pts: Vec<Belief> = Vec::new();
        let mut ws: Vec<f64> = Vec::new();
        for (x, w) in support.into_iter().zip(probs) {
            if w <= 0.0 {
                continue;
            }
            match pts.iter().position(|q| q.dist_inf(&x) <= TAU_GEO) {
                Some(j) => {
                    let total = ws[j] + w;
                    pts[j] = pts[j].mix(&x, ws[j] / total);
                    ws[j] = total;
                }
                None => {
                    pts.push(x);
                    ws.push(w);
                }
            }
        }
        let barycenter = combine(&pts, &ws);
        Ok(Self {
            support: pts,
            probs: ws,
            barycenter,
        })
    }

    pub fn dirac(x: Belief) -> Self {
        Self::new(vec![x], vec![1.0]).unwrap()
    }

    pub fn support(&self) -> &[Belief] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn barycenter(&self) -> &Belief {
        &self.barycenter
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Belief, f64)> {
        self.support.iter().zip(self.probs.iter().copied())
    }

    /// Probability assigned to the support point within `tol` of `x`.
    pub fn prob_of(&self, x: &Belief, tol: f64) -> f64 {
        self.iter()
            .filter(|(p, _)| p.dist_inf(x) <= tol)
            .map(|(_, w)| w)
            .sum()
    }

    /// `w * self + (1 - w) * other` as a mixture of distributions.
    pub fn mixture(&self, other: &PosteriorDistribution, w: f64) -> Self {
        let mut support = self.support.clone();
        support.extend(other.support.iter().cloned());
        let mut probs: Vec<f64> = self.probs.iter().map(|p| p * w).collect();
        probs.extend(other.probs.iter().map(|p| p * (1.0 - w)));
        Self::new(support, probs).unwrap()
    }
}

fn check_prior(prior: &Belief) -> Result<(), ExperimentError> {
    if prior.coords().iter().any(|&c| c <= 0.0) {
        return Err(ExperimentError::PriorNotInterior);
    }
    Ok(())
}

/// Bayesian posterior distribution induced by `experiment` at `prior`.
pub fn bayes(
    prior: &Belief,
    experiment: &Experiment,
) -> Result<PosteriorDistribution, ExperimentError> {
    check_prior(prior)?;
    let n = prior.dim();
    if experiment.num_states() != n {
        return Err(ExperimentError::DimensionMismatch {
            expected: n,
            got: experiment.num_states(),
        });
    }
    let mu = prior.coords();
    let mut support = Vec::new();
    let mut probs = Vec::new();
    for s in 0..experiment.num_signals() {
        let joint: Vec<f64> = (0..n)
            .map(|t| mu[t] * experiment.likelihoods[t][s])
            .collect();
        let p: f64 = joint.iter().sum();
        if p > 0.0 {
            support.push(Belief::from_weights(joint));
            probs.push(p);
        }
    }
    PosteriorDistribution::new(support, probs)
}

/// One signal per support point, with `π(s_j | θ) = p_j x_j(θ) / μ(θ)`.
pub fn experiment_from_posteriors(
    rho: &PosteriorDistribution,
    prior: &Belief,
) -> Result<Experiment, ExperimentError> {
    check_prior(prior)?;
    if rho.barycenter.dim() != prior.dim() {
        return Err(ExperimentError::DimensionMismatch {
            expected: prior.dim(),
            got: rho.barycenter.dim(),
        });
    }
    let gap = rho.barycenter.dist_inf(prior);
    if gap > BARYCENTER_TOL {
        return Err(ExperimentError::BarycenterMismatch(gap));
    }
    let n = prior.dim();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|t| {
            let row: Vec<f64> = rho
                .iter()
                .map(|(x, p)| p * x.coords()[t] / prior.coords()[t])
                .collect();
            let total: f64 = row.iter().sum();
            row.into_iter().map(|v| v / total).collect()
        })
        .collect();
    Experiment::new(rows, None)
}

/// Likelihoods multiplied on the right by the garbling.
pub fn garble(experiment: &Experiment, m: &GarblingMatrix) -> Result<Experiment, ExperimentError> {
    let s = experiment.num_signals();
    if m.entries.len() != s {
        return Err(ExperimentError::DimensionMismatch {
            expected: s,
            got: m.entries.len(),
        });
    }
    let width = m.entries[0].len();
    let rows = experiment
        .likelihoods
        .iter()
        .map(|row| {
            (0..width)
                .map(|k| row.iter().zip(&m.entries).map(|(a, g)| a * g[k]).sum())
                .collect()
        })
        .collect();
    Experiment::new(rows, None)
}

/// Whether some row-stochastic `M` has `‖π M − π′‖∞ <= tol`.
pub fn blackwell_dominates(pi: &Experiment, pi_prime: &Experiment, tol: f64) -> bool {
    garbling_between(pi, pi_prime, tol).is_some()
}

/// Witness garbling for [`blackwell_dominates`].
pub fn garbling_between(
    pi: &Experiment,
    pi_prime: &Experiment,
    tol: f64,
) -> Option<GarblingMatrix> {
    let n = pi.num_states();
    if pi_prime.num_states() != n {
        return None;
    }
    let s = pi.num_signals();
    let sp = pi_prime.num_signals();
    let var = |i: usize, k: usize| i * sp + k;
    let t = s * sp;
    let mut lp = LinearProgram::new(t + 1);
    let mut obj = vec![0.0; t + 1];
    obj[t] = 1.0;
    lp.minimize(obj);
    for i in 0..s {
        let terms: Vec<(usize, f64)> = (0..sp).map(|k| (var(i, k), 1.0)).collect();
        lp.constrain_terms(&terms, Relation::Eq, 1.0);
    }
    for th in 0..n {
        for k in 0..sp {
            let mut terms: Vec<(usize, f64)> =
                (0..s).map(|i| (var(i, k), pi.likelihoods[th][i])).collect();
            let target = pi_prime.likelihoods[th][k];
            terms.push((t, -1.0));
            lp.constrain_terms(&terms, Relation::Le, target);
            terms.last_mut().unwrap().1 = 1.0;
            lp.constrain_terms(&terms, Relation::Ge, target);
        }
    }
    let sol = lp.solve().ok()?;
    if sol.x[t] > tol {
        return None;
    }
    let entries = (0..s)
        .map(|i| (0..sp).map(|k| sol.x[var(i, k)]).collect())
        .collect();
    GarblingMatrix::new(entries).ok()
}

/// Whether `rho_prime` is a mean-preserving contraction of `rho`: each
/// `x′_i` splits into a distribution over `supp rho` with barycenter `x′_i`,
/// and the splits add back up to `rho`'s probabilities.
pub fn is_mpc(
    rho_prime: &PosteriorDistribution,
    rho: &PosteriorDistribution,
    tol: f64,
) -> Result<bool, ExperimentError> {
    let n = rho.barycenter.dim();
    if rho_prime.barycenter.dim() != n {
        return Err(ExperimentError::DimensionMismatch {
            expected: n,
            got: rho_prime.barycenter.dim(),
        });
    }
    let gap = rho.barycenter.dist_inf(&rho_prime.barycenter);
    if gap > tol.max(BARYCENTER_TOL) {
        return Err(ExperimentError::BarycenterMismatch(gap));
    }
    let kp = rho_prime.len();
    let k = rho.len();
    let var = |i: usize, j: usize| i * k + j;
    let t = kp * k;
    let mut lp = LinearProgram::new(t + 1);
    let mut obj = vec![0.0; t + 1];
    obj[t] = 1.0;
    lp.minimize(obj);
    for j in 0..k {
        let terms: Vec<(usize, f64)> = (0..kp).map(|i| (var(i, j), 1.0)).collect();
        lp.constrain_terms(&terms, Relation::Eq, rho.probs[j]);
    }
    for i in 0..kp {
        let terms: Vec<(usize, f64)> = (0..k).map(|j| (var(i, j), 1.0)).collect();
        lp.constrain_terms(&terms, Relation::Eq, rho_prime.probs[i]);
        for th in 0..n {
            let mut terms: Vec<(usize, f64)> = (0..k)
                .map(|j| (var(i, j), rho.support[j].coords()[th]))
                .collect();
            let target = rho_prime.probs[i] * rho_prime.support[i].coords()[th];
            terms.push((t, -1.0));
            lp.constrain_terms(&terms, Relation::Le, target);
            terms.last_mut().unwrap().1 = 1.0;
            lp.constrain_terms(&terms, Relation::Ge, target);
        }
    }
    Ok(match lp.solve() {
        Ok(sol) => sol.x[t] <= tol,
        Err(_) => false,
    })
}

/// MPC that is not also a mean-preserving spread of `rho`.
pub fn is_strict_mpc(
    rho_prime: &PosteriorDistribution,
    rho: &PosteriorDistribution,
    tol: f64,
) -> Result<bool, ExperimentError> {
    Ok(is_mpc(rho_prime, rho, tol)? && !is_mpc(rho, rho_prime, tol)?)
}

/// Moves support point `index` to `gamma x_index + (1 - gamma) target` and
/// re-solves all probabilities so the barycenter is unchanged.
pub fn bring_point_in(
    rho: &PosteriorDistribution,
    index: usize,
    gamma: f64,
    target: &Belief,
) -> Result<PosteriorDistribution, ExperimentError> {
    if index >= rho.len() {
        return Err(ExperimentError::InvalidParameter(format!(
            "index {index} out of range for support of size {}",
            rho.len()
        )));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(ExperimentError::InvalidParameter(format!(
            "gamma must lie in (0, 1), got {gamma}"
        )));
    }
    if !affinely_independent(&rho.support, TAU_GEO)? || rho.len() > rho.barycenter.dim() {
        return Err(ExperimentError::NotAffinelyIndependent);
    }
    let others: Vec<Belief> = rho
        .support
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != index)
        .map(|(_, x)| x.clone())
        .collect();
    if others.is_empty() || !in_convex_hull(target, &others, TAU_GEO) {
        return Err(ExperimentError::TargetOutsideOppositeHull);
    }
    let moved = rho.support[index].mix(target, gamma);
    let mut support = rho.support.clone();
    support[index] = moved;
    let weights = solve_weights(&support, &rho.barycenter)?;
    if weights.iter().any(|&w| w <= MIN_WEIGHT) {
        return Err(ExperimentError::InfeasibleWeights);
    }
    PosteriorDistribution::new(support, weights)
}

/// Unique weights with `Σ w_j x_j = target`, by least squares on an
/// affinely independent support.
pub fn solve_weights(support: &[Belief], target: &Belief) -> Result<Vec<f64>, ExperimentError> {
    let n = target.dim();
    let k = support.len();
    let a = DMatrix::from_fn(n, k, |r, c| support[c].coords()[r]);
    let b = DVector::from_column_slice(target.coords());
    let svd = a.clone().svd(true, true);
    let w = svd
        .solve(&b, 1e-12)
        .map_err(|_| ExperimentError::InfeasibleWeights)?;
    let resid = &a * &w - &b;
    if resid.amax() > 1e-9 {
        return Err(ExperimentError::InfeasibleWeights);
    }
    Ok(w.iter().copied().collect())
}

/// Sup-distance between the probability vectors of two distributions with
/// identical support order; used only in tests and diagnostics.
pub fn probs_distance(a: &PosteriorDistribution, b: &PosteriorDistribution) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    dist_inf(&a.probs, &b.probs)
}
