//! Searches for Blackwell violations of a distortion rule and packages them
//! as independently checkable certificates.
//!
//! The search runs in stages, cheapest first: triples built around the
//! prior, erring vertices and the largest observed errors; an exhaustive
//! threshold scan when there are two states; local convexity probes; mixtures
//! of erring points; and finally random experiment pairs. Every stage is a
//! list of candidates evaluated with [`crate::par::find_first`], so the
//! reported certificate is the first in list order whatever the scheduling.

pub mod certificate;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use certificate::{verify_certificate, Verification, ViolationCertificate, GAP_THRESHOLD};
use search::{Candidate, Search};

use crate::decision::{DecisionProblem, Selector, Welfare, WelfareMode};
use crate::distortions::{
    classify_image, is_affine, is_occasionally_coarse, is_occasionally_stubborn,
    is_trivial_on_interior, CoarseVerdict, Distortion, DistortionError, ErrorKind, StubbornVerdict,
};
use crate::par::{self, Execution};
use crate::simplex::{lattice, lattice_size, Belief, Hyperplane};

/// Largest number of census nodes when there are three or more states.
pub const CENSUS_CAP: u128 = 20_000;
/// Mixture weights tried between an erring point and each partner.
const LADDER: [f64; 6] = [0.9, 0.75, 0.5, 0.3, 0.15, 0.05];
/// Erring points taken by error size, and spread over the census.
const TOP_ERRORS: usize = 8;
const SPREAD_ERRORS: usize = 16;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("no violation found after {pairs_tried} experiment pairs")]
    BudgetExhausted { pairs_tried: usize },
    #[error("expected a {expected:?} error at the given belief, found {found:?}")]
    WrongErrorKind {
        expected: ErrorKind,
        found: ErrorKind,
    },
    #[error("prior must be interior")]
    PriorNotInterior,
    #[error(transparent)]
    Distortion(#[from] DistortionError),
}

/// A two-action problem: safe pays 0, bet pays `α·x − β`.
pub fn hyperplane_problem(h: &Hyperplane) -> DecisionProblem {
    DecisionProblem::from_hyperplane(h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Census resolution: `grid` points per unit.
    pub grid: usize,
    /// Experiment pairs to try before giving up.
    pub budget: usize,
    pub mode: WelfareMode,
    pub seed: u64,
    /// Error classification tolerance.
    pub tol: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            grid: 201,
            budget: 5000,
            mode: WelfareMode::Single,
            seed: 0,
            tol: 1e-9,
            exec: Execution::Parallel,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorCensus {
    pub nodes: usize,
    pub none: usize,
    pub expansive: usize,
    pub contractive: usize,
    pub max_error: f64,
    pub at_prior: Option<ErrorKind>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErringPoint {
    pub x: Belief,
    pub image: Belief,
    pub kind: ErrorKind,
    pub size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckerVerdicts {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coarse: Option<CoarseVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stubborn: Option<StubbornVerdict>,
    pub trivial: bool,
    pub affine: bool,
}

impl CheckerVerdicts {
    /// Whether the family checker for this number of states passes.
    pub fn structural_holds(&self) -> bool {
        match (&self.coarse, &self.stubborn) {
            (Some(c), _) => c.holds(),
            (_, Some(s)) => s.holds(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditOutcome {
    pub certificate: Option<ViolationCertificate>,
    pub pairs_tried: usize,
    pub census: ErrorCensus,
    pub checkers: CheckerVerdicts,
}

pub(crate) fn welfare_at(
    rule: &Distortion,
    prior: &Belief,
    problem: &DecisionProblem,
    selector: &Selector,
    mode: WelfareMode,
    x: &Belief,
) -> Result<f64, DistortionError> {
    Welfare {
        problem,
        rule,
        prior,
        selector,
        mode,
    }
    .at(x)
}

/// Census nodes: `{0, 1/g', ..., 1}` for two states, otherwise the lattice
/// with denominator `g' ≤ grid − 1` chosen to stay under [`CENSUS_CAP`].
pub fn census_nodes(n: usize, grid: usize) -> Vec<Belief> {
    let mut k = grid.saturating_sub(1).max(1);
    if n == 2 {
        return (0..=k)
            .map(|i| Belief::binary(i as f64 / k as f64))
            .collect();
    }
    while k > 1 && lattice_size(n, k) > CENSUS_CAP {
        k -= 1;
    }
    lattice(n, k)
}

/// Classifies the error at every census node and at the prior.
pub fn error_census(
    d: &Distortion,
    mu: &Belief,
    grid: usize,
    tol: f64,
    exec: Execution,
) -> Result<(ErrorCensus, Vec<ErringPoint>), DistortionError> {
    let nodes = census_nodes(mu.dim(), grid);
    let classified = par::map_range(exec, nodes.len(), |i| {
        let img = d.evaluate(mu, &nodes[i])?;
        let kind = classify_image(mu, &nodes[i], &img, tol).kind;
        Ok::<_, DistortionError>((img, kind))
    });
    let mut census = ErrorCensus {
        nodes: nodes.len(),
        ..Default::default()
    };
    let mut erring = Vec::new();
    for (x, r) in nodes.into_iter().zip(classified) {
        let (image, kind) = r?;
        let size = image.dist_inf(&x);
        census.max_error = census
            .max_error
            .max(if kind == ErrorKind::None { 0.0 } else { size });
        match kind {
            ErrorKind::None => census.none += 1,
            ErrorKind::Expansive => census.expansive += 1,
            ErrorKind::Contractive => census.contractive += 1,
        }
        if kind != ErrorKind::None {
            erring.push(ErringPoint {
                x,
                image,
                kind,
                size,
            });
        }
    }
    let at_mu = d.evaluate(mu, mu)?;
    census.at_prior = Some(classify_image(mu, mu, &at_mu, tol).kind);
    Ok((census, erring))
}

/// Runs the structural checkers that apply to this number of states.
pub fn run_checkers(
    d: &Distortion,
    mu: &Belief,
    grid: usize,
    tol: f64,
) -> Result<CheckerVerdicts, DistortionError> {
    let n = mu.dim();
    let (coarse, stubborn) = if n == 2 {
        (
            Some(is_occasionally_coarse(d, mu, grid.max(100), tol)?),
            None,
        )
    } else {
        (None, Some(is_occasionally_stubborn(d, mu, 24, tol)?))
    };
    Ok(CheckerVerdicts {
        coarse,
        stubborn,
        trivial: is_trivial_on_interior(d, mu, grid.max(100), tol)?,
        affine: is_affine(d, mu, 1e-7)?,
    })
}

fn check_inputs(d: &Distortion, mu: &Belief) -> Result<(), AuditError> {
    if !mu.is_interior() {
        return Err(AuditError::PriorNotInterior);
    }
    d.validate()?;
    d.evaluate(mu, mu)?;
    Ok(())
}

/// Full audit: census, structural checkers, then the staged search.
pub fn audit(d: &Distortion, mu: &Belief, cfg: &AuditConfig) -> Result<AuditOutcome, AuditError> {
    check_inputs(d, mu)?;
    let (census, erring) = error_census(d, mu, cfg.grid, cfg.tol, cfg.exec)?;
    let checkers = run_checkers(d, mu, cfg.grid, cfg.tol)?;
    let mut candidates = Vec::new();
    let n = mu.dim();
    let recipe = |kind| recipe_for(kind, n, cfg.mode);

    if census.at_prior != Some(ErrorKind::None) {
        candidates.extend(prior_triples(mu));
    }
    for p in erring.iter().filter(|p| p.x.face(0.0).dim() == 0) {
        let (name, ray) = match p.kind {
            ErrorKind::Contractive => (recipe(p.kind), true),
            _ => ("vertex-segment", false),
        };
        candidates.extend(partner_triples(mu, &p.x, name, ray));
    }
    let selected = select_erring(&erring);
    for p in &selected {
        let ray = p.kind == ErrorKind::Contractive;
        candidates.extend(partner_triples(mu, &p.x, recipe(p.kind), ray));
    }
    if n == 2 {
        candidates.extend(thresholds(&erring, mu, d, cfg.grid)?);
    }
    let local = if cfg.mode == WelfareMode::Double {
        "affine-defect"
    } else {
        "local-convexity"
    };
    for p in &selected {
        candidates.extend(local_triples(&p.x, local));
    }
    for (i, a) in selected.iter().enumerate() {
        for b in &selected[i + 1..] {
            for &lambda in &[0.5, 0.25, 0.75] {
                candidates.push(Candidate::Triple {
                    x: a.x.clone(),
                    x_prime: b.x.clone(),
                    lambda,
                    recipe: "error-mixture",
                });
            }
        }
    }
    let (certificate, pairs_tried) = run(d, mu, cfg, candidates)?;
    Ok(AuditOutcome {
        certificate,
        pairs_tried,
        census,
        checkers,
    })
}

/// Targeted search around a belief with an expansive error.
pub fn audit_expansive(
    d: &Distortion,
    mu: &Belief,
    x0: &Belief,
    cfg: &AuditConfig,
) -> Result<ViolationCertificate, AuditError> {
    targeted(d, mu, x0, cfg, ErrorKind::Expansive)
}

/// Targeted search around a belief with a contractive error.
pub fn audit_contractive(
    d: &Distortion,
    mu: &Belief,
    x0: &Belief,
    cfg: &AuditConfig,
) -> Result<ViolationCertificate, AuditError> {
    targeted(d, mu, x0, cfg, ErrorKind::Contractive)
}

fn targeted(
    d: &Distortion,
    mu: &Belief,
    x0: &Belief,
    cfg: &AuditConfig,
    expected: ErrorKind,
) -> Result<ViolationCertificate, AuditError> {
    check_inputs(d, mu)?;
    let image = d.evaluate(mu, x0)?;
    let found = classify_image(mu, x0, &image, cfg.tol).kind;
    if found != expected {
        return Err(AuditError::WrongErrorKind { expected, found });
    }
    let n = mu.dim();
    let mut candidates = partner_triples(
        mu,
        x0,
        recipe_for(expected, n, cfg.mode),
        expected == ErrorKind::Contractive,
    );
    candidates.extend(local_triples(x0, "local-convexity"));
    candidates.truncate(cfg.budget);
    let tried = candidates.len();
    match run_list(d, mu, cfg, &candidates) {
        Some((_, c)) => Ok(c),
        None => Err(AuditError::BudgetExhausted { pairs_tried: tried }),
    }
}

fn recipe_for(kind: ErrorKind, n: usize, mode: WelfareMode) -> &'static str {
    match (mode, kind, n) {
        (WelfareMode::Double, _, _) => "affine-defect",
        (_, ErrorKind::Contractive, 2) => "contraction-threshold",
        (_, ErrorKind::Contractive, _) => "contraction-separation",
        _ => "expansive-separation",
    }
}

/// Evaluates the structured candidates, then random pairs until the budget
/// is spent. Returns the certificate (re-verified) and the pairs tried.
fn run(
    d: &Distortion,
    mu: &Belief,
    cfg: &AuditConfig,
    mut candidates: Vec<Candidate>,
) -> Result<(Option<ViolationCertificate>, usize), AuditError> {
    candidates.truncate(cfg.budget);
    let structured = candidates.len();
    if let Some((i, c)) = run_list(d, mu, cfg, &candidates) {
        return Ok((Some(c), i + 1));
    }
    let random: Vec<Candidate> = (0..(cfg.budget - structured) as u64)
        .map(|stream| Candidate::Random { stream })
        .collect();
    if let Some((i, c)) = run_list(d, mu, cfg, &random) {
        return Ok((Some(c), structured + i + 1));
    }
    Ok((None, cfg.budget.max(structured)))
}

fn run_list(
    d: &Distortion,
    mu: &Belief,
    cfg: &AuditConfig,
    candidates: &[Candidate],
) -> Option<(usize, ViolationCertificate)> {
    let search = Search {
        rule: d,
        prior: mu,
        mode: cfg.mode,
        seed: cfg.seed,
        selector: Selector::default(),
        line: if mu.dim() == 2 {
            census_nodes(2, cfg.grid)
        } else {
            Vec::new()
        },
    };
    par::find_first(cfg.exec, candidates.len(), |i| {
        search
            .evaluate(&candidates[i])
            .filter(|c| verify_certificate(c, GAP_THRESHOLD).valid)
    })
}

/// Largest errors first, then an even spread over the rest, without repeats.
fn select_erring(erring: &[ErringPoint]) -> Vec<ErringPoint> {
    let mut order: Vec<usize> = (0..erring.len()).collect();
    order.sort_by(|&a, &b| erring[b].size.total_cmp(&erring[a].size).then(a.cmp(&b)));
    let mut picked: Vec<usize> = order.into_iter().take(TOP_ERRORS).collect();
    if !erring.is_empty() {
        let stride = (erring.len() / SPREAD_ERRORS).max(1);
        for i in (0..erring.len()).step_by(stride).take(SPREAD_ERRORS) {
            if !picked.contains(&i) {
                picked.push(i);
            }
        }
    }
    picked.into_iter().map(|i| erring[i].clone()).collect()
}

/// Farthest point of the simplex from `from` along `dir`.
fn ray_exit(from: &Belief, dir: &[f64]) -> Option<Belief> {
    let s = from
        .coords()
        .iter()
        .zip(dir)
        .filter(|(_, &d)| d < -1e-15)
        .map(|(&f, &d)| f / -d)
        .fold(f64::INFINITY, f64::min);
    if !s.is_finite() || s <= 1e-12 {
        return None;
    }
    let w = from
        .coords()
        .iter()
        .zip(dir)
        .map(|(f, d)| (f + s * d).max(0.0))
        .collect();
    Some(Belief::from_weights(w))
}

fn diff(a: &Belief, b: &Belief) -> Vec<f64> {
    a.coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| x - y)
        .collect()
}

/// The prior is the mixture point: pairs of beliefs symmetric about it.
fn prior_triples(mu: &Belief) -> Vec<Candidate> {
    let n = mu.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let mut dir = vec![0.0; n];
            dir[i] = 1.0;
            dir[j] = -1.0;
            let reach = mu.coords()[i].min(mu.coords()[j]);
            for frac in [1.0, 0.5, 0.25] {
                let s = reach * frac;
                let shift = |sign: f64| {
                    Belief::from_weights(
                        mu.coords()
                            .iter()
                            .zip(&dir)
                            .map(|(m, d)| m + sign * s * d)
                            .collect(),
                    )
                };
                out.push(Candidate::Triple {
                    x: shift(1.0),
                    x_prime: shift(-1.0),
                    lambda: 0.5,
                    recipe: "prior-error",
                });
            }
        }
    }
    out
}

/// Triples pairing `x0` with scaffold points: across the prior, the
/// vertices, and points near the prior. With `ray`, also the points on the
/// ray from the prior through `x0`.
fn partner_triples(mu: &Belief, x0: &Belief, recipe: &'static str, ray: bool) -> Vec<Candidate> {
    let n = mu.dim();
    let mut partners = Vec::new();
    let away = diff(mu, x0);
    if let Some(far) = ray_exit(mu, &away) {
        partners.push(far.clone());
        partners.push(far.mix(mu, 0.5));
    }
    if ray {
        if let Some(out) = ray_exit(x0, &diff(x0, mu)) {
            partners.push(out.clone());
            partners.push(out.mix(x0, 0.5));
        }
    }
    partners.push(mu.clone());
    for i in 0..n {
        let v = Belief::vertex(n, i);
        partners.push(mu.mix(&v, 0.95));
        partners.push(v);
    }
    let mut out = Vec::new();
    for p in partners {
        if p.dist_inf(x0) <= 1e-9 {
            continue;
        }
        for &lambda in &LADDER {
            out.push(Candidate::Triple {
                x: x0.clone(),
                x_prime: p.clone(),
                lambda,
                recipe,
            });
        }
    }
    out
}

/// Short symmetric chords through `x0` along coordinate-pair directions.
fn local_triples(x0: &Belief, recipe: &'static str) -> Vec<Candidate> {
    let n = x0.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut dir = vec![0.0; n];
            dir[i] = 1.0;
            dir[j] = -1.0;
            let reach = x0.coords()[i].min(x0.coords()[j]);
            let back = x0.coords()[i].max(x0.coords()[j]);
            let reach = if reach > 1e-12 { reach } else { back };
            for frac in [0.25, 0.06, 0.015] {
                let s = reach * frac;
                let forward: Vec<f64> = x0
                    .coords()
                    .iter()
                    .zip(&dir)
                    .map(|(x, d)| x + s * d)
                    .collect();
                let backward: Vec<f64> = x0
                    .coords()
                    .iter()
                    .zip(&dir)
                    .map(|(x, d)| x - s * d)
                    .collect();
                if forward.iter().chain(&backward).any(|&v| v < 0.0) {
                    continue;
                }
                out.push(Candidate::Triple {
                    x: Belief::from_weights(forward),
                    x_prime: Belief::from_weights(backward),
                    lambda: 0.5,
                    recipe,
                });
            }
        }
    }
    out
}

/// Two states: every threshold strictly between consecutive distinct images
/// of the census grid, in both bet directions.
fn thresholds(
    erring: &[ErringPoint],
    mu: &Belief,
    d: &Distortion,
    grid: usize,
) -> Result<Vec<Candidate>, DistortionError> {
    if erring.is_empty() && d.evaluate(mu, mu)?.dist_inf(mu) <= 1e-12 {
        return Ok(Vec::new());
    }
    let mut values: Vec<f64> = census_nodes(2, grid)
        .iter()
        .map(|x| d.evaluate(mu, x).map(|y| y.coords()[0]))
        .collect::<Result<_, _>>()?;
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    let mut out = Vec::new();
    for w in values.windows(2) {
        let t = 0.5 * (w[0] + w[1]);
        out.push(Candidate::Threshold { sign: 1.0, t });
        out.push(Candidate::Threshold { sign: -1.0, t });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(budget: usize) -> AuditConfig {
        AuditConfig {
            budget,
            ..Default::default()
        }
    }

    #[test]
    fn grether_two_states_is_caught_and_verifies() {
        let d = Distortion::grether(2.0, 1.0).unwrap();
        let mu = Belief::binary(0.4);
        let out = audit(&d, &mu, &cfg(2000)).unwrap();
        let c = out.certificate.expect("violation");
        assert!(c.gap <= -GAP_THRESHOLD);
        assert!(verify_certificate(&c, GAP_THRESHOLD).valid);
        assert!(!out.checkers.structural_holds());
    }

    #[test]
    fn expansive_target_finds_certificate() {
        let d = Distortion::grether(2.0, 1.0).unwrap();
        let mu = Belief::binary(0.5);
        let c = audit_expansive(&d, &mu, &Belief::binary(0.7), &cfg(500)).unwrap();
        assert!(verify_certificate(&c, GAP_THRESHOLD).valid);
    }

    #[test]
    fn wrong_error_kind_is_reported() {
        let d = Distortion::grether(2.0, 1.0).unwrap();
        let mu = Belief::binary(0.5);
        let err = audit_contractive(&d, &mu, &Belief::binary(0.7), &cfg(100)).unwrap_err();
        assert!(matches!(err, AuditError::WrongErrorKind { .. }));
    }

    #[test]
    fn bayes_and_coarse_exhaust_the_budget() {
        let mu = Belief::binary(0.5);
        for d in [
            Distortion::Bayes,
            Distortion::occ_coarse(0.3, 0.7, 0.2, 0.8).unwrap(),
        ] {
            let out = audit(&d, &mu, &cfg(300)).unwrap();
            assert!(out.certificate.is_none(), "{}", d.label());
            assert_eq!(out.pairs_tried, 300);
        }
    }

    #[test]
    fn shrinkage_three_states_is_caught() {
        let d = Distortion::shrinkage(0.5).unwrap();
        let mu = Belief::new(vec![0.2, 0.3, 0.5]).unwrap();
        let out = audit(
            &d,
            &mu,
            &AuditConfig {
                grid: 21,
                ..cfg(1000)
            },
        )
        .unwrap();
        assert!(out.certificate.is_some());
    }

    #[test]
    fn tampering_is_detected() {
        let d = Distortion::grether(2.0, 1.0).unwrap();
        let mu = Belief::binary(0.5);
        let c = audit_expansive(&d, &mu, &Belief::binary(0.7), &cfg(500)).unwrap();

        let mut swapped = c.clone();
        std::mem::swap(&mut swapped.pi, &mut swapped.pi_prime);
        swapped.gap = -swapped.gap;
        assert_eq!(
            verify_certificate(&swapped, GAP_THRESHOLD)
                .reason
                .as_deref(),
            Some("dominance")
        );

        let mut shifted = c.clone();
        let mut payoff = shifted.problem.payoff().to_vec();
        payoff[1][0] += 0.5;
        shifted.problem = DecisionProblem::new(payoff, None).unwrap();
        assert_eq!(
            verify_certificate(&shifted, GAP_THRESHOLD)
                .reason
                .as_deref(),
            Some("gap-mismatch")
        );
    }

    #[test]
    fn search_is_deterministic_across_execution() {
        let d = Distortion::grether(0.5, 1.5).unwrap();
        let mu = Belief::new(vec![0.2, 0.3, 0.5]).unwrap();
        let base = AuditConfig {
            grid: 21,
            seed: 7,
            ..cfg(600)
        };
        let par = audit(&d, &mu, &base).unwrap().certificate.unwrap();
        let seq = audit(
            &d,
            &mu,
            &AuditConfig {
                exec: Execution::Sequential,
                ..base
            },
        )
        .unwrap()
        .certificate
        .unwrap();
        assert_eq!(par.to_json(), seq.to_json());
    }
}
