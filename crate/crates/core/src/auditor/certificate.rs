//! Violation certificates and their independent re-verification.

use serde::{Deserialize, Serialize};

use crate::decision::{DecisionProblem, Selector, Welfare, WelfareMode};
use crate::distortions::Distortion;
use crate::experiments::{bayes, blackwell_dominates, Experiment};
use crate::simplex::Belief;

/// Smallest admissible violation.
pub const GAP_THRESHOLD: f64 = 1e-6;
/// Recomputed gap must match the stored one within this tolerance.
pub const GAP_MATCH_TOL: f64 = 1e-9;
/// Tolerance of the garbling feasibility check.
pub const DOMINANCE_TOL: f64 = 1e-9;

/// A Blackwell-ordered experiment pair and a decision problem under which the
/// rule does strictly worse with the more informative experiment.
///
/// The rule is embedded so that a third party can recompute both expected
/// payoffs without any other input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationCertificate {
    pub prior: Belief,
    pub pi: Experiment,
    pub pi_prime: Experiment,
    pub problem: DecisionProblem,
    pub selector: Selector,
    pub mode: WelfareMode,
    /// `E_pi W − E_pi_prime W`; negative.
    pub gap: f64,
    pub recipe: String,
    pub seed: u64,
    pub rule: Distortion,
}

impl ViolationCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub valid: bool,
    /// `dominance`, `gap-mismatch`, `gap-not-negative` or `invalid-input`.
    pub reason: Option<String>,
    pub detail: Option<String>,
}

impl Verification {
    fn ok() -> Self {
        Self {
            valid: true,
            reason: None,
            detail: None,
        }
    }

    fn fail(reason: &str, detail: impl Into<String>) -> Self {
        Self {
            valid: false,
            reason: Some(reason.into()),
            detail: Some(detail.into()),
        }
    }
}

/// Expected welfare of `experiment` at the certificate's prior, computed
/// from the raw likelihoods.
pub fn experiment_value(
    rule: &Distortion,
    prior: &Belief,
    problem: &DecisionProblem,
    selector: &Selector,
    mode: WelfareMode,
    experiment: &Experiment,
) -> Result<f64, String> {
    let rho = bayes(prior, experiment).map_err(|e| e.to_string())?;
    Welfare {
        problem,
        rule,
        prior,
        selector,
        mode,
    }
    .expected(&rho)
    .map_err(|e| e.to_string())
}

/// Recomputes dominance and both expected payoffs, then checks the gap.
pub fn verify_certificate(c: &ViolationCertificate, tol: f64) -> Verification {
    let n = c.prior.dim();
    if c.pi.num_states() != n || c.pi_prime.num_states() != n || c.problem.num_states() != n {
        return Verification::fail("invalid-input", "state counts disagree");
    }
    if !c.prior.is_interior() {
        return Verification::fail("invalid-input", "prior is not interior");
    }
    if let Err(e) = c.rule.validate() {
        return Verification::fail("invalid-input", e.to_string());
    }
    if !blackwell_dominates(&c.pi, &c.pi_prime, DOMINANCE_TOL) {
        return Verification::fail("dominance", "pi_prime is not a garbling of pi");
    }
    let value =
        |e: &Experiment| experiment_value(&c.rule, &c.prior, &c.problem, &c.selector, c.mode, e);
    let gap = match (value(&c.pi), value(&c.pi_prime)) {
        (Ok(a), Ok(b)) => a - b,
        (Err(e), _) | (_, Err(e)) => return Verification::fail("invalid-input", e),
    };
    if (gap - c.gap).abs() > GAP_MATCH_TOL || !c.gap.is_finite() {
        return Verification::fail(
            "gap-mismatch",
            format!("recomputed {gap:e}, stored {:e}", c.gap),
        );
    }
    if gap > -tol {
        return Verification::fail("gap-not-negative", format!("gap {gap:e}"));
    }
    Verification::ok()
}
