//! Finite decision problems, the Bayesian value function `V`, the distorted
//! welfare `W`, and value-of-information computations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distortions::{Distortion, DistortionError};
use crate::experiments::PosteriorDistribution;
use crate::par::{self, Execution};
use crate::simplex::{dot, random_belief, Belief, Hyperplane};

/// Argmax ties are resolved within this tolerance.
pub const TIE_TOL: f64 = 1e-10;
/// Barycenter agreement required by [`expected_payoff`].
pub const PRIOR_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DecisionError {
    #[error("barycenter differs from the prior by {0:e}")]
    BarycenterMismatch(f64),
    #[error("invalid decision problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
}

#[derive(Deserialize)]
struct RawProblem {
    payoff: Vec<Vec<f64>>,
    #[serde(default)]
    actions: Vec<String>,
}

/// Payoff matrix: row `a` holds `u(a, θ)` for each state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem")]
pub struct DecisionProblem {
    payoff: Vec<Vec<f64>>,
    actions: Vec<String>,
}

impl TryFrom<RawProblem> for DecisionProblem {
    type Error = DecisionError;

    fn try_from(raw: RawProblem) -> Result<Self, Self::Error> {
        let actions = (!raw.actions.is_empty()).then_some(raw.actions);
        DecisionProblem::new(raw.payoff, actions)
    }
}

impl DecisionProblem {
    pub fn new(payoff: Vec<Vec<f64>>, actions: Option<Vec<String>>) -> Result<Self, DecisionError> {
        let bad = |m: String| Err(DecisionError::InvalidProblem(m));
        if payoff.is_empty() || payoff[0].is_empty() {
            return bad("need at least one action and one state".into());
        }
        let n = payoff[0].len();
        if payoff.iter().any(|r| r.len() != n) {
            return bad("payoff rows differ in length".into());
        }
        if payoff.iter().flatten().any(|v| !v.is_finite()) {
            return bad("payoffs must be finite".into());
        }
        let actions =
            actions.unwrap_or_else(|| (0..payoff.len()).map(|a| format!("a{a}")).collect());
        if actions.len() != payoff.len() {
            return bad("one label per action".into());
        }
        Ok(Self { payoff, actions })
    }

    /// Two actions: a safe action paying 0 and a bet paying `α_θ − β`, so
    /// that `V(x) = max{0, α·x − β}`.
    pub fn from_hyperplane(h: &Hyperplane) -> Self {
        let bet = h.normal.iter().map(|a| a - h.offset).collect();
        Self::new(
            vec![vec![0.0; h.normal.len()], bet],
            Some(vec!["safe".into(), "bet".into()]),
        )
        .expect("finite hyperplane")
    }

    /// Two states, actions `a ∈ {0, 1/(k-1), ..., 1}`, payoff
    /// `−(a − θ)² + shift`. The first coordinate of a belief is the
    /// probability of `θ = 1`, so `V(x) = −x(1 − x) + shift` on the grid.
    pub fn quadratic_loss(actions: usize, shift: f64) -> Self {
        let k = actions.max(2);
        let grid: Vec<f64> = (0..k).map(|i| i as f64 / (k - 1) as f64).collect();
        let payoff = grid
            .iter()
            .map(|&a| vec![-(a - 1.0) * (a - 1.0) + shift, -a * a + shift])
            .collect();
        let labels = grid.iter().map(|a| format!("{a}")).collect();
        Self::new(payoff, Some(labels)).unwrap()
    }

    /// Random problem with `actions` payoff rows drawn uniformly from [-1, 1].
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, actions: usize) -> Self {
        let payoff = (0..actions)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect();
        Self::new(payoff, None).unwrap()
    }

    pub fn payoff(&self) -> &[Vec<f64>] {
        &self.payoff
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn num_states(&self) -> usize {
        self.payoff[0].len()
    }

    /// Expected payoff of each action at `x`.
    pub fn expected(&self, x: &Belief) -> Vec<f64> {
        self.payoff.iter().map(|row| dot(row, x.coords())).collect()
    }
}

/// `V(x)` and every action within `TIE_TOL` of the maximum.
pub fn value_v(p: &DecisionProblem, x: &Belief) -> (f64, Vec<usize>) {
    argmax_set(&p.expected(x), TIE_TOL)
}

fn argmax_set(values: &[f64], tie_tol: f64) -> (f64, Vec<usize>) {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let set = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= best - tie_tol)
        .map(|(i, _)| i)
        .collect();
    (best, set)
}

/// Region of held beliefs on which a specific optimal action is preferred.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinnedRegion {
    pub center: Belief,
    pub radius: f64,
    pub action: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum Policy {
    LexicographicFirst,
    LexicographicLast,
    /// Picks the pinned action when the held belief lies in its region and
    /// the action is optimal there; otherwise the first optimal action.
    Pinned {
        regions: Vec<PinnedRegion>,
    },
}

/// Consistent action choice: depends only on the held belief.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selector {
    #[serde(flatten)]
    pub policy: Policy,
    #[serde(default = "default_tie_tol")]
    pub tie_tol: f64,
}

fn default_tie_tol() -> f64 {
    TIE_TOL
}

impl Default for Selector {
    fn default() -> Self {
        Self {
            policy: Policy::LexicographicFirst,
            tie_tol: TIE_TOL,
        }
    }
}

impl Selector {
    pub fn last() -> Self {
        Self {
            policy: Policy::LexicographicLast,
            tie_tol: TIE_TOL,
        }
    }

    pub fn choose(&self, p: &DecisionProblem, held: &Belief) -> usize {
        let (_, set) = argmax_set(&p.expected(held), self.tie_tol);
        match &self.policy {
            Policy::LexicographicFirst => set[0],
            Policy::LexicographicLast => *set.last().unwrap(),
            Policy::Pinned { regions } => regions
                .iter()
                .find(|r| held.dist_inf(&r.center) <= r.radius && set.contains(&r.action))
                .map(|r| r.action)
                .unwrap_or(set[0]),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WelfareMode {
    /// Act on the held belief, get paid under the Bayesian posterior.
    #[default]
    Single,
    /// Evaluate `V` at the held belief.
    Double,
}

/// Welfare evaluation for one (problem, rule, prior, selector, mode).
#[derive(Clone, Copy, Debug)]
pub struct Welfare<'a> {
    pub problem: &'a DecisionProblem,
    pub rule: &'a Distortion,
    pub prior: &'a Belief,
    pub selector: &'a Selector,
    pub mode: WelfareMode,
}

impl Welfare<'_> {
    pub fn at(&self, x: &Belief) -> Result<f64, DistortionError> {
        let held = self.rule.evaluate(self.prior, x)?;
        Ok(match self.mode {
            WelfareMode::Single => {
                let a = self.selector.choose(self.problem, &held);
                dot(&self.problem.payoff[a], x.coords())
            }
            WelfareMode::Double => value_v(self.problem, &held).0,
        })
    }

    pub fn expected(&self, rho_b: &PosteriorDistribution) -> Result<f64, DecisionError> {
        let gap = rho_b.barycenter().dist_inf(self.prior);
        if gap > PRIOR_TOL {
            return Err(DecisionError::BarycenterMismatch(gap));
        }
        let mut total = 0.0;
        for (x, p) in rho_b.iter() {
            total += p * self.at(x)?;
        }
        Ok(total)
    }

    /// Midpoint-convexity scan. Two states: every consecutive triple of the
    /// grid `{0, 1/g, ..., 1}` (equivalent to convexity on the grid). More
    /// states: `8 g` seeded random pairs at `λ ∈ {1/4, 1/2, 3/4}`.
    pub fn convexity_violations(
        &self,
        grid: usize,
        tol: f64,
        seed: u64,
        exec: Execution,
    ) -> Result<Vec<ConvexityViolation>, DistortionError> {
        let n = self.prior.dim();
        let g = grid.max(2);
        let triples: Vec<(Belief, Belief, f64)> = if n == 2 {
            (1..g)
                .map(|i| {
                    (
                        Belief::binary((i - 1) as f64 / g as f64),
                        Belief::binary((i + 1) as f64 / g as f64),
                        0.5,
                    )
                })
                .collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(24 * g);
            for _ in 0..8 * g {
                let x = random_belief(&mut rng, n);
                let y = random_belief(&mut rng, n);
                for lambda in [0.25, 0.5, 0.75] {
                    out.push((x.clone(), y.clone(), lambda));
                }
            }
            out
        };
        let checked = par::map_range(exec, triples.len(), |i| {
            let (x, y, lambda) = &triples[i];
            let lhs = self.at(&x.mix(y, *lambda))?;
            let rhs = lambda * self.at(x)? + (1.0 - lambda) * self.at(y)?;
            Ok::<_, DistortionError>((lhs > rhs + tol).then(|| ConvexityViolation {
                x: x.clone(),
                x_prime: y.clone(),
                lambda: *lambda,
                lhs,
                rhs,
                gap: lhs - rhs,
            }))
        });
        let mut out = Vec::new();
        for c in checked {
            if let Some(v) = c? {
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// A sampled triple with `W(λx + (1−λ)x′) > λW(x) + (1−λ)W(x′) + tol`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityViolation {
    pub x: Belief,
    pub x_prime: Belief,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl ConvexityViolation {
    pub const CSV_HEADER: &'static str = "x,x_prime,lambda,lhs,rhs,gap";

    /// CSV row; belief coordinates are joined with ';'.
    pub fn csv_row(&self) -> String {
        let j = |b: &Belief| {
            b.coords()
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        format!(
            "{},{},{},{},{},{}",
            j(&self.x),
            j(&self.x_prime),
            self.lambda,
            self.lhs,
            self.rhs,
            self.gap
        )
    }
}

pub fn welfare_w(
    p: &DecisionProblem,
    d: &Distortion,
    mu: &Belief,
    sel: &Selector,
    mode: WelfareMode,
    x: &Belief,
) -> Result<f64, DistortionError> {
    Welfare {
        problem: p,
        rule: d,
        prior: mu,
        selector: sel,
        mode,
    }
    .at(x)
}

pub fn expected_payoff(
    p: &DecisionProblem,
    d: &Distortion,
    mu: &Belief,
    sel: &Selector,
    mode: WelfareMode,
    rho_b: &PosteriorDistribution,
) -> Result<f64, DecisionError> {
    Welfare {
        problem: p,
        rule: d,
        prior: mu,
        selector: sel,
        mode,
    }
    .expected(rho_b)
}

#[allow(clippy::too_many_arguments)]
pub fn convexity_violations(
    p: &DecisionProblem,
    d: &Distortion,
    mu: &Belief,
    sel: &Selector,
    mode: WelfareMode,
    grid: usize,
    tol: f64,
    seed: u64,
) -> Result<Vec<ConvexityViolation>, DistortionError> {
    Welfare {
        problem: p,
        rule: d,
        prior: mu,
        selector: sel,
        mode,
    }
    .convexity_violations(grid, tol, seed, Execution::Parallel)
}
