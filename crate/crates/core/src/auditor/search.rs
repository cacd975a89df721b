//! Candidate experiment pairs and their evaluation.
//!
//! Most candidates are triples `(x, x', λ)`: the richer distribution holds
//! `x` and `x'`, the poorer one holds `m = λ x + (1 − λ) x'` in their place,
//! and both share a balancing point so the barycenter is the prior. The
//! second is a garbling of the first, and the welfare gap is a multiple of
//! `λ W(x) + (1 − λ) W(x') − W(m)`. For each way of splitting the three
//! distorted images into bet and safe, a small LP finds the two-action
//! problem that makes this combination most negative.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::certificate::{experiment_value, ViolationCertificate, GAP_THRESHOLD};
use crate::decision::{DecisionProblem, Selector, WelfareMode};
use crate::distortions::Distortion;
use crate::experiments::{
    bayes, experiment_from_posteriors, garble, Experiment, GarblingMatrix, PosteriorDistribution,
};
use crate::lp::{LinearProgram, Relation};
use crate::simplex::{random_interior, Belief, Hyperplane};

/// Gap between an image and the threshold of the problem that sorts it.
const SORT_MARGIN: f64 = 1e-7;
/// Hyperplanes drawn per random experiment pair.
const RANDOM_PROBLEMS: usize = 8;

#[derive(Clone, Debug)]
pub(crate) enum Candidate {
    Triple {
        x: Belief,
        x_prime: Belief,
        lambda: f64,
        recipe: &'static str,
    },
    /// Two states: a fixed threshold problem, scanned over consecutive grid
    /// triples.
    Threshold { sign: f64, t: f64 },
    /// Random experiment, random garbling, random hyperplane problems.
    Random { stream: u64 },
}

pub(crate) struct Search<'a> {
    pub rule: &'a Distortion,
    pub prior: &'a Belief,
    pub mode: WelfareMode,
    pub seed: u64,
    pub selector: Selector,
    /// Two-state grid used by threshold candidates.
    pub line: Vec<Belief>,
}

impl Search<'_> {
    pub fn evaluate(&self, c: &Candidate) -> Option<ViolationCertificate> {
        match c {
            Candidate::Triple {
                x,
                x_prime,
                lambda,
                recipe,
            } => self.triple(x, x_prime, *lambda, recipe),
            Candidate::Threshold { sign, t } => self.threshold(*sign, *t),
            Candidate::Random { stream } => self.random(*stream),
        }
    }

    fn triple(
        &self,
        x: &Belief,
        x_prime: &Belief,
        lambda: f64,
        recipe: &str,
    ) -> Option<ViolationCertificate> {
        if !(lambda > 0.0 && lambda < 1.0) || x.dist_inf(x_prime) <= 1e-9 {
            return None;
        }
        let m = x.mix(x_prime, lambda);
        let points = [x, x_prime, &m];
        let images: Vec<Belief> = points
            .iter()
            .map(|p| self.rule.evaluate(self.prior, p))
            .collect::<Result<_, _>>()
            .ok()?;
        let (h, g) = sorting_problem(points, &images, [lambda, 1.0 - lambda, -1.0], self.mode)?;
        if g > -1e-9 {
            return None;
        }
        let (rich, poor) = split_pair(self.prior, x, x_prime, lambda, &m)?;
        let pi = experiment_from_posteriors(&rich, self.prior).ok()?;
        let pi_prime = experiment_from_posteriors(&poor, self.prior).ok()?;
        self.certify(pi, pi_prime, DecisionProblem::from_hyperplane(&h), recipe)
    }

    fn threshold(&self, sign: f64, t: f64) -> Option<ViolationCertificate> {
        let problem = threshold_problem(sign, t);
        let w = |x: &Belief| {
            super::welfare_at(
                self.rule,
                self.prior,
                &problem,
                &self.selector,
                self.mode,
                x,
            )
        };
        let values: Vec<f64> = self.line.iter().map(w).collect::<Result<_, _>>().ok()?;
        for j in 1..values.len().saturating_sub(1) {
            if values[j] > 0.5 * (values[j - 1] + values[j + 1]) + 1e-9 {
                let (x, x_prime) = (&self.line[j - 1], &self.line[j + 1]);
                let m = x.mix(x_prime, 0.5);
                let Some((rich, poor)) = split_pair(self.prior, x, x_prime, 0.5, &m) else {
                    continue;
                };
                let pi = experiment_from_posteriors(&rich, self.prior).ok()?;
                let pi_prime = experiment_from_posteriors(&poor, self.prior).ok()?;
                if let Some(c) = self.certify(pi, pi_prime, problem.clone(), "threshold-scan") {
                    return Some(c);
                }
            }
        }
        None
    }

    fn random(&self, stream: u64) -> Option<ViolationCertificate> {
        let n = self.prior.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        let signals = rng.random_range(2..=n + 1);
        let pi = Experiment::random(&mut rng, n, signals);
        let to = rng.random_range(1..=signals);
        let m = GarblingMatrix::random(&mut rng, signals, to);
        let pi_prime = garble(&pi, &m).ok()?;
        let rho = bayes(self.prior, &pi).ok()?;
        let rho_prime = bayes(self.prior, &pi_prime).ok()?;
        for _ in 0..RANDOM_PROBLEMS {
            let through = random_interior(&mut rng, n, 0.0);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mean = raw.iter().sum::<f64>() / n as f64;
            let normal: Vec<f64> = raw.iter().map(|a| a - mean).collect();
            let scale = normal.iter().fold(0.0f64, |s, a| s.max(a.abs()));
            if scale < 1e-9 {
                continue;
            }
            let normal: Vec<f64> = normal.iter().map(|a| a / scale).collect();
            let offset = through.dot(&normal);
            let problem = DecisionProblem::from_hyperplane(&Hyperplane::new(normal, offset));
            let value = |r: &PosteriorDistribution| {
                let mut total = 0.0;
                for (x, p) in r.iter() {
                    total += p * super::welfare_at(
                        self.rule,
                        self.prior,
                        &problem,
                        &self.selector,
                        self.mode,
                        x,
                    )
                    .ok()?;
                }
                Some(total)
            };
            if value(&rho)? - value(&rho_prime)? <= -GAP_THRESHOLD {
                if let Some(c) =
                    self.certify(pi.clone(), pi_prime.clone(), problem, "random-search")
                {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Recomputes the gap from the experiments themselves.
    fn certify(
        &self,
        pi: Experiment,
        pi_prime: Experiment,
        problem: DecisionProblem,
        recipe: &str,
    ) -> Option<ViolationCertificate> {
        let value = |e: &Experiment| {
            experiment_value(
                self.rule,
                self.prior,
                &problem,
                &self.selector,
                self.mode,
                e,
            )
            .ok()
        };
        let gap = value(&pi)? - value(&pi_prime)?;
        (gap <= -GAP_THRESHOLD).then(|| ViolationCertificate {
            prior: self.prior.clone(),
            pi,
            pi_prime,
            problem,
            selector: self.selector.clone(),
            mode: self.mode,
            gap,
            recipe: recipe.into(),
            seed: self.seed,
            rule: self.rule.clone(),
        })
    }
}

/// Two states: bet pays `sign · (x − t)` in units of the first coordinate.
pub(crate) fn threshold_problem(sign: f64, t: f64) -> DecisionProblem {
    let h = Hyperplane::new(vec![sign, -sign], sign * (2.0 * t - 1.0));
    DecisionProblem::from_hyperplane(&h)
}

/// Richer and poorer posterior distributions for a triple. The poorer one
/// replaces `x`, `x'` by their mixture `m`; a balancing point `y` restores
/// the prior. Returns `None` when `m` cannot be balanced.
pub(crate) fn split_pair(
    prior: &Belief,
    x: &Belief,
    x_prime: &Belief,
    lambda: f64,
    m: &Belief,
) -> Option<(PosteriorDistribution, PosteriorDistribution)> {
    if m.dist_inf(prior) <= 1e-12 {
        let rich = PosteriorDistribution::new(
            vec![x.clone(), x_prime.clone()],
            vec![lambda, 1.0 - lambda],
        )
        .ok()?;
        return Some((rich, PosteriorDistribution::dirac(prior.clone())));
    }
    let w_max = prior
        .coords()
        .iter()
        .zip(m.coords())
        .filter(|(_, &mi)| mi > 0.0)
        .map(|(&p, &mi)| p / mi)
        .fold(f64::INFINITY, f64::min);
    let w = 0.5 * w_max.min(1.0);
    if w.is_nan() || w <= 0.0 {
        return None;
    }
    let y: Vec<f64> = prior
        .coords()
        .iter()
        .zip(m.coords())
        .map(|(p, mi)| ((p - w * mi) / (1.0 - w)).max(0.0))
        .collect();
    let y = Belief::from_weights(y);
    let rich = PosteriorDistribution::new(
        vec![x.clone(), x_prime.clone(), y.clone()],
        vec![w * lambda, w * (1.0 - lambda), 1.0 - w],
    )
    .ok()?;
    let poor = PosteriorDistribution::new(vec![m.clone(), y], vec![w, 1.0 - w]).ok()?;
    Some((rich, poor))
}

/// Over all bet/safe patterns of the three images, the hyperplane problem
/// minimizing `Σ c_z W(z)`. Bettors clear the threshold by a margin.
pub(crate) fn sorting_problem(
    points: [&Belief; 3],
    images: &[Belief],
    coef: [f64; 3],
    mode: WelfareMode,
) -> Option<(Hyperplane, f64)> {
    let n = points[0].dim();
    let nv = 2 * n + 2;
    let (bp, bm) = (2 * n, 2 * n + 1);
    let row = |v: &Belief, scale: f64| {
        let mut r = vec![0.0; nv];
        for i in 0..n {
            r[i] = scale * v.coords()[i];
            r[n + i] = -scale * v.coords()[i];
        }
        r[bp] = -scale;
        r[bm] = scale;
        r
    };
    let mut best: Option<(Hyperplane, f64)> = None;
    for mask in 1u8..8 {
        let bets = |z: usize| mask & (1 << z) != 0;
        let split = (0..3)
            .any(|a| (0..3).any(|b| bets(a) != bets(b) && images[a].dist_inf(&images[b]) <= 1e-12));
        if split {
            continue;
        }
        let mut obj = vec![0.0; nv];
        for z in (0..3).filter(|&z| bets(z)) {
            let v = match mode {
                WelfareMode::Single => points[z],
                WelfareMode::Double => &images[z],
            };
            for (o, r) in obj.iter_mut().zip(row(v, coef[z])) {
                *o += r;
            }
        }
        let mut lp = LinearProgram::new(nv);
        lp.minimize(obj);
        for (z, image) in images.iter().enumerate() {
            if bets(z) {
                lp.constrain(row(image, 1.0), Relation::Ge, SORT_MARGIN);
            } else {
                lp.constrain(row(image, 1.0), Relation::Le, -SORT_MARGIN);
            }
        }
        let mut sum = vec![0.0; nv];
        for i in 0..n {
            sum[i] = 1.0;
            sum[n + i] = -1.0;
            lp.constrain_terms(&[(i, 1.0)], Relation::Le, 1.0);
            lp.constrain_terms(&[(n + i, 1.0)], Relation::Le, 1.0);
        }
        lp.constrain(sum, Relation::Eq, 0.0);
        lp.constrain_terms(&[(bp, 1.0)], Relation::Le, 2.0);
        lp.constrain_terms(&[(bm, 1.0)], Relation::Le, 2.0);
        let Ok(sol) = lp.solve() else { continue };
        let normal: Vec<f64> = (0..n).map(|i| sol.x[i] - sol.x[n + i]).collect();
        if normal.iter().all(|a| a.abs() < 1e-12) {
            continue;
        }
        if best.as_ref().is_none_or(|(_, g)| sol.objective < *g) {
            best = Some((
                Hyperplane::new(normal, sol.x[bp] - sol.x[bm]),
                sol.objective,
            ));
        }
    }
    best
}
