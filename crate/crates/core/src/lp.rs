//! Dense two-phase simplex method with Bland's anti-cycling rule.
//!
//! The problems solved here are tiny (a few dozen variables, a few hundred
//! rows at most), so a dense tableau is the simplest structure that stays
//! exact enough. Pivot order is fully determined by Bland's rule, which makes
//! every solution a pure function of the input.

use nalgebra::DMatrix;
use thiserror::Error;

const REDUCED_COST_EPS: f64 = 1e-11;
const PIVOT_EPS: f64 = 1e-9;
const PHASE_ONE_EPS: f64 = 1e-9;
const MAX_ITERATIONS: usize = 200_000;
// Pivots between rebuilds of the tableau from the original rows.
const REFACTOR_EVERY: usize = 8;
const SNAP_EPS: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit reached")]
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// `minimize c·x` subject to row constraints and `x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn minimize(&mut self, objective: Vec<f64>) -> &mut Self {
        assert_eq!(objective.len(), self.num_vars, "objective length mismatch");
        self.objective = objective;
        self
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars, "constraint length mismatch");
        self.rows.push((coeffs, relation, rhs));
        self
    }

    /// Sparse helper: `terms` is a list of (variable, coefficient).
    pub fn constrain_terms(
        &mut self,
        terms: &[(usize, f64)],
        relation: Relation,
        rhs: f64,
    ) -> &mut Self {
        let mut coeffs = vec![0.0; self.num_vars];
        for &(j, c) in terms {
            coeffs[j] += c;
        }
        self.constrain(coeffs, relation, rhs)
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let m = self.rows.len();
        let n = self.num_vars;
        if m == 0 {
            // Every variable sits at its lower bound unless the objective pulls it down.
            if self.objective.iter().any(|&c| c < -REDUCED_COST_EPS) {
                return Err(LpError::Unbounded);
            }
            return Ok(LpSolution {
                x: vec![0.0; n],
                objective: 0.0,
            });
        }

        // Normalize so every rhs is nonnegative.
        let rows: Vec<(Vec<f64>, Relation, f64)> = self
            .rows
            .iter()
            .map(|(a, rel, b)| {
                if *b < 0.0 {
                    let flipped = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (a.iter().map(|v| -v).collect(), flipped, -b)
                } else {
                    (a.clone(), *rel, *b)
                }
            })
            .collect();

        let num_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let num_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let slack_start = n;
        let art_start = n + num_slack;
        let ncols = n + num_slack + num_art;

        let mut table = vec![vec![0.0; ncols + 1]; m];
        let mut basis = vec![0usize; m];
        let mut next_slack = slack_start;
        let mut next_art = art_start;
        for (i, (a, rel, b)) in rows.iter().enumerate() {
            table[i][..n].copy_from_slice(a);
            table[i][ncols] = *b;
            match rel {
                Relation::Le => {
                    table[i][next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    table[i][next_slack] = -1.0;
                    next_slack += 1;
                    table[i][next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    table[i][next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }

        let mut tab = Tableau {
            initial: table.clone(),
            table,
            basis,
            ncols,
            stale: 0,
        };

        if num_art > 0 {
            let mut phase_one = vec![0.0; ncols];
            for c in phase_one.iter_mut().skip(art_start) {
                *c = 1.0;
            }
            let allowed = vec![true; ncols];
            tab.optimize(&phase_one, &allowed)?;
            let infeasibility = tab.objective_value(&phase_one);
            let scale = rows.iter().map(|r| r.2.abs()).fold(1.0, f64::max);
            if infeasibility > PHASE_ONE_EPS * scale {
                return Err(LpError::Infeasible);
            }
            tab.drive_out_artificials(art_start);
        }

        let mut cost = vec![0.0; ncols];
        cost[..n].copy_from_slice(&self.objective);
        let allowed: Vec<bool> = (0..ncols).map(|j| j < art_start).collect();
        tab.optimize(&cost, &allowed)?;

        let mut x = vec![0.0; n];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                x[b] = tab.table[i][ncols].max(0.0);
            }
        }
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, objective })
    }
}

struct Tableau {
    table: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    /// Rows as first built, against which the current basis is refactored.
    initial: Vec<Vec<f64>>,
    /// Pivots applied since the last rebuild.
    stale: usize,
}

impl Tableau {
    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.table[i][self.ncols])
            .sum()
    }

    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<(), LpError> {
        let m = self.table.len();
        let mut is_basic = vec![false; self.ncols];
        for &b in &self.basis {
            is_basic[b] = true;
        }
        for _ in 0..MAX_ITERATIONS {
            // Bland: lowest-index column with negative reduced cost enters.
            let mut entering = None;
            for j in 0..self.ncols {
                if !allowed[j] || is_basic[j] {
                    continue;
                }
                let mut reduced = cost[j];
                for i in 0..m {
                    let a = self.table[i][j];
                    if a != 0.0 {
                        reduced -= cost[self.basis[i]] * a;
                    }
                }
                if reduced < -REDUCED_COST_EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                // Only trust an optimality verdict read off a fresh tableau.
                if self.stale > 0 && self.refactor() {
                    continue;
                }
                return Ok(());
            };

            // Ratio test; ties go to the lowest-index basic variable.
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.table[i][col];
                if a > PIVOT_EPS {
                    // Roundoff can leave a degenerate rhs slightly negative.
                    let ratio = self.table[i][self.ncols].max(0.0) / a;
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((best, best_ratio)) => {
                            let tie =
                                (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                            if ratio < best_ratio && !tie || tie && self.basis[i] < self.basis[best]
                            {
                                Some((i, ratio))
                            } else {
                                Some((best, best_ratio))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leaving else {
                if self.stale > 0 && self.refactor() {
                    continue;
                }
                return Err(LpError::Unbounded);
            };
            is_basic[self.basis[row]] = false;
            is_basic[col] = true;
            self.pivot(row, col);
            if self.stale >= REFACTOR_EVERY {
                self.refactor();
            }
        }
        Err(LpError::IterationLimit)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.ncols + 1;
        let p = self.table[row][col];
        for v in self.table[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.table[row].clone();
        for (i, r) in self.table.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..width {
                r[j] -= factor * pivot_row[j];
            }
            r[col] = 0.0;
        }
        self.basis[row] = col;
        self.stale += 1;
    }

    /// Recomputes `B⁻¹ [A | b]` from the initial rows, discarding the
    /// roundoff accumulated by successive pivots. Returns false when the
    /// basis matrix is numerically singular, leaving the tableau as is.
    fn refactor(&mut self) -> bool {
        let m = self.table.len();
        let width = self.ncols + 1;
        let b = DMatrix::from_fn(m, m, |r, c| self.initial[r][self.basis[c]]);
        let rhs = DMatrix::from_fn(m, width, |r, c| self.initial[r][c]);
        let Some(x) = b.lu().solve(&rhs) else {
            self.stale = 0;
            return false;
        };
        if x.iter().any(|v| !v.is_finite()) {
            self.stale = 0;
            return false;
        }
        for (i, row) in self.table.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let e = x[(i, j)];
                *v = if e.abs() < SNAP_EPS { 0.0 } else { e };
            }
        }
        for (i, &bcol) in self.basis.iter().enumerate() {
            for (k, row) in self.table.iter_mut().enumerate() {
                row[bcol] = if k == i { 1.0 } else { 0.0 };
            }
        }
        self.stale = 0;
        true
    }

    fn drive_out_artificials(&mut self, art_start: usize) {
        for i in 0..self.table.len() {
            if self.basis[i] < art_start {
                continue;
            }
            let replacement = (0..art_start)
                .filter(|j| !self.basis.contains(j))
                .find(|&j| self.table[i][j].abs() > 1e-9);
            if let Some(j) = replacement {
                self.pivot(i, j);
            }
            // Otherwise the row is redundant; its artificial stays basic at zero.
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.minimize(vec![-3.0, -5.0]);
        lp.constrain(vec![1.0, 0.0], Relation::Le, 4.0);
        lp.constrain(vec![0.0, 2.0], Relation::Le, 12.0);
        lp.constrain(vec![3.0, 2.0], Relation::Le, 18.0);
        let sol = lp.solve().unwrap();
        assert!((sol.objective + 36.0).abs() < 1e-9);
        assert!((sol.x[0] - 2.0).abs() < 1e-9);
        assert!((sol.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y s.t. x + y = 1, x >= 0.25
        let mut lp = LinearProgram::new(2);
        lp.minimize(vec![1.0, 2.0]);
        lp.constrain(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.constrain(vec![1.0, 0.0], Relation::Ge, 0.25);
        let sol = lp.solve().unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.constrain(vec![1.0], Relation::Ge, 2.0);
        lp.constrain(vec![1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let mut lp = LinearProgram::new(2);
        lp.minimize(vec![-1.0, 0.0]);
        lp.constrain(vec![0.0, 1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn negative_rhs_is_flipped() {
        // -x <= -3  <=>  x >= 3
        let mut lp = LinearProgram::new(1);
        lp.minimize(vec![1.0]);
        lp.constrain(vec![-1.0], Relation::Le, -3.0);
        let sol = lp.solve().unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_redundant_equalities() {
        // Two copies of the same equality row.
        let mut lp = LinearProgram::new(3);
        lp.minimize(vec![1.0, 1.0, 0.0]);
        lp.constrain(vec![1.0, 1.0, 1.0], Relation::Eq, 1.0);
        lp.constrain(vec![2.0, 2.0, 2.0], Relation::Eq, 2.0);
        let sol = lp.solve().unwrap();
        assert!(sol.objective.abs() < 1e-9);
        assert!((sol.x[2] - 1.0).abs() < 1e-9);
    }
}
