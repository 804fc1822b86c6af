//! Dense two-phase simplex for `max c·x s.t. Ax <= b` over free variables.
//!
//! Free variables are split as `x = x⁺ - x⁻`, every row gets a slack, and rows
//! with a negative right-hand side get an artificial variable for phase one.
//! Pivoting follows Bland's rule, so identical inputs always produce the same
//! pivot sequence.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, point: Vec<f64> },
    Infeasible,
    Unbounded,
    /// The iteration cap was reached before termination.
    Stalled,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, constraints: Vec<Vec<f64>>, rhs: Vec<f64>) -> Self {
        LpProblem {
            objective,
            constraints,
            rhs,
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.objective.len();
        if self.constraints.len() != self.rhs.len() {
            return Err(Error::Dimension(format!(
                "{} constraint rows but {} right-hand sides",
                self.constraints.len(),
                self.rhs.len()
            )));
        }
        if let Some(row) = self.constraints.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension(format!(
                "constraint row of length {} for {n} variables",
                row.len()
            )));
        }
        Ok(())
    }
}

/// Solves the problem to optimality, infeasibility, unboundedness, or stall.
pub fn solve(lp: &LpProblem) -> Result<LpOutcome> {
    lp.check()?;
    Ok(Tableau::build(&lp.constraints, &lp.rhs, lp.objective.len()).optimize(&lp.objective))
}

/// Whether `{x : Ax <= b}` is nonempty, decided by phase one alone.
pub fn is_feasible(a: &[Vec<f64>], b: &[f64]) -> Result<bool> {
    let n = a.first().map_or(0, Vec::len);
    let lp = LpProblem::new(vec![0.0; n], a.to_vec(), b.to_vec());
    lp.check()?;
    let mut t = Tableau::build(a, b, n);
    match t.phase_one() {
        PhaseOne::Feasible => Ok(true),
        PhaseOne::Infeasible => Ok(false),
        PhaseOne::Stalled => Err(Error::LpStalled(t.cap)),
    }
}

enum PhaseOne {
    Feasible,
    Infeasible,
    Stalled,
}

enum Run {
    Optimal,
    Unbounded,
    Stalled,
}

struct Tableau {
    /// Constraint rows, each `cols + 1` wide (last entry is the rhs).
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n: usize,
    cols: usize,
    first_artificial: usize,
    iterations: usize,
    cap: usize,
}

impl Tableau {
    fn build(a: &[Vec<f64>], b: &[f64], n: usize) -> Tableau {
        let m = a.len();
        let n_art = b.iter().filter(|v| **v < 0.0).count();
        let first_artificial = 2 * n + m;
        let cols = first_artificial + n_art;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = first_artificial;
        for (i, (ai, bi)) in a.iter().zip(b).enumerate() {
            let sign = if *bi < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; cols + 1];
            for (j, v) in ai.iter().enumerate() {
                row[j] = sign * v;
                row[n + j] = -sign * v;
            }
            row[2 * n + i] = sign;
            row[cols] = sign * bi;
            if sign < 0.0 {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(2 * n + i);
            }
            rows.push(row);
        }
        Tableau {
            rows,
            basis,
            n,
            cols,
            first_artificial,
            iterations: 0,
            cap: 50 * (m + cols).max(1),
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.cols + 1;
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for k in 0..width {
                    row[k] -= f * pivot_row[k];
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Maximizes `cost·z` over the tableau variables restricted to columns
    /// `< allowed`, starting from the current basic feasible solution.
    fn run(&mut self, cost: &[f64], allowed: usize) -> Run {
        loop {
            if self.iterations >= self.cap {
                return Run::Stalled;
            }
            // Reduced profit of column j: cost_j - Σ_i cost_{basis_i} · t_ij.
            let entering = (0..allowed).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let z: f64 = self
                    .rows
                    .iter()
                    .zip(&self.basis)
                    .map(|(row, &bv)| cost[bv] * row[j])
                    .sum();
                cost[j] - z > PIVOT_TOL
            });
            let Some(c) = entering else {
                return Run::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let t = row[c];
                if t <= PIVOT_TOL {
                    continue;
                }
                let ratio = row[self.cols] / t;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        let tie = (ratio - lr).abs() <= RATIO_TIE * lr.abs().max(1.0);
                        if (tie && self.basis[i] < self.basis[li]) || (!tie && ratio < lr) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
            match leave {
                None => return Run::Unbounded,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }

    fn phase_one(&mut self) -> PhaseOne {
        if self.first_artificial == self.cols {
            return PhaseOne::Feasible;
        }
        let mut cost = vec![0.0; self.cols];
        for c in cost.iter_mut().skip(self.first_artificial) {
            *c = -1.0;
        }
        match self.run(&cost, self.cols) {
            Run::Stalled => return PhaseOne::Stalled,
            Run::Unbounded => unreachable!("phase one objective is bounded by zero"),
            Run::Optimal => {}
        }
        let infeasibility: f64 = self
            .rows
            .iter()
            .zip(&self.basis)
            .filter(|(_, &bv)| bv >= self.first_artificial)
            .map(|(row, _)| row[self.cols])
            .sum();
        let scale = self
            .rows
            .iter()
            .map(|r| r[self.cols].abs())
            .fold(1.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return PhaseOne::Infeasible;
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= self.first_artificial {
                let col = (0..self.first_artificial)
                    .find(|&j| self.rows[r][j].abs() > PIVOT_TOL && !self.basis.contains(&j));
                match col {
                    Some(c) => self.pivot(r, c),
                    None => {
                        // Redundant equality row.
                        self.rows.remove(r);
                        self.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        PhaseOne::Feasible
    }

    fn optimize(mut self, objective: &[f64]) -> LpOutcome {
        match self.phase_one() {
            PhaseOne::Infeasible => return LpOutcome::Infeasible,
            PhaseOne::Stalled => return LpOutcome::Stalled,
            PhaseOne::Feasible => {}
        }
        let n = self.n;
        let mut cost = vec![0.0; self.cols];
        for (j, c) in objective.iter().enumerate() {
            cost[j] = *c;
            cost[n + j] = -c;
        }
        match self.run(&cost, self.first_artificial) {
            Run::Stalled => LpOutcome::Stalled,
            Run::Unbounded => LpOutcome::Unbounded,
            Run::Optimal => {
                let mut z = vec![0.0; self.cols];
                for (row, &bv) in self.rows.iter().zip(&self.basis) {
                    z[bv] = row[self.cols];
                }
                let point: Vec<f64> = (0..n).map(|j| z[j] - z[n + j]).collect();
                let value = objective.iter().zip(&point).map(|(c, x)| c * x).sum();
                LpOutcome::Optimal { value, point }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
            vec![1.0, 0.0, 1.0, 0.0],
        )
    }

    #[test]
    fn maximize_over_unit_square() {
        let (a, b) = unit_square();
        let out = solve(&LpProblem::new(vec![1.0, 0.0], a, b)).unwrap();
        assert_eq!(out.value(), Some(1.0));
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let out = solve(&LpProblem::new(
            vec![1.0],
            vec![vec![1.0], vec![-1.0]],
            vec![0.0, -1.0],
        ))
        .unwrap();
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn vertex_optimum() {
        let a = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ];
        let out = solve(&LpProblem::new(vec![1.0, 1.0], a, vec![2.0, 3.0, 0.0, 0.0])).unwrap();
        match out {
            LpOutcome::Optimal { value, point } => {
                assert!((value - 5.0).abs() < 1e-12);
                assert!((point[0] - 2.0).abs() < 1e-12 && (point[1] - 3.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unbounded_direction() {
        let out = solve(&LpProblem::new(vec![1.0], vec![vec![-1.0]], vec![0.0])).unwrap();
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn feasibility_examples() {
        let (a, b) = unit_square();
        assert!(is_feasible(&a, &b).unwrap());
        assert!(!is_feasible(&[vec![1.0], vec![-1.0]], &[-1.0, 0.0]).unwrap());
    }

    #[test]
    fn point_set_is_feasible() {
        // 0.3 <= x <= 0.3
        let a = vec![vec![1.0], vec![-1.0]];
        assert!(is_feasible(&a, &[0.3, -0.3]).unwrap());
        let out = solve(&LpProblem::new(vec![2.0], a, vec![0.3, -0.3])).unwrap();
        assert!((out.value().unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn zero_dimensional_problems() {
        assert!(is_feasible(&[vec![]], &[1.0]).unwrap());
        assert!(!is_feasible(&[vec![]], &[-1.0]).unwrap());
        let out = solve(&LpProblem::new(vec![], vec![], vec![])).unwrap();
        assert_eq!(
            out,
            LpOutcome::Optimal {
                value: 0.0,
                point: vec![]
            }
        );
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(solve(&LpProblem::new(vec![1.0, 2.0], vec![vec![1.0]], vec![1.0])).is_err());
        assert!(solve(&LpProblem::new(vec![1.0], vec![vec![1.0]], vec![])).is_err());
    }

    #[test]
    fn negated_objective_gives_minimum() {
        let (a, b) = unit_square();
        let max = solve(&LpProblem::new(vec![1.0, -2.0], a.clone(), b.clone()))
            .unwrap()
            .value()
            .unwrap();
        let min = -solve(&LpProblem::new(vec![-1.0, 2.0], a, b))
            .unwrap()
            .value()
            .unwrap();
        assert!(min <= max);
        assert_eq!((min, max), (-2.0, 1.0));
    }
}
