//! Dense two-phase simplex with Bland's rule.
//!
//! Meant for the small programs that arise from tabular occupancy measures,
//! where determinism matters more than speed.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;

/// `max c·x` subject to `A_eq x = b_eq`, `A_le x ≤ b_le`, `x ≥ 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub equalities: Vec<(Vec<f64>, f64)>,
    pub inequalities: Vec<(Vec<f64>, f64)>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    /// Recomputes reduced costs `c_B B⁻¹A − c` for the current basis.
    fn price(&mut self, cost: &[f64]) {
        let mut obj: Vec<f64> = (0..=self.width)
            .map(|j| if j < self.width { -cost[j] } else { 0.0 })
            .collect();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(row) {
                    *o += cb * v;
                }
            }
        }
        self.obj = obj;
    }

    fn pivot(&mut self, r: usize, c: usize) {
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
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs simplex iterations over the columns `allowed` admits.
    fn optimise(&mut self, allowed: impl Fn(usize) -> bool) -> Result<()> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::NonConvergence {
                    what: "simplex",
                    iterations: self.pivots,
                    residual: f64::NAN,
                });
            }
            let Some(enter) = (0..self.width).find(|&j| allowed(j) && self.obj[j] < -COST_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::LpUnbounded);
            };
            self.pivot(r, enter);
        }
    }
}

/// Solves `lp` to optimality.
pub fn maximize(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.objective.len();
    let n_slack = lp.inequalities.len();
    let m = lp.equalities.len() + n_slack;
    for (row, b) in lp.equalities.iter().chain(&lp.inequalities) {
        if row.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "constraint has {} coefficients, objective has {n}",
                row.len()
            )));
        }
        if !b.is_finite() || row.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite constraint".into()));
        }
    }
    let art0 = n + n_slack;
    let width = art0 + m;
    let mut rows = Vec::with_capacity(m);
    let all = lp
        .equalities
        .iter()
        .map(|c| (c, None))
        .chain(lp.inequalities.iter().enumerate().map(|(k, c)| (c, Some(k))));
    for (i, ((coeffs, b), slack)) in all.enumerate() {
        let mut row = vec![0.0; width + 1];
        row[..n].copy_from_slice(coeffs);
        if let Some(k) = slack {
            row[n + k] = 1.0;
        }
        row[width] = *b;
        if *b < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        row[art0 + i] = 1.0;
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        obj: Vec::new(),
        basis: (art0..width).collect(),
        width,
        pivots: 0,
    };

    let phase1: Vec<f64> = (0..width).map(|j| if j >= art0 { -1.0 } else { 0.0 }).collect();
    tab.price(&phase1);
    tab.optimise(|_| true)?;
    let infeasibility: f64 = (0..m).filter(|&i| tab.basis[i] >= art0).map(|i| tab.rhs(i)).sum();
    let scale = 1.0 + tab.rows.iter().map(|r| r[width].abs()).fold(0.0, f64::max);
    if infeasibility > 1e-8 * scale {
        return Err(Error::LpInfeasible);
    }

    // Drive zero-level artificials out of the basis; rows where that is
    // impossible are linearly dependent and are dropped.
    let mut i = 0;
    while i < tab.rows.len() {
        if tab.basis[i] >= art0 {
            match (0..art0).find(|&j| tab.rows[i][j].abs() > PIVOT_TOL) {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&lp.objective);
    tab.price(&cost);
    tab.optimise(|j| j < art0)?;

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs(i).max(0.0);
        }
    }
    let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(LpSolution {
        x,
        objective,
        pivots: tab.pivots,
    })
}
