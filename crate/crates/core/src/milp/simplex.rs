//! Bounded-variable dual simplex over a dense explicit basis inverse.
//!
//! Every column must have finite bounds. With all slacks basic and each
//! structural parked at the bound favoured by its cost, the starting basis
//! is dual feasible, so no phase one is needed. Bound changes and appended
//! rows keep dual feasibility, which lets a branch-and-bound search re-solve
//! from the previous basis.

use serde::{Deserialize, Serialize};

use super::model::{Constraint, Model, ObjSense, Sense};
use crate::error::ModelError;

pub const FEAS_TOL: f64 = 1e-7;
pub const INT_TOL: f64 = 1e-6;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_RUN: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    /// The bound proved the optimum cannot beat the supplied cutoff.
    Cutoff,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub iterations: u64,
}

#[derive(Clone, Debug)]
pub struct DualSimplex {
    n: usize,
    m: usize,
    /// Sparse structural columns over scaled rows.
    cols: Vec<Vec<(usize, f64)>>,
    /// Costs in minimization form, structurals then slacks.
    cost: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rhs: Vec<f64>,
    row_scale: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<Option<usize>>,
    at_upper: Vec<bool>,
    binv: Vec<Vec<f64>>,
    /// Reduced costs of the current basis, kept between solves.
    duals: Option<Vec<f64>>,
    /// Basic values left by the last solve.
    last_xb: Vec<f64>,
    since_refactor: usize,
    obj_sign: f64,
    obj_constant: f64,
    pub iteration_limit: u64,
    total_iterations: u64,
}

impl DualSimplex {
    pub fn new(model: &Model) -> Result<Self, ModelError> {
        let n = model.n_vars();
        let obj_sign = match model.sense() {
            ObjSense::Minimize => 1.0,
            ObjSense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; n];
        for &(j, c) in model.objective() {
            cost[j] += obj_sign * c;
        }
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for v in model.vars() {
            if !v.lower.is_finite() || !v.upper.is_finite() {
                return Err(ModelError::UnboundedColumn(v.name.clone()));
            }
            lo.push(v.lower);
            hi.push(v.upper);
        }
        let at_upper = cost.iter().map(|&c| c < 0.0).collect();
        let mut lp = Self {
            n,
            m: 0,
            cols: vec![Vec::new(); n],
            cost,
            lo,
            hi,
            rhs: Vec::new(),
            row_scale: Vec::new(),
            basis: Vec::new(),
            pos: vec![None; n],
            at_upper,
            binv: Vec::new(),
            duals: None,
            last_xb: Vec::new(),
            since_refactor: 0,
            obj_sign,
            obj_constant: model.objective_constant(),
            iteration_limit: 200_000,
            total_iterations: 0,
        };
        for c in model.constraints() {
            lp.add_row(c)?;
        }
        Ok(lp)
    }

    pub fn n_rows(&self) -> usize {
        self.m
    }

    pub fn n_cols(&self) -> usize {
        self.n
    }

    pub fn total_iterations(&self) -> u64 {
        self.total_iterations
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        debug_assert!(j < self.n);
        self.lo[j] = lower;
        self.hi[j] = upper;
    }

    /// Appends a row; its slack enters the basis so the current basis stays
    /// dual feasible.
    pub fn add_row(&mut self, con: &Constraint) -> Result<(), ModelError> {
        if let Some(&(j, _)) = con.terms.iter().find(|(j, _)| *j >= self.n) {
            return Err(ModelError::UnknownVariable(j));
        }
        let mut dense: Vec<(usize, f64)> = Vec::with_capacity(con.terms.len());
        for &(j, a) in &con.terms {
            match dense.iter_mut().find(|(k, _)| *k == j) {
                Some(e) => e.1 += a,
                None => dense.push((j, a)),
            }
        }
        dense.retain(|&(_, a)| a != 0.0);
        let scale = dense.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
        let scale = if scale > 0.0 { 1.0 / scale } else { 1.0 };
        let r = self.m;
        for &(j, a) in &dense {
            self.cols[j].push((r, a * scale));
        }
        self.rhs.push(con.rhs * scale);
        self.row_scale.push(scale);
        let (slo, shi) = match con.sense {
            Sense::Le => (0.0, f64::INFINITY),
            Sense::Ge => (f64::NEG_INFINITY, 0.0),
            Sense::Eq => (0.0, 0.0),
        };
        self.cost.push(0.0);
        self.lo.push(slo);
        self.hi.push(shi);
        self.at_upper.push(false);
        // The new slack is basic with zero cost, so existing duals stand.
        if let Some(d) = self.duals.as_mut() {
            d.push(0.0);
        }

        // [B 0; a_B 1]^-1 = [B^-1 0; -a_B B^-1 1]
        let mut new_row = vec![0.0; r + 1];
        for &(j, a) in &dense {
            if let Some(i) = self.pos[j] {
                let coef = a * scale;
                for (k, v) in self.binv[i].iter().enumerate() {
                    new_row[k] -= coef * v;
                }
            }
        }
        new_row[r] = 1.0;
        for row in &mut self.binv {
            row.push(0.0);
        }
        self.binv.push(new_row);
        self.pos.push(Some(r));
        self.basis.push(self.n + r);
        self.m += 1;
        Ok(())
    }

    fn column_dot(&self, j: usize, v: &[f64]) -> f64 {
        if j < self.n {
            self.cols[j].iter().map(|&(i, a)| a * v[i]).sum()
        } else {
            v[j - self.n]
        }
    }

    fn for_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for &(i, a) in &self.cols[j] {
                f(i, a);
            }
        } else {
            f(j - self.n, 1.0);
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.hi[j]
        } else {
            self.lo[j]
        }
    }

    fn reset_to_slack_basis(&mut self) {
        for j in 0..self.n + self.m {
            self.pos[j] = None;
        }
        self.basis = (self.n..self.n + self.m).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            self.pos[b] = Some(i);
        }
        self.binv = (0..self.m)
            .map(|i| {
                let mut row = vec![0.0; self.m];
                row[i] = 1.0;
                row
            })
            .collect();
        self.since_refactor = 0;
        self.duals = None;
    }

    /// Recomputes the basis inverse. Basic slacks are unit columns, so only
    /// the block of structural columns over the rows no basic slack covers
    /// needs a real inverse; the slack rows follow by substitution.
    fn refactor(&mut self) {
        let m = self.m;
        let mut slack_row_pos = vec![None; m];
        let mut structural = Vec::new();
        for (k, &j) in self.basis.iter().enumerate() {
            if j >= self.n {
                slack_row_pos[j - self.n] = Some(k);
            } else {
                structural.push(k);
            }
        }
        let free_rows: Vec<usize> = (0..m).filter(|&i| slack_row_pos[i].is_none()).collect();
        let k = structural.len();
        debug_assert_eq!(k, free_rows.len());
        let mut local = vec![usize::MAX; m];
        for (t, &i) in free_rows.iter().enumerate() {
            local[i] = t;
        }
        // Gauss-Jordan on [B11 | I] where B11 is structurals over free rows.
        let mut a = vec![vec![0.0; 2 * k]; k];
        for (c, &pos) in structural.iter().enumerate() {
            for &(i, v) in &self.cols[self.basis[pos]] {
                if local[i] != usize::MAX {
                    a[local[i]][c] = v;
                }
            }
        }
        for (t, row) in a.iter_mut().enumerate() {
            row[k + t] = 1.0;
        }
        for c in 0..k {
            let p = (c..k)
                .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()).then(y.cmp(&x)))
                .unwrap();
            if a[p][c].abs() < 1e-12 {
                self.reset_to_slack_basis();
                return;
            }
            a.swap(c, p);
            let piv = a[c][c];
            for v in a[c].iter_mut() {
                *v /= piv;
            }
            let pivot_row = a[c].clone();
            for (i, row) in a.iter_mut().enumerate() {
                if i != c && row[c] != 0.0 {
                    let f = row[c];
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
        }
        // Row c of the reduced block is the inverse row for structural c.
        let mut binv = vec![vec![0.0; m]; m];
        for (c, &pos) in structural.iter().enumerate() {
            for (t, &i) in free_rows.iter().enumerate() {
                binv[pos][i] = a[c][k + t];
            }
        }
        // Slack on row i: x_s = r_i - sum_c B[i, c] x_c.
        for c in 0..k {
            let pos = structural[c];
            for &(i, v) in &self.cols[self.basis[pos]] {
                if let Some(spos) = slack_row_pos[i] {
                    for &fi in &free_rows {
                        let w = binv[pos][fi];
                        if w != 0.0 {
                            binv[spos][fi] -= v * w;
                        }
                    }
                }
            }
        }
        for (i, p) in slack_row_pos.iter().enumerate() {
            if let Some(spos) = *p {
                binv[spos][i] = 1.0;
            }
        }
        self.binv = binv;
        self.since_refactor = 0;
        self.duals = None;
    }

    fn basic_values(&self) -> Vec<f64> {
        let mut r = self.rhs.clone();
        for j in 0..self.n + self.m {
            if self.pos[j].is_none() {
                let x = self.nonbasic_value(j);
                if x != 0.0 {
                    self.for_column(j, |i, a| r[i] -= a * x);
                }
            }
        }
        self.binv
            .iter()
            .map(|row| row.iter().zip(&r).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Rate of change of the objective, in the model's sense, per unit of
    /// each row's right-hand side at the current basis.
    pub fn row_duals(&self) -> Vec<f64> {
        self.simplex_multipliers()
            .iter()
            .zip(&self.row_scale)
            .map(|(y, s)| self.obj_sign * y * s)
            .collect()
    }

    fn simplex_multipliers(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = self.cost[b];
            if cb != 0.0 {
                for (yk, v) in y.iter_mut().zip(&self.binv[i]) {
                    *yk += cb * v;
                }
            }
        }
        y
    }

    fn reduced_costs(&self) -> Vec<f64> {
        let y = self.simplex_multipliers();
        (0..self.n + self.m)
            .map(|j| {
                if self.pos[j].is_some() {
                    0.0
                } else {
                    self.cost[j] - self.column_dot(j, &y)
                }
            })
            .collect()
    }

    /// Parks each nonbasic column at the bound its reduced cost favours.
    fn place_nonbasics(&mut self, d: &[f64]) {
        for j in 0..self.n + self.m {
            if self.pos[j].is_some() {
                continue;
            }
            if self.lo[j] == f64::NEG_INFINITY {
                self.at_upper[j] = true;
            } else if self.hi[j] == f64::INFINITY || d[j] > DUAL_TOL {
                self.at_upper[j] = false;
            } else if d[j] < -DUAL_TOL {
                self.at_upper[j] = true;
            }
        }
    }

    fn min_objective(&self, xb: &[f64]) -> f64 {
        let mut z = 0.0;
        for j in 0..self.n + self.m {
            let x = match self.pos[j] {
                Some(i) => xb[i],
                None => self.nonbasic_value(j),
            };
            z += self.cost[j] * x;
        }
        z
    }

    /// Solves from the current basis. `cutoff` is in the model's own sense:
    /// the solve stops early once the bound proves the optimum is no better.
    pub fn solve(&mut self, cutoff: Option<f64>) -> LpSolution {
        let status = self.run(cutoff);
        let xb = std::mem::take(&mut self.last_xb);
        let values: Vec<f64> = (0..self.n)
            .map(|j| {
                let x = match self.pos[j] {
                    Some(i) => xb[i],
                    None => self.nonbasic_value(j),
                };
                if (x - self.lo[j]).abs() < FEAS_TOL {
                    self.lo[j]
                } else if (x - self.hi[j]).abs() < FEAS_TOL {
                    self.hi[j]
                } else {
                    x
                }
            })
            .collect();
        let objective = self.obj_sign * self.min_objective(&xb) + self.obj_constant;
        self.last_xb = xb;
        LpSolution {
            status,
            values,
            objective,
            iterations: self.total_iterations,
        }
    }

    fn run(&mut self, cutoff: Option<f64>) -> LpStatus {
        if (0..self.n).any(|j| self.lo[j] > self.hi[j] + FEAS_TOL) {
            self.last_xb = self.basic_values();
            return LpStatus::Infeasible;
        }
        let d = match self.duals.take() {
            Some(d) => d,
            None => self.reduced_costs(),
        };
        let (status, d, xb) = self.iterate(cutoff, d);
        self.duals = Some(d);
        self.last_xb = xb;
        status
    }

    fn iterate(&mut self, cutoff: Option<f64>, mut d: Vec<f64>) -> (LpStatus, Vec<f64>, Vec<f64>) {
        let min_cutoff = cutoff.map(|c| self.obj_sign * (c - self.obj_constant));
        let total = self.n + self.m;
        let mut iterations = 0u64;
        let mut degenerate = 0usize;
        let mut retried = false;
        self.place_nonbasics(&d);
        let mut xb = self.basic_values();
        let mut alpha_row = vec![0.0; total];
        loop {
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
                d = self.reduced_costs();
                self.place_nonbasics(&d);
                xb = self.basic_values();
            }
            if let Some(c) = min_cutoff {
                if self.min_objective(&xb) >= c - 1e-9 * (1.0 + c.abs()) {
                    return (LpStatus::Cutoff, d, xb);
                }
            }
            let bland = degenerate >= DEGENERATE_RUN;

            // Leaving row: largest bound violation, or lowest variable index in Bland mode.
            let mut leave: Option<(usize, f64, f64)> = None;
            for (i, &b) in self.basis.iter().enumerate() {
                let x = xb[i];
                let viol = if x < self.lo[b] - FEAS_TOL {
                    self.lo[b] - x
                } else if x > self.hi[b] + FEAS_TOL {
                    x - self.hi[b]
                } else {
                    continue;
                };
                let dir = if x < self.lo[b] { 1.0 } else { -1.0 };
                let better = match leave {
                    None => true,
                    Some((r, v, _)) => {
                        if bland {
                            b < self.basis[r]
                        } else {
                            viol > v
                        }
                    }
                };
                if better {
                    leave = Some((i, viol, dir));
                }
            }
            let Some((r, _, dir)) = leave else {
                return (LpStatus::Optimal, d, xb);
            };
            if iterations >= self.iteration_limit {
                return (LpStatus::IterationLimit, d, xb);
            }

            // Pivot row over all nonbasic columns, then the ratio test.
            let mut best_q: Option<usize> = None;
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            {
                let rho = &self.binv[r];
                for j in 0..total {
                    if self.pos[j].is_some() {
                        alpha_row[j] = 0.0;
                        continue;
                    }
                    let alpha = self.column_dot(j, rho);
                    alpha_row[j] = alpha;
                    if self.lo[j] == self.hi[j] || alpha.abs() <= PIVOT_TOL {
                        continue;
                    }
                    let eligible = if self.at_upper[j] {
                        dir * alpha > 0.0
                    } else {
                        dir * alpha < 0.0
                    };
                    if eligible {
                        let dj = if self.at_upper[j] { (-d[j]).max(0.0) } else { d[j].max(0.0) };
                        cands.push((j, alpha, dj));
                    }
                }
            }
            if cands.is_empty() {
                if !retried && self.since_refactor > 0 {
                    retried = true;
                    self.refactor();
                    d = self.reduced_costs();
                    self.place_nonbasics(&d);
                    xb = self.basic_values();
                    continue;
                }
                return (LpStatus::Infeasible, d, xb);
            }
            if bland {
                let best = cands
                    .iter()
                    .map(|&(_, a, dj)| dj / a.abs())
                    .fold(f64::INFINITY, f64::min);
                best_q = cands
                    .iter()
                    .filter(|&&(_, a, dj)| dj / a.abs() <= best + 1e-12)
                    .map(|&(j, _, _)| j)
                    .min();
            } else {
                let theta_max = cands
                    .iter()
                    .map(|&(_, a, dj)| (dj + DUAL_TOL) / a.abs())
                    .fold(f64::INFINITY, f64::min);
                let mut best_abs = 0.0;
                for &(j, a, dj) in &cands {
                    if dj / a.abs() <= theta_max && a.abs() > best_abs {
                        best_abs = a.abs();
                        best_q = Some(j);
                    }
                }
            }
            let q = best_q.expect("candidate list is non-empty");
            let alpha_rq = alpha_row[q];
            let dq = if self.at_upper[q] { (-d[q]).max(0.0) } else { d[q].max(0.0) };
            if dq / alpha_rq.abs() <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            let mut col = vec![0.0; self.m];
            self.for_column(q, |k, a| {
                for (i, row) in self.binv.iter().enumerate() {
                    col[i] += row[k] * a;
                }
            });
            let piv = col[r];
            if piv.abs() < PIVOT_TOL || (piv - alpha_rq).abs() > 1e-6 * (1.0 + piv.abs()) {
                // The row and column disagree: numerical drift, refactor and retry.
                self.refactor();
                d = self.reduced_costs();
                self.place_nonbasics(&d);
                xb = self.basic_values();
                iterations += 1;
                continue;
            }

            // Dual update.
            let theta_d = d[q] / piv;
            for j in 0..total {
                if self.pos[j].is_none() && alpha_row[j] != 0.0 {
                    d[j] -= theta_d * alpha_row[j];
                }
            }
            let leaving = self.basis[r];
            d[q] = 0.0;
            d[leaving] = -theta_d;

            // Primal update: the leaving variable lands on its violated bound.
            let target = if dir > 0.0 { self.lo[leaving] } else { self.hi[leaving] };
            let delta = (xb[r] - target) / piv;
            let xq = self.nonbasic_value(q) + delta;
            for (x, c) in xb.iter_mut().zip(&col) {
                *x -= delta * c;
            }
            xb[r] = xq;

            let pivot_row: Vec<f64> = self.binv[r].iter().map(|v| v / piv).collect();
            for (i, row) in self.binv.iter_mut().enumerate() {
                if i == r {
                    row.copy_from_slice(&pivot_row);
                } else if col[i] != 0.0 {
                    let f = col[i];
                    for (v, pv) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * pv;
                    }
                }
            }
            self.basis[r] = q;
            self.pos[q] = Some(r);
            self.pos[leaving] = None;
            self.at_upper[leaving] = dir < 0.0;
            self.since_refactor += 1;
            iterations += 1;
            self.total_iterations += 1;
        }
    }
}

/// One-shot LP relaxation of `model` with optional extra rows.
pub fn solve_lp_relaxation(model: &Model, extra_rows: &[Constraint]) -> Result<LpSolution, ModelError> {
    let mut lp = DualSimplex::new(model)?;
    for row in extra_rows {
        lp.add_row(row)?;
    }
    Ok(lp.solve(None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::VarType;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn single_variable() {
        let mut m = Model::new("a");
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        m.add_row("c", vec![(x, 1.0)], Sense::Le, 1.0).unwrap();
        m.set_objective(ObjSense::Maximize, vec![(x, 1.0)]).unwrap();
        let s = solve_lp_relaxation(&m, &[]).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(approx(s.objective, 1.0));
    }

    #[test]
    fn single_binding_row() {
        let mut m = Model::new("b");
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        let y = m.add_continuous("y", 0.0, 1.0).unwrap();
        m.add_row("c", vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.5).unwrap();
        m.set_objective(ObjSense::Maximize, vec![(x, 1.0), (y, 1.0)]).unwrap();
        let s = solve_lp_relaxation(&m, &[]).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(approx(s.objective, 1.5));
        assert!(m.max_violation(&s.values) < 1e-9);
    }

    #[test]
    fn knapsack_fractional_vertex() {
        // max 10a + 7b + 4c  s.t. 5a + 4b + 3c <= 7. By ratio order a, b, c
        // the vertex is a = 1, b = 0.5, c = 0 with value 13.5.
        let mut m = Model::new("k");
        let v: Vec<usize> = (0..3).map(|i| m.add_binary(format!("x{i}"))).collect();
        m.add_row("cap", vec![(v[0], 5.0), (v[1], 4.0), (v[2], 3.0)], Sense::Le, 7.0)
            .unwrap();
        m.set_objective(ObjSense::Maximize, vec![(v[0], 10.0), (v[1], 7.0), (v[2], 4.0)])
            .unwrap();
        let s = solve_lp_relaxation(&m, &[]).unwrap();
        assert!(approx(s.objective, 13.5));
        assert!(approx(s.values[0], 1.0) && approx(s.values[1], 0.5) && approx(s.values[2], 0.0));
    }

    #[test]
    fn infeasible_and_equalities() {
        let mut m = Model::new("i");
        let x = m.add_continuous("x", 0.0, 1.0).unwrap();
        let y = m.add_continuous("y", 0.0, 1.0).unwrap();
        m.add_row("e", vec![(x, 1.0), (y, 1.0)], Sense::Eq, 1.0).unwrap();
        m.add_row("g", vec![(x, 1.0)], Sense::Ge, 0.25).unwrap();
        m.set_objective(ObjSense::Minimize, vec![(x, 2.0), (y, 1.0)]).unwrap();
        let s = solve_lp_relaxation(&m, &[]).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(approx(s.objective, 1.25));
        let extra = Constraint::new("bad", vec![(y, 1.0)], Sense::Ge, 0.9);
        assert_eq!(solve_lp_relaxation(&m, &[extra]).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_column_is_rejected() {
        let mut m = Model::new("u");
        m.add_var("x", 0.0, f64::INFINITY, VarType::Continuous).unwrap();
        assert!(matches!(DualSimplex::new(&m), Err(ModelError::UnboundedColumn(_))));
    }

    #[test]
    fn transportation_lp_is_integral() {
        // 2 supplies (3, 4), 3 demands (2, 2, 3); integral data gives an
        // integral vertex and the LP optimum equals the integer optimum.
        let supply = [3.0, 4.0];
        let demand = [2.0, 2.0, 3.0];
        let cost = [[4.0, 6.0, 9.0], [5.0, 3.0, 2.0]];
        let mut m = Model::new("t");
        let mut x = [[0usize; 3]; 2];
        for i in 0..2 {
            for j in 0..3 {
                x[i][j] = m.add_var(format!("x{i}{j}"), 0.0, 7.0, VarType::Integer).unwrap();
            }
        }
        for i in 0..2 {
            m.add_row(format!("s{i}"), (0..3).map(|j| (x[i][j], 1.0)).collect(), Sense::Le, supply[i])
                .unwrap();
        }
        for j in 0..3 {
            m.add_row(format!("d{j}"), (0..2).map(|i| (x[i][j], 1.0)).collect(), Sense::Eq, demand[j])
                .unwrap();
        }
        let obj = (0..2).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| (x[i][j], cost[i][j])).collect();
        m.set_objective(ObjSense::Minimize, obj).unwrap();
        let s = solve_lp_relaxation(&m, &[]).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(s.values.iter().all(|v| (v - v.round()).abs() < 1e-9));
        // Brute force over integer shipments.
        let mut best = f64::INFINITY;
        for a in 0..=2 {
            for b in 0..=2 {
                for c in 0..=3 {
                    if a + b + c > 3 {
                        continue;
                    }
                    let (d, e, f) = (2 - a, 2 - b, 3 - c);
                    if d + e + f > 4 {
                        continue;
                    }
                    let v = 4.0 * a as f64 + 6.0 * b as f64 + 9.0 * c as f64 + 5.0 * d as f64 + 3.0 * e as f64 + 2.0 * f as f64;
                    best = best.min(v);
                }
            }
        }
        assert!(approx(s.objective, best));
    }

    #[test]
    fn warm_start_after_bounds_and_rows() {
        let mut m = Model::new("w");
        let v: Vec<usize> = (0..3).map(|i| m.add_binary(format!("x{i}"))).collect();
        m.add_row("cap", vec![(v[0], 5.0), (v[1], 4.0), (v[2], 3.0)], Sense::Le, 7.0)
            .unwrap();
        m.set_objective(ObjSense::Maximize, vec![(v[0], 10.0), (v[1], 7.0), (v[2], 4.0)])
            .unwrap();
        let mut lp = DualSimplex::new(&m).unwrap();
        assert!(approx(lp.solve(None).objective, 13.5));
        lp.set_bounds(v[1], 0.0, 0.0);
        let s = lp.solve(None);
        assert!(approx(s.objective, 10.0 + 4.0 * 2.0 / 3.0));
        lp.set_bounds(v[1], 0.0, 1.0);
        assert!(approx(lp.solve(None).objective, 13.5));
        lp.add_row(&Constraint::new("cut", vec![(v[0], 1.0), (v[1], 1.0)], Sense::Le, 1.0))
            .unwrap();
        let s = lp.solve(None);
        let mut full = m.clone();
        full.add_row("cut", vec![(v[0], 1.0), (v[1], 1.0)], Sense::Le, 1.0).unwrap();
        assert!(approx(s.objective, solve_lp_relaxation(&full, &[]).unwrap().objective));
        assert_eq!(lp.solve(Some(100.0)).status, LpStatus::Cutoff);
    }
}
