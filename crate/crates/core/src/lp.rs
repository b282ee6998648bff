//! LP relaxation engine: a bounded-variable dual simplex over a reduced
//! basis factor.
//!
//! Every row `a.x` gets a logical variable `y = a.x` carrying the row's
//! bounds, so the constraint system is the homogeneous `A x - y = 0`.
//! Structural columns are boxed in `[0, 1]`, which makes the all-logical
//! basis dual feasible: each nonbasic structural can sit at whichever bound
//! its reduced cost prefers. The dual simplex is therefore the only
//! algorithm needed, both for the first solve and for re-solves after rows
//! are appended or bounds change.

use thiserror::Error;

use crate::ip_model::{IpModel, LinearConstraint, Sense};

/// Primal feasibility tolerance for rows and bounds.
pub const FEAS_TOL: f64 = 1e-6;
/// Reduced-cost optimality tolerance.
pub const OPT_TOL: f64 = 1e-7;
/// Smallest pivot element accepted.
pub const PIVOT_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
pub const DEFAULT_STALL_LIMIT: usize = 1000;

const REFACTOR_INTERVAL: usize = 100;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("the model has no columns")]
    NoColumns,
    #[error("column {0} fixed to both 0 and 1")]
    ConflictingFixing(usize),
    #[error("column {0} out of range")]
    UnknownColumn(usize),
    #[error("simplex failed to converge after {iterations} iterations")]
    NumericalFailure { iterations: usize },
    #[error("column {0} is not basic")]
    NotBasic(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// A variable of the LP: a structural column or the logical of a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LpVar {
    Column(usize),
    Row(usize),
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Column values, clamped into their bounds.
    pub values: Vec<f64>,
    pub objective: f64,
    pub column_status: Vec<BasisStatus>,
    pub row_status: Vec<BasisStatus>,
    /// Simplex pivots spent in the solve that produced this solution.
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// One nonbasic term of a tableau row, in bound-shifted form: the variable
/// enters as `x' = sign * (x - bound)`, which is zero at the current vertex
/// and non-negative on the box. `sign` is `+1` at a lower bound, `-1` at an
/// upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TableauTerm {
    pub var: LpVar,
    pub coef: f64,
    pub bound: f64,
    pub sign: f64,
}

/// `basic + sum(coef * x') = rhs`. Logicals of equality rows are omitted
/// since their shifted value is zero at every feasible point.
#[derive(Debug, Clone, PartialEq)]
pub struct TableauRow {
    pub basic: usize,
    pub rhs: f64,
    pub terms: Vec<TableauTerm>,
}

impl TableauRow {
    /// Value of the basic column implied by `point` through this row.
    pub fn implied_value(&self, point: &[f64], model: &IpModel) -> f64 {
        let shifted: f64 = self
            .terms
            .iter()
            .map(|t| {
                let x = match t.var {
                    LpVar::Column(j) => point[j],
                    LpVar::Row(i) => model.rows()[i].activity(point),
                };
                t.coef * t.sign * (x - t.bound)
            })
            .sum();
        self.rhs - shifted
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic,
    Lower,
    Upper,
}

const NONE: usize = usize::MAX;

/// Solves the relaxation of `model` from scratch under `fixings`.
pub fn solve_relaxation(model: &IpModel, fixings: &[(usize, bool)]) -> Result<LpSolution, LpError> {
    let mut lp = LpRelaxation::new(model)?;
    lp.set_fixings(fixings)?;
    lp.solve()
}

/// Appends `rows` and re-optimizes from the current basis.
pub fn add_rows_and_resolve(lp: &mut LpRelaxation, rows: &[LinearConstraint]) -> Result<LpSolution, LpError> {
    lp.add_rows(rows);
    lp.solve()
}

/// Incrementally maintained LP over a model's rows; rows can be appended
/// and column bounds changed between solves, each re-solve starting from
/// the previous basis.
///
/// The basis is kept in reduced form. With `S` the basic columns and `R`
/// the rows whose logical is nonbasic (`|R| = |S|`), only the inverse of the
/// square block `A[R, S]` is stored; basic logicals are plain row
/// activities. Appending a row leaves the factor untouched, and each pivot
/// is a rank-one update, a bordering or a deletion of the block inverse.
#[derive(Debug, Clone)]
pub struct LpRelaxation {
    ncols: usize,
    cost: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    col_rows: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    state: Vec<VarState>,
    x: Vec<f64>,
    d: Vec<f64>,
    basic_cols: Vec<usize>,
    col_slot: Vec<usize>,
    tight_rows: Vec<usize>,
    row_slot: Vec<usize>,
    /// `minv[b][a]`: inverse of `A[tight_rows, basic_cols]`.
    minv: Vec<Vec<f64>>,
    since_refactor: usize,
    stall_limit: usize,
    rho: Vec<f64>,
    alpha: Vec<f64>,
    total_iterations: u64,
}

impl LpRelaxation {
    pub fn new(model: &IpModel) -> Result<Self, LpError> {
        let ncols = model.n_columns();
        if ncols == 0 {
            return Err(LpError::NoColumns);
        }
        let cost = model.objective();
        let state: Vec<VarState> = cost
            .iter()
            .map(|&c| if c > 0.0 { VarState::Upper } else { VarState::Lower })
            .collect();
        let x = state
            .iter()
            .map(|&s| if s == VarState::Upper { 1.0 } else { 0.0 })
            .collect();
        let mut lp = LpRelaxation {
            ncols,
            d: cost.clone(),
            cost,
            rows: Vec::new(),
            col_rows: vec![Vec::new(); ncols],
            lo: vec![0.0; ncols],
            hi: vec![1.0; ncols],
            state,
            x,
            basic_cols: Vec::new(),
            col_slot: vec![NONE; ncols],
            tight_rows: Vec::new(),
            row_slot: Vec::new(),
            minv: Vec::new(),
            since_refactor: 0,
            stall_limit: DEFAULT_STALL_LIMIT,
            rho: Vec::new(),
            alpha: Vec::new(),
            total_iterations: 0,
        };
        for row in model.rows() {
            lp.add_row(row);
        }
        Ok(lp)
    }

    /// Degenerate pivots tolerated before falling back to Bland's rule.
    pub fn set_stall_limit(&mut self, limit: usize) {
        self.stall_limit = limit;
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_columns(&self) -> usize {
        self.ncols
    }

    /// Pivots performed over the lifetime of this engine.
    pub fn total_iterations(&self) -> u64 {
        self.total_iterations
    }

    fn n_vars(&self) -> usize {
        self.ncols + self.rows.len()
    }

    fn is_basic(&self, j: usize) -> bool {
        self.state[j] == VarState::Basic
    }

    /// Appends a row with a basic logical; the basis stays dual feasible
    /// and the next `solve` re-optimizes with the dual simplex.
    pub fn add_row(&mut self, row: &LinearConstraint) {
        let i = self.rows.len();
        let (lo, hi) = match row.sense {
            Sense::Ge => (row.rhs, f64::INFINITY),
            Sense::Le => (f64::NEG_INFINITY, row.rhs),
            Sense::Eq => (row.rhs, row.rhs),
        };
        let activity: f64 = row.terms().iter().map(|&(j, a)| a * self.x[j]).sum();
        for &(j, a) in row.terms() {
            self.col_rows[j].push((i, a));
        }
        self.rows.push(row.terms().to_vec());
        self.cost.push(0.0);
        self.lo.push(lo);
        self.hi.push(hi);
        self.d.push(0.0);
        self.state.push(VarState::Basic);
        self.x.push(activity);
        self.row_slot.push(NONE);
    }

    pub fn add_rows(&mut self, rows: &[LinearConstraint]) {
        for r in rows {
            self.add_row(r);
        }
    }

    /// Replaces all column bound overrides: listed columns are fixed to the
    /// given value, the rest return to `[0, 1]`.
    pub fn set_fixings(&mut self, fixings: &[(usize, bool)]) -> Result<(), LpError> {
        let mut fixed: Vec<Option<bool>> = vec![None; self.ncols];
        for &(j, v) in fixings {
            if j >= self.ncols {
                return Err(LpError::UnknownColumn(j));
            }
            match fixed[j] {
                Some(prev) if prev != v => return Err(LpError::ConflictingFixing(j)),
                _ => fixed[j] = Some(v),
            }
        }
        for j in 0..self.ncols {
            let (lo, hi) = match fixed[j] {
                Some(true) => (1.0, 1.0),
                Some(false) => (0.0, 0.0),
                None => (0.0, 1.0),
            };
            self.lo[j] = lo;
            self.hi[j] = hi;
            if self.is_basic(j) {
                continue;
            }
            self.state[j] = if lo == hi {
                VarState::Lower
            } else if self.d[j] > OPT_TOL {
                VarState::Upper
            } else if self.d[j] < -OPT_TOL {
                VarState::Lower
            } else {
                self.state[j]
            };
            self.x[j] = if self.state[j] == VarState::Upper { hi } else { lo };
        }
        self.compute_primal();
        Ok(())
    }

    /// Basic values from the nonbasic ones.
    fn compute_primal(&mut self) {
        let rhs: Vec<f64> = self
            .tight_rows
            .iter()
            .map(|&i| {
                let mut v = self.x[self.ncols + i];
                for &(j, a) in &self.rows[i] {
                    if self.state[j] != VarState::Basic {
                        v -= a * self.x[j];
                    }
                }
                v
            })
            .collect();
        for (b, &j) in self.basic_cols.iter().enumerate() {
            self.x[j] = dot(&self.minv[b], &rhs);
        }
        for i in 0..self.rows.len() {
            if self.row_slot[i] == NONE {
                self.x[self.ncols + i] = self.rows[i].iter().map(|&(j, a)| a * self.x[j]).sum();
            }
        }
    }

    /// Reduced costs from the duals of the tight rows.
    fn compute_reduced_costs(&mut self) {
        let k = self.tight_rows.len();
        let mut y_tight = vec![0.0; k];
        for (b, &j) in self.basic_cols.iter().enumerate() {
            let c = self.cost[j];
            if c != 0.0 {
                for (y, &m) in y_tight.iter_mut().zip(&self.minv[b]) {
                    *y += c * m;
                }
            }
        }
        let m = self.rows.len();
        let mut y = vec![0.0; m];
        for (a, &i) in self.tight_rows.iter().enumerate() {
            y[i] = y_tight[a];
        }
        for j in 0..self.ncols {
            self.d[j] = if self.is_basic(j) {
                0.0
            } else {
                self.cost[j] - self.col_rows[j].iter().map(|&(i, a)| y[i] * a).sum::<f64>()
            };
        }
        for i in 0..m {
            self.d[self.ncols + i] = y[i];
        }
    }

    /// Drops to the all-logical basis, which is always dual feasible.
    fn reset_to_slack_basis(&mut self) {
        for j in 0..self.ncols {
            self.state[j] = if self.lo[j] == self.hi[j] || self.cost[j] <= 0.0 {
                VarState::Lower
            } else {
                VarState::Upper
            };
            self.x[j] = if self.state[j] == VarState::Upper { self.hi[j] } else { self.lo[j] };
            self.col_slot[j] = NONE;
        }
        for i in 0..self.rows.len() {
            self.state[self.ncols + i] = VarState::Basic;
            self.row_slot[i] = NONE;
        }
        self.basic_cols.clear();
        self.tight_rows.clear();
        self.minv.clear();
        self.compute_primal();
        self.compute_reduced_costs();
        self.since_refactor = 0;
    }

    /// Recomputes the block inverse from scratch, then primal values and
    /// reduced costs.
    fn refactor(&mut self) -> bool {
        let k = self.basic_cols.len();
        if self.tight_rows.len() != k {
            return false;
        }
        let mut block = vec![vec![0.0; k]; k];
        for (b, &j) in self.basic_cols.iter().enumerate() {
            for &(i, a) in &self.col_rows[j] {
                let slot = self.row_slot[i];
                if slot != NONE {
                    block[slot][b] = a;
                }
            }
        }
        let Some(inv) = invert_dense(block) else {
            return false;
        };
        self.minv = inv;
        self.compute_primal();
        self.compute_reduced_costs();
        self.since_refactor = 0;
        true
    }

    fn refactor_or_reset(&mut self) {
        if !self.refactor() {
            log::debug!("basis refactorization failed; restarting from slack basis");
            self.reset_to_slack_basis();
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let x = self.x[j];
        (self.lo[j] - x).max(x - self.hi[j]).max(0.0)
    }

    fn choose_leaving(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n_vars() {
            if !self.is_basic(j) {
                continue;
            }
            let inf = self.infeasibility(j);
            if inf <= FEAS_TOL {
                continue;
            }
            // Variables are scanned in index order, so Bland keeps the first.
            if best.is_none_or(|(_, bi)| !bland && inf > bi) {
                best = Some((j, inf));
            }
        }
        best.map(|(j, _)| j)
    }

    /// `rho`: the row of the block inverse that expresses basic variable `r`
    /// through the tight-row logicals.
    fn compute_rho(&mut self, r: usize) {
        let k = self.tight_rows.len();
        self.rho.clear();
        if r < self.ncols {
            self.rho.extend_from_slice(&self.minv[self.col_slot[r]]);
        } else {
            self.rho.resize(k, 0.0);
            for &(j, a) in &self.rows[r - self.ncols] {
                let b = self.col_slot[j];
                if b != NONE {
                    for (dst, &m) in self.rho.iter_mut().zip(&self.minv[b]) {
                        *dst += a * m;
                    }
                }
            }
        }
    }

    /// Tableau row of basic variable `r` over nonbasic variables, into
    /// `alpha`, such that `x_r = const - sum(alpha_j * x_j)`. Needs `rho`.
    fn compute_alpha_row(&mut self, r: usize) {
        let nv = self.n_vars();
        self.alpha.clear();
        self.alpha.resize(nv, 0.0);
        for (a, &i) in self.tight_rows.iter().enumerate() {
            let p = self.rho[a];
            if p == 0.0 {
                continue;
            }
            for &(j, coef) in &self.rows[i] {
                self.alpha[j] += p * coef;
            }
            self.alpha[self.ncols + i] = -p;
        }
        if r >= self.ncols {
            for &(j, coef) in &self.rows[r - self.ncols] {
                self.alpha[j] -= coef;
            }
        }
        for &j in &self.basic_cols {
            self.alpha[j] = 0.0;
        }
    }

    /// Block inverse times the tight-row part of column `q`.
    fn column_in_basis(&self, q: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.basic_cols.len()];
        for &(i, a) in &self.col_rows[q] {
            let slot = self.row_slot[i];
            if slot == NONE {
                continue;
            }
            for (wb, row) in w.iter_mut().zip(&self.minv) {
                *wb += a * row[slot];
            }
        }
        w
    }

    /// Dual ratio test; `increase` says whether the leaving basic variable
    /// must move up to its lower bound.
    fn choose_entering(&self, increase: bool, bland: bool) -> Option<usize> {
        let delta = if increase { 1.0 } else { -1.0 };
        let mut eligible: Vec<(usize, f64, f64)> = Vec::new(); // (var, slack, |alpha|)
        for j in 0..self.n_vars() {
            let dir = match self.state[j] {
                VarState::Basic => continue,
                VarState::Lower => 1.0,
                VarState::Upper => -1.0,
            };
            if self.lo[j] == self.hi[j] {
                continue;
            }
            let a = self.alpha[j];
            if a.abs() <= PIVOT_TOL || a * dir * delta >= 0.0 {
                continue;
            }
            let slack = (-self.d[j] * dir).max(0.0);
            eligible.push((j, slack, a.abs()));
        }
        if eligible.is_empty() {
            return None;
        }
        if bland {
            let min = eligible
                .iter()
                .map(|&(_, s, a)| s / a)
                .fold(f64::INFINITY, f64::min);
            return eligible
                .iter()
                .filter(|&&(_, s, a)| s / a <= min + 1e-12)
                .map(|&(j, _, _)| j)
                .min();
        }
        // Harris two-pass: bound the step with a relaxed tolerance, then take
        // the largest pivot among candidates within it.
        let bound = eligible
            .iter()
            .map(|&(_, s, a)| (s + OPT_TOL) / a)
            .fold(f64::INFINITY, f64::min);
        let mut best: Option<(usize, f64)> = None;
        for &(j, s, a) in &eligible {
            if s / a <= bound && best.is_none_or(|(_, ba)| a > ba) {
                best = Some((j, a));
            }
        }
        best.map(|(j, _)| j)
    }

    fn remove_basic_slot(&mut self, b: usize) {
        let j = self.basic_cols.swap_remove(b);
        self.minv.swap_remove(b);
        self.col_slot[j] = NONE;
        if b < self.basic_cols.len() {
            self.col_slot[self.basic_cols[b]] = b;
        }
    }

    fn remove_tight_slot(&mut self, a: usize) {
        let i = self.tight_rows.swap_remove(a);
        for row in &mut self.minv {
            row.swap_remove(a);
        }
        self.row_slot[i] = NONE;
        if a < self.tight_rows.len() {
            self.row_slot[self.tight_rows[a]] = a;
        }
    }

    /// Basis change with `r` leaving and `q` entering; `rho` and `alpha`
    /// must describe row `r`. Returns false, changing nothing, when the
    /// stored inverse disagrees with the pivot element.
    fn pivot(&mut self, r: usize, q: usize) -> bool {
        let arq = self.alpha[q];
        let agree = |v: f64| (v - arq).abs() <= 1e-7 * (1.0 + arq.abs());
        match (r < self.ncols, q < self.ncols) {
            (true, true) => {
                let b = self.col_slot[r];
                let w = self.column_in_basis(q);
                if !agree(w[b]) {
                    return false;
                }
                let pivot_row: Vec<f64> = self.minv[b].iter().map(|&m| m / w[b]).collect();
                for (b2, row) in self.minv.iter_mut().enumerate() {
                    if b2 != b && w[b2] != 0.0 {
                        for (m, &p) in row.iter_mut().zip(&pivot_row) {
                            *m -= w[b2] * p;
                        }
                    }
                }
                self.minv[b] = pivot_row;
                self.basic_cols[b] = q;
                self.col_slot[q] = b;
                self.col_slot[r] = NONE;
            }
            (true, false) => {
                let b = self.col_slot[r];
                let a = self.row_slot[q - self.ncols];
                let piv = self.minv[b][a];
                let pivot_row = self.minv[b].clone();
                for (b2, row) in self.minv.iter_mut().enumerate() {
                    let f = row[a] / piv;
                    if b2 != b && f != 0.0 {
                        for (m, &p) in row.iter_mut().zip(&pivot_row) {
                            *m -= f * p;
                        }
                    }
                }
                self.remove_basic_slot(b);
                self.remove_tight_slot(a);
            }
            (false, true) => {
                let l = r - self.ncols;
                let w = self.column_in_basis(q);
                let mut s = 0.0;
                for &(j, a) in &self.rows[l] {
                    if j == q {
                        s += a;
                    } else if self.col_slot[j] != NONE {
                        s -= a * w[self.col_slot[j]];
                    }
                }
                if !agree(-s) {
                    return false;
                }
                let rho = std::mem::take(&mut self.rho);
                for (row, &wb) in self.minv.iter_mut().zip(&w) {
                    if wb != 0.0 {
                        for (m, &p) in row.iter_mut().zip(&rho) {
                            *m += wb * p / s;
                        }
                    }
                    row.push(-wb / s);
                }
                let mut new_row: Vec<f64> = rho.iter().map(|&p| -p / s).collect();
                new_row.push(1.0 / s);
                self.minv.push(new_row);
                self.col_slot[q] = self.basic_cols.len();
                self.basic_cols.push(q);
                self.row_slot[l] = self.tight_rows.len();
                self.tight_rows.push(l);
                self.rho = rho;
            }
            (false, false) => {
                let l = r - self.ncols;
                let i = q - self.ncols;
                let a = self.row_slot[i];
                let piv = self.rho[a];
                for row in &mut self.minv {
                    let m_a = row[a];
                    if m_a != 0.0 {
                        for (m, &p) in row.iter_mut().zip(&self.rho) {
                            *m -= m_a * p / piv;
                        }
                        row[a] = m_a / piv;
                    }
                }
                self.tight_rows[a] = l;
                self.row_slot[l] = a;
                self.row_slot[i] = NONE;
            }
        }

        // Duals.
        let theta = self.d[q] / arq;
        for j in 0..self.n_vars() {
            if j != q && !self.is_basic(j) {
                let a = self.alpha[j];
                if a != 0.0 {
                    self.d[j] -= theta * a;
                }
            }
        }
        self.d[q] = 0.0;
        self.d[r] = -theta;

        // Primal.
        let fixed = self.lo[r] == self.hi[r];
        let (target, leave_state) = if self.x[r] < self.lo[r] {
            (self.lo[r], VarState::Lower)
        } else if fixed {
            (self.hi[r], VarState::Lower)
        } else {
            (self.hi[r], VarState::Upper)
        };
        self.state[r] = leave_state;
        self.x[r] = target;
        self.state[q] = VarState::Basic;
        self.compute_primal();
        self.since_refactor += 1;
        true
    }

    /// Nonbasic structurals whose reduced cost has the wrong sign are moved
    /// to their other bound. Returns whether any moved and the largest
    /// remaining dual infeasibility among logicals, which cannot be flipped.
    fn restore_dual_feasibility(&mut self) -> (bool, f64) {
        let mut flipped = false;
        let mut worst_logical = 0.0f64;
        for j in 0..self.n_vars() {
            let wrong = match self.state[j] {
                VarState::Basic => continue,
                _ if self.lo[j] == self.hi[j] => continue,
                VarState::Lower => self.d[j] > OPT_TOL,
                VarState::Upper => self.d[j] < -OPT_TOL,
            };
            if !wrong {
                continue;
            }
            if j < self.ncols {
                if self.state[j] == VarState::Lower {
                    self.state[j] = VarState::Upper;
                    self.x[j] = self.hi[j];
                } else {
                    self.state[j] = VarState::Lower;
                    self.x[j] = self.lo[j];
                }
                flipped = true;
            } else {
                worst_logical = worst_logical.max(self.d[j].abs());
            }
        }
        if flipped {
            self.compute_primal();
        }
        (flipped, worst_logical)
    }

    /// Re-optimizes from the current basis.
    pub fn solve(&mut self) -> Result<LpSolution, LpError> {
        let max_iterations = 50_000 + 50 * self.n_vars();
        let mut iterations = 0usize;
        let mut degenerate = 0usize;
        let mut bland = false;
        let mut resets = 0usize;
        let mut failed_pivots = 0usize;

        if self.since_refactor >= REFACTOR_INTERVAL {
            self.refactor_or_reset();
        }
        loop {
            if iterations >= max_iterations || failed_pivots > 20 {
                self.total_iterations += iterations as u64;
                return Err(LpError::NumericalFailure { iterations });
            }
            if self.since_refactor >= REFACTOR_INTERVAL {
                self.refactor_or_reset();
            }
            let Some(r) = self.choose_leaving(bland) else {
                // Primal feasible: confirm on a fresh factorization.
                if self.since_refactor > 0 {
                    self.refactor_or_reset();
                    if self.choose_leaving(bland).is_some() {
                        continue;
                    }
                }
                let (flipped, worst) = self.restore_dual_feasibility();
                if flipped {
                    continue;
                }
                if worst > 1e-6 && resets == 0 {
                    log::debug!("dual infeasibility {worst:e} on a logical; restarting");
                    resets += 1;
                    self.reset_to_slack_basis();
                    continue;
                }
                break;
            };
            let increase = self.x[r] < self.lo[r];
            self.compute_rho(r);
            self.compute_alpha_row(r);
            let Some(q) = self.choose_entering(increase, bland) else {
                if self.since_refactor > 0 {
                    self.refactor_or_reset();
                    continue;
                }
                self.total_iterations += iterations as u64;
                return Ok(self.infeasible_solution(iterations));
            };
            let theta = self.d[q] / self.alpha[q];
            if !self.pivot(r, q) {
                failed_pivots += 1;
                log::debug!("pivot element disagrees with the stored inverse; refactoring");
                if self.since_refactor > 0 {
                    self.refactor_or_reset();
                } else {
                    self.reset_to_slack_basis();
                }
                continue;
            }
            if theta.abs() < 1e-12 {
                degenerate += 1;
                if degenerate > self.stall_limit && !bland {
                    log::debug!("degenerate stall; switching to Bland's rule");
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            iterations += 1;
        }
        self.total_iterations += iterations as u64;
        Ok(self.optimal_solution(iterations))
    }

    fn status_of(&self, j: usize) -> BasisStatus {
        match self.state[j] {
            VarState::Basic => BasisStatus::Basic,
            VarState::Lower => BasisStatus::AtLower,
            VarState::Upper => BasisStatus::AtUpper,
        }
    }

    fn optimal_solution(&self, iterations: usize) -> LpSolution {
        let values: Vec<f64> = (0..self.ncols)
            .map(|j| self.x[j].clamp(self.lo[j], self.hi[j]))
            .collect();
        let objective = values.iter().zip(&self.cost).map(|(x, c)| x * c).sum();
        LpSolution {
            status: LpStatus::Optimal,
            values,
            objective,
            column_status: (0..self.ncols).map(|j| self.status_of(j)).collect(),
            row_status: (0..self.rows.len()).map(|i| self.status_of(self.ncols + i)).collect(),
            iterations,
        }
    }

    fn infeasible_solution(&self, iterations: usize) -> LpSolution {
        LpSolution {
            status: LpStatus::Infeasible,
            values: vec![0.0; self.ncols],
            objective: f64::NEG_INFINITY,
            column_status: (0..self.ncols).map(|j| self.status_of(j)).collect(),
            row_status: (0..self.rows.len()).map(|i| self.status_of(self.ncols + i)).collect(),
            iterations,
        }
    }

    /// Tableau row of a basic column at the current basis, over nonbasic
    /// columns and row logicals in bound-shifted form.
    ///
    /// Column shifts are taken relative to the global box `[0, 1]` (a column
    /// at value 1 is written as `1 - x`), so rows derived from the tableau
    /// stay valid after branching fixings are lifted.
    pub fn tableau_row(&mut self, column: usize) -> Result<TableauRow, LpError> {
        if column >= self.ncols {
            return Err(LpError::UnknownColumn(column));
        }
        if !self.is_basic(column) {
            return Err(LpError::NotBasic(column));
        }
        self.compute_rho(column);
        self.compute_alpha_row(column);
        let mut terms = Vec::new();
        for j in 0..self.n_vars() {
            let a = self.alpha[j];
            if a.abs() <= 1e-12 || self.is_basic(j) {
                continue;
            }
            let value = self.x[j];
            let (var, sign) = if j < self.ncols {
                (LpVar::Column(j), if value > 0.5 { -1.0 } else { 1.0 })
            } else {
                if self.lo[j] == self.hi[j] {
                    continue;
                }
                let sign = if self.state[j] == VarState::Upper { -1.0 } else { 1.0 };
                (LpVar::Row(j - self.ncols), sign)
            };
            terms.push(TableauTerm {
                var,
                coef: a * sign,
                bound: value,
                sign,
            });
        }
        Ok(TableauRow {
            basic: column,
            rhs: self.x[column],
            terms,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gauss-Jordan inverse with partial pivoting; `None` when singular.
fn invert_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let k = a.len();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut r = vec![0.0; k];
            r[i] = 1.0;
            r
        })
        .collect();
    for c in 0..k {
        let (piv, best) = (c..k)
            .map(|r| (r, a[r][c].abs()))
            .fold((c, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best < 1e-11 {
            return None;
        }
        a.swap(c, piv);
        inv.swap(c, piv);
        let p = a[c][c];
        a[c].iter_mut().for_each(|x| *x /= p);
        inv[c].iter_mut().for_each(|x| *x /= p);
        let (pa, pi) = (a[c].clone(), inv[c].clone());
        for r in 0..k {
            if r == c {
                continue;
            }
            let f = a[r][c];
            if f == 0.0 {
                continue;
            }
            for (x, &y) in a[r].iter_mut().zip(&pa).skip(c) {
                *x -= f * y;
            }
            for (x, &y) in inv[r].iter_mut().zip(&pi) {
                *x -= f * y;
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ip_model::build_model;
    use crate::scores::{LocalScoreTable, ScoreEntry};

    fn entry(parents: &[usize], score: f64) -> ScoreEntry {
        ScoreEntry {
            parents: parents.to_vec(),
            score,
        }
    }

    fn two_var() -> IpModel {
        let t = LocalScoreTable::unnamed(vec![
            vec![entry(&[], -2.0), entry(&[1], -1.0)],
            vec![entry(&[], -2.0), entry(&[0], -1.0)],
        ])
        .unwrap();
        build_model(&t)
    }

    #[test]
    fn convexity_only_picks_best_parents() {
        let m = two_var();
        let s = solve_relaxation(&m, &[]).unwrap();
        assert!(s.is_optimal());
        assert!((s.objective + 2.0).abs() < 1e-9);
        assert_eq!(s.values, vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn two_cycle_cut_gives_minus_three() {
        let mut m = two_var();
        let row = m.cluster_row(&[0, 1], 1).unwrap();
        m.add_row(row);
        let s = solve_relaxation(&m, &[]).unwrap();
        assert!((s.objective + 3.0).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn fixing_every_column_of_a_child_to_zero_is_infeasible() {
        let m = two_var();
        let s = solve_relaxation(&m, &[(0, false), (1, false)]).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(matches!(
            solve_relaxation(&m, &[(0, false), (0, true)]),
            Err(LpError::ConflictingFixing(0))
        ));
    }

    #[test]
    fn fixings_respected_and_lifted() {
        let m = two_var();
        let mut lp = LpRelaxation::new(&m).unwrap();
        lp.set_fixings(&[(0, true)]).unwrap();
        let s = lp.solve().unwrap();
        assert_eq!(s.values[0], 1.0);
        assert_eq!(s.values[1], 0.0);
        assert!((s.objective + 3.0).abs() < 1e-9);
        lp.set_fixings(&[]).unwrap();
        let s = lp.solve().unwrap();
        assert!((s.objective + 2.0).abs() < 1e-9);
    }

    #[test]
    fn tableau_rows_hold_at_every_convexity_feasible_point() {
        let t = LocalScoreTable::unnamed(vec![
            vec![entry(&[], -5.0), entry(&[1], -1.0)],
            vec![entry(&[], -5.0), entry(&[2], -1.0)],
            vec![entry(&[], -5.0), entry(&[0], -1.0)],
        ])
        .unwrap();
        let mut m = build_model(&t);
        let row = m.cluster_row(&[0, 1, 2], 1).unwrap();
        m.add_row(row);
        let mut lp = LpRelaxation::new(&m).unwrap();
        let s = lp.solve().unwrap();
        assert!((s.objective + 7.0).abs() < 1e-9, "{}", s.objective);
        let mut checked = 0;
        for j in 0..m.n_columns() {
            if s.column_status[j] != BasisStatus::Basic {
                continue;
            }
            let tr = lp.tableau_row(j).unwrap();
            assert!((tr.implied_value(&s.values, &m) - s.values[j]).abs() < 1e-9);
            // Every choice of one parent set per child satisfies convexity.
            for mask in 0..8usize {
                let mut x = vec![0.0; 6];
                for u in 0..3 {
                    x[2 * u + (mask >> u & 1)] = 1.0;
                }
                assert!((tr.implied_value(&x, &m) - x[j]).abs() < 1e-9);
            }
            checked += 1;
        }
        assert!(checked > 0);
        let nb = (0..6).find(|&j| s.column_status[j] != BasisStatus::Basic).unwrap();
        assert!(matches!(lp.tableau_row(nb), Err(LpError::NotBasic(_))));
    }

    #[test]
    fn dense_inverse() {
        let a = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        let inv = invert_dense(a.clone()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i][k] * inv[k][j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!(invert_dense(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
    }
}
