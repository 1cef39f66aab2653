//! Dense two-phase tableau simplex.
//!
//! Problems are stated as
//! `minimize c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lo <= x <= hi`
//! and converted to standard form `min c'.y, A y = b, y >= 0, b >= 0`
//! by splitting free variables, shifting finite lower bounds, reflecting
//! upper-only bounds and adding rows for two-sided bounds.

use crate::error::{check_dim, IzoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Entering-variable selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest-index entering and leaving variables throughout.
    Bland,
    /// Most negative reduced cost until a stall of degenerate pivots, then
    /// Bland's rule for the rest of the phase.
    DantzigThenBland,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    /// Per-variable `(lower, upper)`; `None` means unbounded on that side.
    pub bounds: Vec<(Option<f64>, Option<f64>)>,
}

impl LpProblem {
    /// Problem with `n` nonnegative variables and no constraints.
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        Self {
            c,
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            bounds: vec![(Some(0.0), None); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) {
        self.add_le(row.into_iter().map(|v| -v).collect(), -rhs);
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn set_bounds(&mut self, j: usize, lower: Option<f64>, upper: Option<f64>) {
        self.bounds[j] = (lower, upper);
    }

    /// Largest constraint or bound violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let mut v = 0.0_f64;
        for (row, b) in self.a_ub.iter().zip(&self.b_ub) {
            v = v.max(dot(row) - b);
        }
        for (row, b) in self.a_eq.iter().zip(&self.b_eq) {
            v = v.max((dot(row) - b).abs());
        }
        for (xj, (lo, hi)) in x.iter().zip(&self.bounds) {
            if let Some(l) = lo {
                v = v.max(l - xj);
            }
            if let Some(h) = hi {
                v = v.max(xj - h);
            }
        }
        v
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        check_dim(n, self.bounds.len(), "LP bounds")?;
        check_dim(self.a_ub.len(), self.b_ub.len(), "LP inequality rhs")?;
        check_dim(self.a_eq.len(), self.b_eq.len(), "LP equality rhs")?;
        for row in self.a_ub.iter().chain(&self.a_eq) {
            check_dim(n, row.len(), "LP constraint row")?;
        }
        let finite = self.c.iter().chain(self.b_ub.iter()).chain(self.b_eq.iter()).all(|v| v.is_finite())
            && self.a_ub.iter().chain(&self.a_eq).flatten().all(|v| v.is_finite());
        if !finite {
            return Err(IzoError::Input("LP data must be finite".into()));
        }
        for (lo, hi) in &self.bounds {
            if let (Some(l), Some(h)) = (lo, hi) {
                if l > h {
                    return Err(IzoError::Input(format!("LP bound lower {l} > upper {h}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub rule: PivotRule,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { rule: PivotRule::Bland, max_iterations: 200_000, tolerance: 1e-9 }
    }
}

/// How an original variable is recovered from standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = offset + sign * y_col`
    Shifted { col: usize, offset: f64, sign: f64 },
    /// `x = y_pos - y_neg`
    Split { pos: usize, neg: usize },
}

struct Tableau {
    /// `rows x (cols + 1)`, last column is the rhs.
    t: Vec<f64>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
    /// Reduced-cost row, length `cols + 1`; last entry is minus the objective.
    d: Vec<f64>,
    blocked: Vec<bool>,
    /// Standard-form rows before any pivoting, for reinversion.
    original: Vec<f64>,
    cost: Vec<f64>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * (self.cols + 1) + self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.t[r * w + c];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for (v, pv) in self.t[i * w..(i + 1) * w].iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                self.t[i * w + c] = 0.0;
            }
        }
        let f = self.d[c];
        if f != 0.0 {
            for (v, pv) in self.d.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.d[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.cost = cost.to_vec();
        self.d = cost.to_vec();
        self.d.push(0.0);
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let w = self.cols + 1;
                for (v, tv) in self.d.iter_mut().zip(&self.t[i * w..(i + 1) * w]) {
                    *v -= cb * tv;
                }
            }
        }
    }

    /// Rebuilds the tableau as `B^-1 [A | b]` for the current basis by
    /// Gauss-Jordan elimination on the original rows, discarding the rounding
    /// error accumulated over many pivots. Leaves the tableau untouched if
    /// the basis matrix is numerically singular.
    fn reinvert(&mut self) {
        let w = self.cols + 1;
        let saved = std::mem::replace(&mut self.t, self.original.clone());
        let old_basis = self.basis.clone();
        let mut assigned = vec![false; self.rows];
        let mut basis = vec![usize::MAX; self.rows];
        for &c in &old_basis {
            let pick = (0..self.rows)
                .filter(|&i| !assigned[i])
                .max_by(|&a, &b| self.t[a * w + c].abs().total_cmp(&self.t[b * w + c].abs()));
            match pick {
                Some(r) if self.t[r * w + c].abs() > 1e-12 => {
                    self.pivot(r, c);
                    assigned[r] = true;
                    basis[r] = c;
                }
                _ => {
                    self.t = saved;
                    self.basis = old_basis;
                    return;
                }
            }
        }
        self.basis = basis;
        let cost = std::mem::take(&mut self.cost);
        self.set_costs(&cost);
    }

    /// Runs simplex pivots on the current cost row.
    fn optimize(&mut self, opts: &LpOptions, iterations: &mut usize) -> LpStatus {
        let tol = opts.tolerance;
        let mut bland = opts.rule == PivotRule::Bland;
        let mut degenerate_run = 0usize;
        let mut since_reinvert = 0usize;
        loop {
            if since_reinvert >= REINVERT_EVERY {
                self.reinvert();
                since_reinvert = 0;
            }
            if *iterations >= opts.max_iterations {
                return LpStatus::IterationLimit;
            }
            let entering = if bland {
                (0..self.cols).find(|&j| !self.blocked[j] && self.d[j] < -tol)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..self.cols {
                    if !self.blocked[j] && self.d[j] < -tol && best.is_none_or(|(_, v)| self.d[j] < v) {
                        best = Some((j, self.d[j]));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(c) = entering else {
                // confirm optimality on a freshly inverted tableau
                if since_reinvert > 0 {
                    self.reinvert();
                    since_reinvert = 0;
                    continue;
                }
                return LpStatus::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > tol {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - tol * (1.0 + lr.abs())
                                || (ratio <= lr + tol * (1.0 + lr.abs()) && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return LpStatus::Unbounded;
            };
            if ratio <= tol {
                degenerate_run += 1;
                if degenerate_run > 50 {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
            // clamp rounding below zero on the rhs
            for i in 0..self.rows {
                let w = self.cols + 1;
                let v = &mut self.t[i * w + self.cols];
                if *v < 0.0 && *v > -tol {
                    *v = 0.0;
                }
            }
            *iterations += 1;
            since_reinvert += 1;
        }
    }
}

/// Pivots between scheduled reinversions of the tableau.
const REINVERT_EVERY: usize = 500;

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    solve_lp_with(problem, &LpOptions::default())
}

pub fn solve_lp_with(problem: &LpProblem, opts: &LpOptions) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.num_vars();

    // Column layout and row list of the standard form.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &problem.bounds {
        match (lo, hi) {
            (None, None) => {
                maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
            (Some(l), h) => {
                maps.push(VarMap::Shifted { col: ncols, offset: l, sign: 1.0 });
                if let Some(h) = h {
                    bound_rows.push((ncols, h - l));
                }
                ncols += 1;
            }
            (None, Some(h)) => {
                maps.push(VarMap::Shifted { col: ncols, offset: h, sign: -1.0 });
                ncols += 1;
            }
        }
    }
    let struct_cols = ncols;

    // Expresses an original row in standard columns; returns the rhs shift.
    let expand = |row: &[f64]| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; struct_cols];
        let mut shift = 0.0;
        for (a, m) in row.iter().zip(&maps) {
            match *m {
                VarMap::Shifted { col, offset, sign } => {
                    out[col] += a * sign;
                    shift += a * offset;
                }
                VarMap::Split { pos, neg } => {
                    out[pos] += a;
                    out[neg] -= a;
                }
            }
        }
        (out, shift)
    };

    // (row, rhs, has_slack)
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for (row, b) in problem.a_ub.iter().zip(&problem.b_ub) {
        let (r, s) = expand(row);
        rows.push((r, b - s, true));
    }
    for &(col, width) in &bound_rows {
        let mut r = vec![0.0; struct_cols];
        r[col] = 1.0;
        rows.push((r, width, true));
    }
    for (row, b) in problem.a_eq.iter().zip(&problem.b_eq) {
        let (r, s) = expand(row);
        rows.push((r, b - s, false));
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.2).count();

    let mut cost = vec![0.0; struct_cols];
    for (cj, mj) in problem.c.iter().zip(&maps) {
        match *mj {
            VarMap::Shifted { col, sign, .. } => cost[col] += cj * sign,
            VarMap::Split { pos, neg } => {
                cost[pos] += cj;
                cost[neg] -= cj;
            }
        }
    }

    // Slack columns follow the structural ones; artificials come last.
    let needs_art: Vec<bool> = rows.iter().map(|(_, rhs, has_slack)| !(*has_slack && *rhs >= 0.0)).collect();
    let n_art = needs_art.iter().filter(|&&a| a).count();
    let cols = struct_cols + n_slack + n_art;
    let w = cols + 1;
    let mut t = vec![0.0; m * w];
    let mut basis = vec![0usize; m];
    let (mut slack_j, mut art_j) = (struct_cols, struct_cols + n_slack);
    for (i, (row, rhs, has_slack)) in rows.iter().enumerate() {
        let sign = if *rhs < 0.0 { -1.0 } else { 1.0 };
        let scale = row.iter().fold(rhs.abs(), |a, v| a.max(v.abs())).max(1e-300);
        let s = sign / scale;
        for (j, v) in row.iter().enumerate() {
            t[i * w + j] = v * s;
        }
        t[i * w + cols] = rhs * s;
        if *has_slack {
            t[i * w + slack_j] = s;
            if !needs_art[i] {
                basis[i] = slack_j;
            }
            slack_j += 1;
        }
        if needs_art[i] {
            t[i * w + art_j] = 1.0;
            basis[i] = art_j;
            art_j += 1;
        }
    }

    let original = t.clone();
    let mut tab =
        Tableau { t, rows: m, cols, basis, d: Vec::new(), blocked: vec![false; cols], original, cost: Vec::new() };
    let mut iterations = 0usize;
    let is_art = |j: usize| j >= struct_cols + n_slack;

    if n_art > 0 {
        let phase1: Vec<f64> = (0..cols).map(|j| if is_art(j) { 1.0 } else { 0.0 }).collect();
        tab.set_costs(&phase1);
        match tab.optimize(opts, &mut iterations) {
            LpStatus::Optimal => {}
            LpStatus::IterationLimit => return Ok(failed(n, LpStatus::IterationLimit, iterations)),
            // phase 1 is bounded below by zero
            LpStatus::Unbounded | LpStatus::Infeasible => unreachable!("phase one cannot be unbounded"),
        }
        let infeasibility = -tab.d[cols];
        if infeasibility > 1e-9 * (1.0 + m as f64).sqrt() {
            return Ok(failed(n, LpStatus::Infeasible, iterations));
        }
        // Drive artificials out of the basis where possible. One that stays
        // sits on a redundant row at value zero and is never priced in again.
        for i in 0..m {
            if is_art(tab.basis[i]) {
                let pick = (0..struct_cols + n_slack)
                    .filter(|&j| tab.at(i, j).abs() > opts.tolerance)
                    .max_by(|&a, &b| tab.at(i, a).abs().total_cmp(&tab.at(i, b).abs()));
                if let Some(j) = pick {
                    tab.pivot(i, j);
                }
            }
        }
        for j in struct_cols + n_slack..cols {
            tab.blocked[j] = true;
        }
    }

    let mut full_cost = cost.clone();
    full_cost.resize(cols, 0.0);
    tab.set_costs(&full_cost);
    let status = tab.optimize(opts, &mut iterations);
    if status != LpStatus::Optimal {
        return Ok(failed(n, status, iterations));
    }

    let mut y = vec![0.0; cols];
    for i in 0..tab.rows {
        y[tab.basis[i]] = tab.rhs(i);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shifted { col, offset, sign } => offset + sign * y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let objective = problem.c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution { status: LpStatus::Optimal, x, objective, iterations })
}

fn failed(n: usize, status: LpStatus, iterations: usize) -> LpSolution {
    LpSolution { status, x: vec![f64::NAN; n], objective: f64::NAN, iterations }
}
