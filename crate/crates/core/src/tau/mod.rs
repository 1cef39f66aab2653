//! Strong-convexity estimation from logged complex-lifted evaluations.
//!
//! A quadratic lower model `m(x) = 1/2 <Px, x> + <q, x> + r` is fitted under
//! the observed values `Re f(x_k + i delta_k u_k)`, whose quadratic part is
//! `1/2 <P, x_k x_k^T - delta_k^2 u_k u_k^T>`. Positive semidefiniteness of
//! `P - tau0 I` is replaced by the linear certificate
//! `P = tau0 I + U^T Q U` with `Q` diagonally dominant, and the basis `U` is
//! refined by repeated Cholesky factorization. The estimate is the smallest
//! eigenvalue of the final `P`.

pub mod lp;

pub use lp::{solve_lp, solve_lp_with, LpOptions, LpProblem, LpSolution, LpStatus, PivotRule};

use crate::algorithms::Trace;
use crate::complex::{complex_shift, sample_unit_sphere, RandomSource};
use crate::error::{check_dim, IzoError, Result};
use crate::linalg::{cholesky, min_eigenvalue, Matrix};
use crate::oracle::NoisyOracle;

/// One observation `value = Re f(x + i delta u) + xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPoint {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub delta: f64,
    pub value: f64,
}

/// `(n+1)(n+2)/2`, the number of coefficients of a quadratic in `n` variables.
pub fn min_data_points(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// Where data points come from.
pub enum DataSource<'a> {
    /// Points recorded during a run; costs no oracle queries.
    Trace(&'a Trace),
    /// Fresh queries around the given centers, cycled in order.
    Fresh { oracle: &'a mut NoisyOracle, centers: &'a [Vec<f64>], delta: f64, rng: &'a mut RandomSource },
}

pub fn collect_data(source: DataSource<'_>, count: usize) -> Result<Vec<DataPoint>> {
    match source {
        DataSource::Trace(trace) => {
            let need = min_data_points(trace.n);
            if count < need {
                return Err(IzoError::Input(format!(
                    "need at least {need} data points for n={}, asked for {count}",
                    trace.n
                )));
            }
            if trace.data.len() < count {
                return Err(IzoError::Input(format!(
                    "trace recorded {} data points, {count} requested",
                    trace.data.len()
                )));
            }
            Ok(trace.data[..count].to_vec())
        }
        DataSource::Fresh { oracle, centers, delta, rng } => {
            let n = oracle.dim();
            let need = min_data_points(n);
            if count < need {
                return Err(IzoError::Input(format!("need at least {need} data points for n={n}, asked for {count}")));
            }
            if centers.is_empty() {
                return Err(IzoError::Input("no sampling centers".into()));
            }
            let mut out = Vec::with_capacity(count);
            for i in 0..count {
                let x = &centers[i % centers.len()];
                check_dim(n, x.len(), "sampling center")?;
                let u = sample_unit_sphere(n, rng)?;
                let value = oracle.query_re(&complex_shift(x, &u, delta)?)?;
                out.push(DataPoint { x: x.clone(), u, delta, value });
            }
            Ok(out)
        }
    }
}

fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn svec_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

/// Upper triangle of a symmetric matrix, row by row, with off-diagonal
/// entries scaled by `sqrt(2)` so that `<svec(A), svec(B)> = tr(AB)`.
pub fn svec(p: &Matrix) -> Result<Vec<f64>> {
    if !p.is_square() {
        return Err(IzoError::Dimension(format!("svec needs a square matrix, got {}x{}", p.rows(), p.cols())));
    }
    let n = p.rows();
    let mut out = Vec::with_capacity(svec_len(n));
    for i in 0..n {
        out.push(p[(i, i)]);
        for j in i + 1..n {
            out.push(std::f64::consts::SQRT_2 * 0.5 * (p[(i, j)] + p[(j, i)]));
        }
    }
    Ok(out)
}

/// Inverse of [`svec`].
pub fn smat(v: &[f64]) -> Result<Matrix> {
    let n = (((8 * v.len() + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    if svec_len(n) != v.len() {
        return Err(IzoError::Dimension(format!("length {} is not a triangular number", v.len())));
    }
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let val = v[svec_index(n, i, j)];
            let val = if i == j { val } else { val / std::f64::consts::SQRT_2 };
            p[(i, j)] = val;
            p[(j, i)] = val;
        }
    }
    Ok(p)
}

/// `svec((x y^T + y x^T) / 2)`.
pub fn sym_outer(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_dim(x.len(), y.len(), "sym_outer")?;
    let n = x.len();
    let mut out = Vec::with_capacity(svec_len(n));
    for i in 0..n {
        out.push(x[i] * y[i]);
        for j in i + 1..n {
            out.push(std::f64::consts::SQRT_2 * 0.5 * (x[i] * y[j] + x[j] * y[i]));
        }
    }
    Ok(out)
}

/// Lower quadratic model `1/2 <Px, x> + <q, x> + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub p: Matrix,
    pub q: Vec<f64>,
    pub r: f64,
}

impl QuadraticModel {
    /// Model value of the observation `Re m(x + i delta u)`.
    pub fn predict(&self, d: &DataPoint) -> f64 {
        let px = self.p.quad_form(&d.x).unwrap_or(f64::NAN);
        let pu = self.p.quad_form(&d.u).unwrap_or(f64::NAN);
        let qx: f64 = self.q.iter().zip(&d.x).map(|(a, b)| a * b).sum();
        0.5 * px - 0.5 * d.delta * d.delta * pu + qx + self.r
    }
}

/// Basis of the diagonally dominant cone; `P - tau0 I = U^T Q U`.
#[derive(Debug, Clone, PartialEq)]
pub struct DdpBasis {
    pub u: Matrix,
}

impl DdpBasis {
    pub fn identity(n: usize) -> Self {
        Self { u: Matrix::identity(n) }
    }

    pub fn new(u: Matrix) -> Result<Self> {
        if !u.is_square() || u.rows() == 0 {
            return Err(IzoError::Construction("basis must be a non-empty square matrix".into()));
        }
        let scale = u.max_abs();
        // upper-triangular bases are invertible iff the diagonal is nonzero
        let triangular = (0..u.rows()).all(|i| (0..i).all(|j| u[(i, j)] == 0.0));
        if triangular && (0..u.rows()).any(|i| u[(i, i)].abs() <= 1e-12 * scale) {
            return Err(IzoError::Construction("basis is numerically singular".into()));
        }
        Ok(Self { u })
    }

    pub fn dim(&self) -> usize {
        self.u.rows()
    }
}

/// True if `Q_ii >= sum_{j != i} |Q_ij| - tol` for every row.
pub fn is_diagonally_dominant(q: &Matrix, tol: f64) -> bool {
    (0..q.rows()).all(|i| {
        let off: f64 = (0..q.cols()).filter(|&j| j != i).map(|j| q[(i, j)].abs()).sum();
        q[(i, i)] >= off - tol
    })
}

/// Variable layout of the DDP linear program.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DdpLayout {
    pub n: usize,
}

impl DdpLayout {
    /// `svec(Q)` occupies `0..n(n+1)/2`.
    pub fn q_matrix(&self) -> std::ops::Range<usize> {
        0..svec_len(self.n)
    }
    pub fn linear(&self) -> std::ops::Range<usize> {
        let s = svec_len(self.n);
        s..s + self.n
    }
    pub fn constant(&self) -> usize {
        svec_len(self.n) + self.n
    }
    /// Slack `s_ij >= |Q_ij|` for the `k`-th pair `i < j` (row-major).
    pub fn slack(&self, k: usize) -> usize {
        self.constant() + 1 + k
    }
    pub fn num_vars(&self) -> usize {
        self.constant() + 1 + self.n * (self.n - 1) / 2
    }
}

/// Observation values used as the upper envelope: shifted down by
/// `3 sqrt(sigma_xi)` when the data are noisy.
fn envelope(data: &[DataPoint], sigma_xi: f64) -> Vec<f64> {
    let margin = if sigma_xi > 0.0 { 3.0 * sigma_xi.sqrt() } else { 0.0 };
    data.iter().map(|d| d.value - margin).collect()
}

fn outer_minus(d: &DataPoint) -> Matrix {
    let n = d.x.len();
    let dd = d.delta * d.delta;
    Matrix::from_fn(n, n, |i, j| d.x[i] * d.x[j] - dd * d.u[i] * d.u[j])
}

/// LP maximizing the summed model predictions subject to lying below every
/// observation, with `P = tau0 I + U^T Q U`, `Q` diagonally dominant.
/// The LP objective is `-sum_k pred_k` without the constant
/// `sum_k tau0 tr(M_k) / 2`.
pub fn build_ddp_lp(data: &[DataPoint], tau0: f64, basis: &DdpBasis) -> Result<LpProblem> {
    build_ddp_lp_noisy(data, tau0, basis, 0.0)
}

pub fn build_ddp_lp_noisy(data: &[DataPoint], tau0: f64, basis: &DdpBasis, sigma_xi: f64) -> Result<LpProblem> {
    if data.is_empty() {
        return Err(IzoError::Input("no data points".into()));
    }
    if !(tau0 > 0.0) {
        return Err(IzoError::Input(format!("tau0 must be positive, got {tau0}")));
    }
    let n = basis.dim();
    for d in data {
        check_dim(n, d.x.len(), "data point x")?;
        check_dim(n, d.u.len(), "data point u")?;
    }
    let layout = DdpLayout { n };
    let nv = layout.num_vars();
    let values = envelope(data, sigma_xi);
    let mut c = vec![0.0; nv];
    let mut lp_rows = Vec::with_capacity(data.len());
    let ut = basis.u.transpose();
    for (d, value) in data.iter().zip(&values) {
        let m = outer_minus(d);
        let rotated = basis.u.matmul(&m)?.matmul(&ut)?;
        let sv = svec(&rotated)?;
        let mut row = vec![0.0; nv];
        for (k, v) in sv.iter().enumerate() {
            row[k] = 0.5 * v;
        }
        for (k, xi) in layout.linear().zip(&d.x) {
            row[k] = *xi;
        }
        row[layout.constant()] = 1.0;
        let trace_m: f64 = (0..n).map(|i| m[(i, i)]).sum();
        let rhs = value - 0.5 * tau0 * trace_m;
        for (cj, rj) in c.iter_mut().zip(&row) {
            *cj -= rj;
        }
        lp_rows.push((row, rhs));
    }
    let mut lp = LpProblem::new(c);
    for j in 0..layout.constant() + 1 {
        lp.set_bounds(j, None, None);
    }
    for (row, rhs) in lp_rows {
        lp.add_le(row, rhs);
    }
    // diagonal dominance of Q with s_ij >= |Q_ij|, Q_ij = svec_ij / sqrt(2)
    let mut pair = 0;
    let mut pair_of = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            pair_of[i][j] = pair;
            pair_of[j][i] = pair;
            let mut up = vec![0.0; nv];
            up[svec_index(n, i, j)] = std::f64::consts::FRAC_1_SQRT_2;
            up[layout.slack(pair)] = -1.0;
            lp.add_le(up, 0.0);
            let mut down = vec![0.0; nv];
            down[svec_index(n, i, j)] = -std::f64::consts::FRAC_1_SQRT_2;
            down[layout.slack(pair)] = -1.0;
            lp.add_le(down, 0.0);
            pair += 1;
        }
    }
    for i in 0..n {
        let mut row = vec![0.0; nv];
        row[svec_index(n, i, i)] = -1.0;
        for j in (0..n).filter(|&j| j != i) {
            row[layout.slack(pair_of[i][j])] = 1.0;
        }
        lp.add_le(row, 0.0);
    }
    Ok(lp)
}

/// Output of [`estimate_tau`].
#[derive(Debug, Clone, PartialEq)]
pub struct TauEstimate {
    pub tau_hat: f64,
    pub model: QuadraticModel,
    /// `sum_k (value_k - pred_k)` after each pursuit iteration.
    pub objectives: Vec<f64>,
    /// `lambda_min(P_z)` after each pursuit iteration.
    pub taus: Vec<f64>,
    /// Basis and diagonally dominant factor of the final model.
    pub basis: DdpBasis,
    pub q_factor: Matrix,
}

impl TauEstimate {
    /// Checks `P - tau0 I = U^T Q U` with `Q` diagonally dominant.
    pub fn certificate_holds(&self, tau0: f64, tol: f64) -> bool {
        let n = self.basis.dim();
        let Ok(recon) = self.basis.u.transpose().matmul(&self.q_factor).and_then(|a| a.matmul(&self.basis.u)) else {
            return false;
        };
        let scale = 1.0 + self.model.p.max_abs();
        let consistent = (0..n).all(|i| {
            (0..n).all(|j| {
                let target = self.model.p[(i, j)] - if i == j { tau0 } else { 0.0 };
                (recon[(i, j)] - target).abs() <= tol * scale
            })
        });
        consistent && is_diagonally_dominant(&self.q_factor, tol * (1.0 + self.q_factor.max_abs()))
    }
}

/// Pursuit stops once `Q` is diagonal to this relative precision.
const PURSUIT_DIAGONAL_TOL: f64 = 1e-6;

/// Lower-model estimate of the strong-convexity modulus with `pursuit`
/// basis-pursuit iterations (at least one). The estimate is at least `tau0`.
pub fn estimate_tau(data: &[DataPoint], tau0: f64, pursuit: usize, sigma_xi: f64) -> Result<TauEstimate> {
    estimate_tau_with(
        data,
        tau0,
        pursuit,
        sigma_xi,
        &LpOptions { rule: PivotRule::DantzigThenBland, ..LpOptions::default() },
    )
}

pub fn estimate_tau_with(
    data: &[DataPoint],
    tau0: f64,
    pursuit: usize,
    sigma_xi: f64,
    lp_options: &LpOptions,
) -> Result<TauEstimate> {
    if pursuit == 0 {
        return Err(IzoError::Input("at least one pursuit iteration is required".into()));
    }
    let n = data.first().map(|d| d.x.len()).ok_or_else(|| IzoError::Input("no data points".into()))?;
    let layout = DdpLayout { n };
    let values = envelope(data, sigma_xi);
    let mut basis = DdpBasis::identity(n);
    let mut objectives = Vec::new();
    let mut taus = Vec::new();
    let mut best: Option<(QuadraticModel, DdpBasis, Matrix)> = None;
    for _ in 0..pursuit {
        let lp = build_ddp_lp_noisy(data, tau0, &basis, sigma_xi)?;
        let sol = solve_lp_with(&lp, lp_options)?;
        if sol.status != LpStatus::Optimal {
            return Err(IzoError::Estimation(sol.status));
        }
        let q_factor = smat(&sol.x[layout.q_matrix()])?;
        let rotated = basis.u.transpose().matmul(&q_factor)?.matmul(&basis.u)?;
        let mut p = rotated.add_diag(tau0);
        p.symmetrize();
        let model = QuadraticModel { p, q: sol.x[layout.linear()].to_vec(), r: sol.x[layout.constant()] };
        let residual: f64 = data.iter().zip(&values).map(|(d, v)| v - model.predict(d)).sum();
        // The previous model is feasible in the rotated basis, so a worse LP
        // vertex is a tolerance artifact: keep the incumbent and stop.
        if let (Some(&prev), Some(&prev_tau)) = (objectives.last(), taus.last()) {
            if residual > prev {
                objectives.push(prev);
                taus.push(prev_tau);
                break;
            }
        }
        objectives.push(residual);
        taus.push(min_eigenvalue(&model.p)?.max(tau0));

        let diag_max = (0..n).map(|i| q_factor[(i, i)].abs()).fold(0.0, f64::max);
        let off_max = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| q_factor[(i, j)].abs())
            .fold(0.0, f64::max);
        let next = cholesky(&rotated);
        best = Some((model, basis.clone(), q_factor));
        if off_max <= PURSUIT_DIAGONAL_TOL * diag_max.max(f64::MIN_POSITIVE) {
            break;
        }
        match next.ok().map(DdpBasis::new) {
            Some(Ok(b)) => basis = b,
            // P - tau0 I is singular: no rotation is available
            _ => break,
        }
    }
    let (model, basis, q_factor) = best.expect("at least one pursuit iteration ran");
    let tau_hat = *taus.last().expect("nonempty");
    Ok(TauEstimate { tau_hat, model, objectives, taus, basis, q_factor })
}
