//! Holomorphically evaluable test functions and the noisy complex oracle.
//!
//! Every [`AnalyticFunction`] evaluates its holomorphic extension on a strip
//! `D x i(-w, w)^n` around the real domain. A [`NoisyOracle`] wraps one with an
//! additive zero-mean noise channel and counts calls.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::complex::{ComplexVector, RandomSource};
use crate::error::{check_dim, IzoError, Result};
use crate::linalg::{cholesky, cholesky_solve, max_eigenvalue, min_eigenvalue, Matrix};

/// Known constants of a test function.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    /// Strong-convexity modulus.
    pub tau: Option<f64>,
    /// Gradient Lipschitz constant (on the domain the experiment uses).
    pub l1: Option<f64>,
    /// Hessian Lipschitz constant.
    pub l2: Option<f64>,
    pub minimizer: Option<Vec<f64>>,
    pub optimum: Option<f64>,
}

pub trait AnalyticFunction: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Holomorphic extension at `z`. Fails outside the domain of analyticity.
    fn eval(&self, z: &[Complex64]) -> Result<Complex64>;

    /// Half-width of the imaginary strip on which `eval` is valid, at the real
    /// point `x`.
    fn strip_halfwidth(&self, x: &[f64]) -> f64;

    fn metadata(&self) -> &Metadata;

    /// Exact gradient, used only for validation and reporting.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Noiseless real value. This is a reporting side channel and does not
    /// count as an oracle query.
    fn value(&self, x: &[f64]) -> Result<f64> {
        let z: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Ok(self.eval(&z)?.re)
    }
}

fn cdot(a: &[f64], z: &[Complex64]) -> Complex64 {
    a.iter().zip(z).map(|(&ai, &zi)| zi * ai).sum()
}

fn csum_sq(z: &[Complex64]) -> Complex64 {
    z.iter().map(|&zi| zi * zi).sum()
}

fn require_dim(f: &dyn AnalyticFunction, z: &[Complex64]) -> Result<()> {
    check_dim(f.dim(), z.len(), f.name())
}

/// `f(x) = <a, x> + c`. Also serves as the constant and zero function.
#[derive(Debug, Clone)]
pub struct Linear {
    a: Vec<f64>,
    c: f64,
    meta: Metadata,
}

impl Linear {
    pub fn new(a: Vec<f64>, c: f64) -> Result<Self> {
        if a.is_empty() {
            return Err(IzoError::Construction("linear function needs n >= 1".into()));
        }
        let meta = Metadata { l1: Some(0.0), l2: Some(0.0), ..Metadata::default() };
        Ok(Self { a, c, meta })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![0.0; n], c)
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::constant(n, 0.0)
    }
}

impl AnalyticFunction for Linear {
    fn name(&self) -> &str {
        "linear"
    }
    fn dim(&self) -> usize {
        self.a.len()
    }
    fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        require_dim(self, z)?;
        Ok(cdot(&self.a, z) + self.c)
    }
    fn strip_halfwidth(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn metadata(&self) -> &Metadata {
        &self.meta
    }
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        Some(self.a.clone())
    }
}

/// `f(x) = 1/2 <x, x>`.
#[derive(Debug, Clone)]
pub struct HalfSqNorm {
    n: usize,
    meta: Metadata,
}

impl HalfSqNorm {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(IzoError::Construction("half_sq_norm needs n >= 1".into()));
        }
        let meta = Metadata {
            tau: Some(1.0),
            l1: Some(1.0),
            l2: Some(0.0),
            minimizer: Some(vec![0.0; n]),
            optimum: Some(0.0),
        };
        Ok(Self { n, meta })
    }
}

impl AnalyticFunction for HalfSqNorm {
    fn name(&self) -> &str {
        "half_sq_norm"
    }
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        require_dim(self, z)?;
        Ok(csum_sq(z) * 0.5)
    }
    fn strip_halfwidth(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn metadata(&self) -> &Metadata {
        &self.meta
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(x.to_vec())
    }
}

fn complex_quad_form(p: &Matrix, z: &[Complex64]) -> Complex64 {
    let n = z.len();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += z[j] * p[(i, j)];
        }
        s += z[i] * row;
    }
    s
}

/// `f(x) = 1/2 <Px, x> + <q, x> + r + w * sum_i x_i^4` with `P` symmetric
/// positive definite and `w >= 0`. With `w = 0` this is a plain quadratic.
#[derive(Debug, Clone)]
pub struct Quadratic {
    p: Matrix,
    q: Vec<f64>,
    r: f64,
    quartic: f64,
    meta: Metadata,
}

impl Quadratic {
    pub fn new(p: Matrix, q: Vec<f64>, r: f64) -> Result<Self> {
        Self::with_quartic(p, q, r, 0.0)
    }

    pub fn with_quartic(p: Matrix, q: Vec<f64>, r: f64, quartic: f64) -> Result<Self> {
        if !p.is_square() || p.rows() == 0 {
            return Err(IzoError::Construction("P must be a non-empty square matrix".into()));
        }
        if q.len() != p.rows() {
            return Err(IzoError::Construction(format!("q has length {}, expected {}", q.len(), p.rows())));
        }
        if !p.is_symmetric(1e-12) {
            return Err(IzoError::Construction("P must be symmetric".into()));
        }
        if !(quartic >= 0.0) {
            return Err(IzoError::Construction("quartic weight must be >= 0".into()));
        }
        let u = cholesky(&p).map_err(|_| IzoError::Construction("P must be positive definite".into()))?;
        let tau = min_eigenvalue(&p)?;
        let lmax = max_eigenvalue(&p)?;
        let mut meta = Metadata { tau: Some(tau), ..Metadata::default() };
        let neg_q: Vec<f64> = q.iter().map(|v| -v).collect();
        if quartic == 0.0 {
            let xstar = cholesky_solve(&u, &neg_q)?;
            let fstar = r + 0.5 * cdot_real(&q, &xstar);
            meta.l1 = Some(lmax);
            meta.l2 = Some(0.0);
            meta.minimizer = Some(xstar);
            meta.optimum = Some(fstar);
        }
        let mut f = Self { p, q, r, quartic, meta };
        if quartic > 0.0 {
            let xstar = f.newton_minimizer()?;
            f.meta.optimum = Some(f.value(&xstar)?);
            f.meta.minimizer = Some(xstar);
        }
        Ok(f)
    }

    pub fn hessian_matrix(&self) -> &Matrix {
        &self.p
    }

    pub fn linear_term(&self) -> &[f64] {
        &self.q
    }

    /// Gradient Lipschitz constant on the ball of radius `radius` about 0.
    pub fn l1_on_ball(&self, radius: f64) -> f64 {
        self.meta
            .l1
            .unwrap_or_else(|| max_eigenvalue(&self.p).expect("validated") + 12.0 * self.quartic * radius * radius)
    }

    fn hessian_at(&self, x: &[f64]) -> Matrix {
        let mut h = self.p.clone();
        for (i, xi) in x.iter().enumerate() {
            h[(i, i)] += 12.0 * self.quartic * xi * xi;
        }
        h
    }

    fn grad_real(&self, x: &[f64]) -> Vec<f64> {
        let px = self.p.matvec(x).expect("validated dimension");
        px.iter().zip(&self.q).zip(x).map(|((a, b), xi)| a + b + 4.0 * self.quartic * xi * xi * xi).collect()
    }

    fn newton_minimizer(&self) -> Result<Vec<f64>> {
        let n = self.q.len();
        let mut x = vec![0.0; n];
        for _ in 0..200 {
            let g = self.grad_real(&x);
            let u = cholesky(&self.hessian_at(&x))?;
            let step = cholesky_solve(&u, &g)?;
            // f is strictly convex, so a backtracking Newton step always
            // decreases it.
            let f0 = self.value(&x)?;
            let mut t = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a - t * s).collect();
                if self.value(&trial)? <= f0 || t < 1e-12 {
                    x = trial;
                    break;
                }
                t *= 0.5;
            }
            if step.iter().map(|s| s.abs()).fold(0.0, f64::max) < 1e-15 * (1.0 + crate::complex::norm2(&x)) {
                break;
            }
        }
        Ok(x)
    }
}

fn cdot_real(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl AnalyticFunction for Quadratic {
    fn name(&self) -> &str {
        if self.quartic > 0.0 {
            "quadratic_quartic"
        } else {
            "quadratic"
        }
    }
    fn dim(&self) -> usize {
        self.q.len()
    }
    fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        require_dim(self, z)?;
        let mut v = complex_quad_form(&self.p, z) * 0.5 + cdot(&self.q, z) + self.r;
        if self.quartic > 0.0 {
            let s: Complex64 = z.iter().map(|&zi| (zi * zi) * (zi * zi)).sum();
            v += s * self.quartic;
        }
        Ok(v)
    }
    fn strip_halfwidth(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn metadata(&self) -> &Metadata {
        &self.meta
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.grad_real(x))
    }
}

/// `f(x) = 1/2 ||Ax - b||^2 + 1/2 lambda ||x||^2`.
#[derive(Debug, Clone)]
pub struct RegularizedLs {
    a: Matrix,
    b: Vec<f64>,
    lambda: f64,
    meta: Metadata,
}

impl RegularizedLs {
    pub fn new(a: Matrix, b: Vec<f64>, lambda: f64) -> Result<Self> {
        if a.rows() != b.len() || a.cols() == 0 {
            return Err(IzoError::Construction(format!("A is {}x{} but b has length {}", a.rows(), a.cols(), b.len())));
        }
        if !(lambda >= 0.0) {
            return Err(IzoError::Construction("lambda must be >= 0".into()));
        }
        let h = a.gram().add_diag(lambda);
        let u =
            cholesky(&h).map_err(|_| IzoError::Construction("A^T A + lambda I must be positive definite".into()))?;
        let atb = a.tr_matvec(&b)?;
        let xstar = cholesky_solve(&u, &atb)?;
        let mut f = Self {
            meta: Metadata {
                tau: Some(min_eigenvalue(&h)?),
                l1: Some(max_eigenvalue(&h)?),
                l2: Some(0.0),
                ..Metadata::default()
            },
            a,
            b,
            lambda,
        };
        f.meta.optimum = Some(f.value(&xstar)?);
        f.meta.minimizer = Some(xstar);
        Ok(f)
    }

    /// Random instance with `vec(A)` and `b` standard normal.
    pub fn random(m: usize, n: usize, lambda: f64, rng: &mut RandomSource) -> Result<Self> {
        let a = Matrix::from_fn(m, n, |_, _| rng.gaussian());
        let b = rng.gaussian_vec(m);
        Self::new(a, b, lambda)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `A^T A + lambda I`.
    pub fn hessian(&self) -> Matrix {
        self.a.gram().add_diag(self.lambda)
    }

    /// The same objective in `(P, q, r)` form, optionally with a quartic term.
    pub fn to_quadratic(&self, quartic: f64) -> Result<Quadratic> {
        let q: Vec<f64> = self.a.tr_matvec(&self.b)?.iter().map(|v| -v).collect();
        let r = 0.5 * cdot_real(&self.b, &self.b);
        Quadratic::with_quartic(self.hessian(), q, r, quartic)
    }
}

impl AnalyticFunction for RegularizedLs {
    fn name(&self) -> &str {
        "regularized_ls"
    }
    fn dim(&self) -> usize {
        self.a.cols()
    }
    fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        require_dim(self, z)?;
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..self.a.rows() {
            let ri = cdot(self.a.row(i), z) - self.b[i];
            s += ri * ri;
        }
        Ok(s * 0.5 + csum_sq(z) * (0.5 * self.lambda))
    }
    fn strip_halfwidth(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn metadata(&self) -> &Metadata {
        &self.meta
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let r: Vec<f64> = self.a.matvec(x).ok()?.iter().zip(&self.b).map(|(ax, b)| ax - b).collect();
        let g = self.a.tr_matvec(&r).ok()?;
        Some(g.iter().zip(x).map(|(gi, xi)| gi + self.lambda * xi).collect())
    }
}

/// Himmelblau's function `(x^2 + y - 11)^2 + (x + y^2 - 7)^2`.
#[derive(Debug, Clone)]
pub struct Himmelblau {
    meta: Metadata,
}

/// The four global minimizers (all with value 0).
pub const HIMMELBLAU_MINIMIZERS: [[f64; 2]; 4] = [
    [3.0, 2.0],
    [-2.805118086952745, 3.131312518250573],
    [-3.779310253377747, -3.283_185_991_286_17],
    [3.584428340330492, -1.848126526964404],
];

impl Himmelblau {
    /// Radius of the feasible disk used in the nonconvex experiment.
    pub const DISK_RADIUS: f64 = 6.0;

    pub fn new() -> Self {
        let meta = Metadata {
            l1: Some(Self::lipschitz_on_disk(Self::DISK_RADIUS)),
            minimizer: Some(HIMMELBLAU_MINIMIZERS[0].to_vec()),
            optimum: Some(0.0),
            ..Metadata::default()
        };
        Self { meta }
    }

    pub fn hessian(x: &[f64]) -> [[f64; 2]; 2] {
        let (a, b) = (x[0], x[1]);
        let hxx = 12.0 * a * a + 4.0 * b - 42.0;
        let hxy = 4.0 * (a + b);
        let hyy = 4.0 * a + 12.0 * b * b - 26.0;
        [[hxx, hxy], [hxy, hyy]]
    }

    /// Largest Hessian spectral norm over the disk of the given radius,
    /// evaluated on a fine polar grid.
    pub fn lipschitz_on_disk(radius: f64) -> f64 {
        let mut best = 0.0_f64;
        let (nr, nt) = (240, 720);
        for i in 0..=nr {
            let rho = radius * i as f64 / nr as f64;
            for j in 0..nt {
                let t = std::f64::consts::TAU * j as f64 / nt as f64;
                let h = Self::hessian(&[rho * t.cos(), rho * t.sin()]);
                let mean = 0.5 * (h[0][0] + h[1][1]);
                let rad = (0.25 * (h[0][0] - h[1][1]).powi(2) + h[0][1] * h[0][1]).sqrt();
                best = best.max((mean + rad).abs()).max((mean - rad).abs());
            }
        }
        best
    }
}

impl Default for Himmelblau {
    fn default() -> Self {
        Self::new()
    }
}

impl AnalyticFunction for Himmelblau {
    fn name(&self) -> &str {
        "himmelblau"
    }
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        require_dim(self, z)?;
        let a = z[0] * z[0] + z[1] - 11.0;
        let b = z[0] + z[1] * z[1] - 7.0;
        Ok(a * a + b * b)
    }
    fn strip_halfwidth(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn metadata(&self) -> &Metadata {
        &self.meta
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let a = x[0] * x[0] + x[1] - 11.0;
        let b = x[0] + x[1] * x[1] - 7.0;
        Some(vec![4.0 * x[0] * a + 2.0 * b, 2.0 * a + 4.0 * x[1] * b])
    }
}

/// `f(x) = log x` on `x > 0` (principal branch).
#[derive(Debug, Clone, Default)]
pub struct LogScalar {
    meta: Metadata,
}

impl LogScalar {
    pub fn new() -> Self {
        Self::default()
    }
}

impl AnalyticFunction for LogScalar {
    fn name(&self) -> &str {
        "log"
    }
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        require_dim(self, z)?;
        if !(z[0].re > 0.0) {
            return Err(IzoError::Domain(format!("log requires Re z > 0, got {}", z[0])));
        }
        Ok(z[0].ln())
    }
    fn strip_halfwidth(&self, x: &[f64]) -> f64 {
        (0.9 * x[0]).max(0.0)
    }
    fn metadata(&self) -> &Metadata {
        &self.meta
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![1.0 / x[0]])
    }
}

/// `f(x) = x^p` for an integer `p >= 1`.
#[derive(Debug, Clone)]
pub struct PowerScalar {
    p: u32,
    meta: Metadata,
}

impl PowerScalar {
    pub fn new(p: u32) -> Result<Self> {
        if p < 1 {
            return Err(IzoError::Construction("power requires p >= 1".into()));
        }
        Ok(Self { p, meta: Metadata::default() })
    }

    pub fn exponent(&self) -> u32 {
        self.p
    }
}

impl AnalyticFunction for PowerScalar {
    fn name(&self) -> &str {
        "power"
    }
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        require_dim(self, z)?;
        Ok(z[0].powu(self.p))
    }
    fn strip_halfwidth(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn metadata(&self) -> &Metadata {
        &self.meta
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(vec![self.p as f64 * x[0].powi(self.p as i32 - 1)])
    }
}

/// `f(x) = exp(-1/x)` for `x > 0` and `0` otherwise.
///
/// Smooth but not analytic at the origin; the extension
/// `exp(-x/(x^2+y^2)) (cos(y/(x^2+y^2)) + i sin(y/(x^2+y^2)))` is holomorphic
/// on `Re z > 0`.
#[derive(Debug, Clone, Default)]
pub struct BumpTail {
    meta: Metadata,
}

impl BumpTail {
    pub fn new() -> Self {
        Self::default()
    }

    /// The lift at `x + iy`, written out in real arithmetic.
    pub fn lift(x: f64, y: f64) -> Complex64 {
        let r2 = x * x + y * y;
        let mag = (-x / r2).exp();
        let phase = y / r2;
        Complex64::new(mag * phase.cos(), mag * phase.sin())
    }
}

impl AnalyticFunction for BumpTail {
    fn name(&self) -> &str {
        "bump_tail"
    }
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        require_dim(self, z)?;
        let (x, y) = (z[0].re, z[0].im);
        if x > 0.0 {
            Ok(Self::lift(x, y))
        } else if y == 0.0 {
            Ok(Complex64::new(0.0, 0.0))
        } else {
            Err(IzoError::Domain(format!("bump_tail is not analytic at Re z = {x}")))
        }
    }
    fn strip_halfwidth(&self, x: &[f64]) -> f64 {
        if x[0] >= 0.5 {
            0.4
        } else {
            (0.8 * x[0]).max(0.0)
        }
    }
    fn metadata(&self) -> &Metadata {
        &self.meta
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let v = if x[0] > 0.0 { (-1.0 / x[0]).exp() / (x[0] * x[0]) } else { 0.0 };
        Some(vec![v])
    }
}

/// Squared speed at a probe point of the irrotational, incompressible flow
/// induced by a disk of radius `r` moving with speed `V` in the negative
/// x-direction, as a function of `r`.
///
/// The flow is the doublet `phi = V r^2 x / (x^2 + y^2)`, `u = grad phi`,
/// which satisfies `div u = 0`, `curl u = 0` off the disk and the slip
/// condition `<u, n> = <(-V, 0), n>` on the circle of radius `r`.
#[derive(Debug, Clone)]
pub struct PdeVelocityNorm {
    speed: f64,
    probe: [f64; 2],
    meta: Metadata,
}

impl PdeVelocityNorm {
    pub const RADIUS_RANGE: (f64, f64) = (1.0, 2.0);

    pub fn new(speed: f64) -> Result<Self> {
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(IzoError::Construction("disk speed must be positive".into()));
        }
        let probe = [2.0, 2.0];
        let rmin = Self::RADIUS_RANGE.0;
        let mut f = Self {
            speed,
            probe,
            meta: Metadata {
                // Bound used for the experiment schedule.
                l1: Some(10.0),
                minimizer: Some(vec![rmin]),
                ..Metadata::default()
            },
        };
        f.meta.optimum = Some(f.value(&[rmin])?);
        Ok(f)
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Velocity field `(u_x, u_y)` at `(x, y)`, all arguments possibly complex.
    pub fn velocity(&self, x: Complex64, y: Complex64, r: Complex64) -> [Complex64; 2] {
        let rho2 = x * x + y * y;
        let rho4 = rho2 * rho2;
        let k = r * r * self.speed;
        [k * (y * y - x * x) / rho4, k * (x * y * -2.0) / rho4]
    }

    /// Largest divergence, curl and slip residuals of the field for radius
    /// `r`, over a polar grid outside the disk and on its boundary. Spatial
    /// derivatives are taken by complex step.
    pub fn validate(&self, r: f64) -> PotentialResiduals {
        let h = 1e-20;
        let rc = Complex64::new(r, 0.0);
        let c = |v: f64| Complex64::new(v, 0.0);
        let mut out = PotentialResiduals::default();
        for i in 1..=40 {
            let rho = r * (1.0 + 2.0 * i as f64 / 40.0);
            for j in 0..64 {
                let t = std::f64::consts::TAU * j as f64 / 64.0;
                let (x, y) = (rho * t.cos(), rho * t.sin());
                let dx = self.velocity(Complex64::new(x, h), c(y), rc);
                let dy = self.velocity(c(x), Complex64::new(y, h), rc);
                let (dux_dx, duy_dx) = (dx[0].im / h, dx[1].im / h);
                let (dux_dy, duy_dy) = (dy[0].im / h, dy[1].im / h);
                out.divergence = out.divergence.max((dux_dx + duy_dy).abs());
                out.curl = out.curl.max((duy_dx - dux_dy).abs());
            }
        }
        for j in 0..256 {
            let t = std::f64::consts::TAU * j as f64 / 256.0;
            let (nx, ny) = (t.cos(), t.sin());
            let u = self.velocity(c(r * nx), c(r * ny), rc);
            let normal_flow = u[0].re * nx + u[1].re * ny;
            let body = -self.speed * nx;
            out.slip = out.slip.max((normal_flow - body).abs());
        }
        out
    }
}

/// Maximum residuals of the potential-flow constraints.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PotentialResiduals {
    pub divergence: f64,
    pub curl: f64,
    pub slip: f64,
}

impl PotentialResiduals {
    pub fn max(&self) -> f64 {
        self.divergence.max(self.curl).max(self.slip)
    }
}

impl AnalyticFunction for PdeVelocityNorm {
    fn name(&self) -> &str {
        "pde_velocity_norm"
    }
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, z: &[Complex64]) -> Result<Complex64> {
        require_dim(self, z)?;
        let [px, py] = self.probe;
        let u = self.velocity(Complex64::new(px, 0.0), Complex64::new(py, 0.0), z[0]);
        Ok(u[0] * u[0] + u[1] * u[1])
    }
    fn strip_halfwidth(&self, _x: &[f64]) -> f64 {
        1.0
    }
    fn metadata(&self) -> &Metadata {
        &self.meta
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        // |u(2,2)|^2 = V^2 r^4 / 64
        Some(vec![self.speed * self.speed * x[0].powi(3) / 16.0])
    }
}

/// Distribution of the additive oracle noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Gaussian,
    Uniform,
    None,
}

/// Zero-mean noise with second moment `sigma_xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma_xi: f64,
    pub kind: NoiseKind,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { sigma_xi: 0.0, kind: NoiseKind::None }
    }

    pub fn gaussian(sigma_xi: f64) -> Result<Self> {
        Self::new(sigma_xi, NoiseKind::Gaussian)
    }

    pub fn new(sigma_xi: f64, kind: NoiseKind) -> Result<Self> {
        if !(sigma_xi >= 0.0) || !sigma_xi.is_finite() {
            return Err(IzoError::Construction(format!("sigma_xi must be >= 0, got {sigma_xi}")));
        }
        Ok(Self { sigma_xi, kind })
    }

    pub fn sample(&self, rng: &mut RandomSource) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            _ if self.sigma_xi == 0.0 => 0.0,
            NoiseKind::Gaussian => self.sigma_xi.sqrt() * rng.gaussian(),
            NoiseKind::Uniform => {
                let half_width = (3.0 * self.sigma_xi).sqrt();
                half_width * (2.0 * rng.uniform() - 1.0)
            }
        }
    }
}

/// Stochastic complex oracle: returns `Re f(z) + xi` or `Im f(z) + xi`.
///
/// The oracle owns its noise generator, so noise draws are independent of
/// whatever generator the caller uses for directions.
#[derive(Debug, Clone)]
pub struct NoisyOracle {
    function: Arc<dyn AnalyticFunction>,
    noise: NoiseModel,
    rng: RandomSource,
    query_count: u64,
}

impl NoisyOracle {
    pub fn new(function: Arc<dyn AnalyticFunction>, noise: NoiseModel, rng: RandomSource) -> Self {
        Self { function, noise, rng, query_count: 0 }
    }

    /// Noise-free oracle; the generator is never consulted.
    pub fn exact(function: Arc<dyn AnalyticFunction>) -> Self {
        Self::new(function, NoiseModel::none(), RandomSource::new(0))
    }

    pub fn function(&self) -> &Arc<dyn AnalyticFunction> {
        &self.function
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn dim(&self) -> usize {
        self.function.dim()
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    fn evaluate(&self, z: &ComplexVector) -> Result<Complex64> {
        check_dim(self.function.dim(), z.len(), "oracle query")?;
        let re = z.re();
        let width = self.function.strip_halfwidth(&re);
        let im = z.im_max_abs();
        if im > 0.0 && !(im < width) {
            return Err(IzoError::Domain(format!(
                "imaginary offset {im:e} outside the holomorphy strip of half-width {width:e}"
            )));
        }
        let v = self.function.eval(z)?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(IzoError::Overflow(format!("{} is not finite at the query", self.function.name())));
        }
        Ok(v)
    }

    pub fn query_im(&mut self, z: &ComplexVector) -> Result<f64> {
        let v = self.evaluate(z)?;
        self.query_count += 1;
        Ok(v.im + self.noise.sample(&mut self.rng))
    }

    pub fn query_re(&mut self, z: &ComplexVector) -> Result<f64> {
        let v = self.evaluate(z)?;
        self.query_count += 1;
        Ok(v.re + self.noise.sample(&mut self.rng))
    }

    /// Both outputs of a single oracle call, each with its own noise draw.
    /// Counts as one query. Returns `(re, im)`.
    pub fn query_both(&mut self, z: &ComplexVector) -> Result<(f64, f64)> {
        let v = self.evaluate(z)?;
        self.query_count += 1;
        let xi_im = self.noise.sample(&mut self.rng);
        let xi_re = self.noise.sample(&mut self.rng);
        Ok((v.re + xi_re, v.im + xi_im))
    }
}

/// Parameters accepted by [`builtin`].
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinSpec {
    HalfSqNorm { n: usize },
    Quadratic { p: Matrix, q: Vec<f64>, r: f64 },
    RegularizedLs { a: Matrix, b: Vec<f64>, lambda: f64 },
    Himmelblau,
    Log,
    Power { p: u32 },
    BumpTail,
    PdeVelocityNorm { speed: f64 },
}

/// Constructs one of the built-in test functions.
pub fn builtin(spec: BuiltinSpec) -> Result<Arc<dyn AnalyticFunction>> {
    Ok(match spec {
        BuiltinSpec::HalfSqNorm { n } => Arc::new(HalfSqNorm::new(n)?),
        BuiltinSpec::Quadratic { p, q, r } => Arc::new(Quadratic::new(p, q, r)?),
        BuiltinSpec::RegularizedLs { a, b, lambda } => Arc::new(RegularizedLs::new(a, b, lambda)?),
        BuiltinSpec::Himmelblau => Arc::new(Himmelblau::new()),
        BuiltinSpec::Log => Arc::new(LogScalar::new()),
        BuiltinSpec::Power { p } => Arc::new(PowerScalar::new(p)?),
        BuiltinSpec::BumpTail => Arc::new(BumpTail::new()),
        BuiltinSpec::PdeVelocityNorm { speed } => Arc::new(PdeVelocityNorm::new(speed)?),
    })
}
