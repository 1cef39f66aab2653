//! Scalar derivative quotients and single-point gradient samplers.

use num_complex::Complex64;

use crate::complex::{complex_shift, sample_unit_ball, sample_unit_sphere, ComplexVector, RandomSource};
use crate::error::{check_dim, IzoError, Result};
use crate::linalg::{cholesky, max_eigenvalue, Matrix};
use crate::oracle::NoisyOracle;

/// One gradient estimate together with the direction and smoothing used.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub g: Vec<f64>,
    pub u: Vec<f64>,
    pub delta: f64,
    pub queries_used: u32,
}

fn positive_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(IzoError::Domain(format!("delta must be positive and finite, got {delta}")))
    }
}

fn scalar_oracle(oracle: &NoisyOracle) -> Result<()> {
    check_dim(1, oracle.dim(), "scalar derivative")
}

fn real_point(x: f64) -> Result<ComplexVector> {
    ComplexVector::from_real(&[x])
}

/// Forward quotient `(f(x + delta) - f(x)) / delta` from two real queries.
pub fn fd_derivative(oracle: &mut NoisyOracle, x: f64, delta: f64) -> Result<f64> {
    scalar_oracle(oracle)?;
    positive_delta(delta)?;
    let fp = oracle.query_re(&real_point(x + delta)?)?;
    let f0 = oracle.query_re(&real_point(x)?)?;
    Ok((fp - f0) / delta)
}

/// Central quotient `(f(x + delta) - f(x - delta)) / (2 delta)` from two real
/// queries.
pub fn cd_derivative(oracle: &mut NoisyOracle, x: f64, delta: f64) -> Result<f64> {
    scalar_oracle(oracle)?;
    positive_delta(delta)?;
    let fp = oracle.query_re(&real_point(x + delta)?)?;
    let fm = oracle.query_re(&real_point(x - delta)?)?;
    Ok((fp - fm) / (2.0 * delta))
}

/// Complex-step derivative `Im f(x + i delta) / delta` from one query.
pub fn cs_derivative(oracle: &mut NoisyOracle, x: f64, delta: f64) -> Result<f64> {
    scalar_oracle(oracle)?;
    positive_delta(delta)?;
    let z = ComplexVector::new(vec![Complex64::new(x, delta)])?;
    Ok(oracle.query_im(&z)? / delta)
}

/// Complex-step estimate along a given unit direction:
/// `(n / delta) Im f(x + i delta u) u`, one query.
pub fn cs_gradient_along(oracle: &mut NoisyOracle, x: &[f64], delta: f64, u: Vec<f64>) -> Result<GradientSample> {
    check_dim(oracle.dim(), x.len(), "gradient point")?;
    positive_delta(delta)?;
    let z = complex_shift(x, &u, delta)?;
    let value = oracle.query_im(&z)?;
    let scale = x.len() as f64 * value / delta;
    Ok(GradientSample { g: u.iter().map(|ui| scale * ui).collect(), u, delta, queries_used: 1 })
}

/// Single-point complex-step gradient sample with `u` uniform on the sphere.
pub fn cs_gradient_sample(
    oracle: &mut NoisyOracle,
    x: &[f64],
    delta: f64,
    rng: &mut RandomSource,
) -> Result<GradientSample> {
    let u = sample_unit_sphere(x.len(), rng)?;
    cs_gradient_along(oracle, x, delta, u)
}

/// Smoothing solid for the complex-step estimator.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothingShape {
    Sphere,
    /// Ellipsoid `Q^{1/2} B^n`, stored with the inverse of `Q^{1/2}` and its
    /// largest eigenvalue.
    Ellipsoid {
        qhalf: Matrix,
        qhalf_inv: Matrix,
        lambda_max: f64,
    },
}

impl SmoothingShape {
    pub fn ellipsoid(qhalf: Matrix) -> Result<Self> {
        if !qhalf.is_square() || qhalf.rows() == 0 {
            return Err(IzoError::Shape("Q^{1/2} must be a non-empty square matrix".into()));
        }
        if !qhalf.is_symmetric(4.0 * f64::EPSILON * qhalf.max_abs()) {
            return Err(IzoError::Shape("Q^{1/2} must be symmetric".into()));
        }
        let u = cholesky(&qhalf).map_err(|_| IzoError::Shape("Q^{1/2} must be positive definite".into()))?;
        let n = qhalf.rows();
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = crate::linalg::cholesky_solve(&u, &e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv.symmetrize();
        let lambda_max = max_eigenvalue(&qhalf)?;
        Ok(Self::Ellipsoid { qhalf, qhalf_inv: inv, lambda_max })
    }
}

/// Complex-step sample over an ellipsoidal smoothing solid:
/// `(n / delta) Im f(x + i delta Q^{1/2} u) Q^{-1/2} u`, one query.
pub fn cs_gradient_ellipsoid(
    oracle: &mut NoisyOracle,
    x: &[f64],
    delta: f64,
    shape: &SmoothingShape,
    rng: &mut RandomSource,
) -> Result<GradientSample> {
    let SmoothingShape::Ellipsoid { qhalf, qhalf_inv, lambda_max } = shape else {
        return cs_gradient_sample(oracle, x, delta, rng);
    };
    check_dim(qhalf.rows(), x.len(), "ellipsoid shape")?;
    positive_delta(delta)?;
    let width = oracle.function().strip_halfwidth(x);
    if !(delta * lambda_max < width) {
        return Err(IzoError::Domain(format!(
            "delta * lambda_max = {:e} exceeds the strip half-width {width:e}",
            delta * lambda_max
        )));
    }
    let u = sample_unit_sphere(x.len(), rng)?;
    let w = qhalf.matvec(&u)?;
    let value = oracle.query_im(&complex_shift(x, &w, delta)?)?;
    let scale = x.len() as f64 * value / delta;
    let g = qhalf_inv.matvec(&u)?.into_iter().map(|v| scale * v).collect();
    Ok(GradientSample { g, u, delta, queries_used: 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferenceVariant {
    Forward,
    Central,
}

/// Two-point real-arithmetic estimator along a random direction.
pub fn real_multipoint_gradient(
    oracle: &mut NoisyOracle,
    x: &[f64],
    delta: f64,
    rng: &mut RandomSource,
    variant: DifferenceVariant,
) -> Result<GradientSample> {
    check_dim(oracle.dim(), x.len(), "gradient point")?;
    positive_delta(delta)?;
    let n = x.len();
    let u = sample_unit_sphere(n, rng)?;
    let shifted = |sign: f64| -> Vec<f64> { x.iter().zip(&u).map(|(a, b)| a + sign * delta * b).collect() };
    let scale = match variant {
        DifferenceVariant::Forward => {
            let fp = oracle.query_re(&ComplexVector::from_real(&shifted(1.0))?)?;
            let f0 = oracle.query_re(&ComplexVector::from_real(x)?)?;
            n as f64 * (fp - f0) / delta
        }
        DifferenceVariant::Central => {
            let fp = oracle.query_re(&ComplexVector::from_real(&shifted(1.0))?)?;
            let fm = oracle.query_re(&ComplexVector::from_real(&shifted(-1.0))?)?;
            n as f64 * (fp - fm) / (2.0 * delta)
        }
    };
    Ok(GradientSample { g: u.iter().map(|ui| scale * ui).collect(), u, delta, queries_used: 2 })
}

/// Monte-Carlo estimate of `E_v Re f(x + i delta v)`, `v` uniform on the
/// unit ball, from `m` real-part queries.
pub fn smoothed_value_estimate(
    oracle: &mut NoisyOracle,
    x: &[f64],
    delta: f64,
    m: usize,
    rng: &mut RandomSource,
) -> Result<f64> {
    check_dim(oracle.dim(), x.len(), "smoothing point")?;
    positive_delta(delta)?;
    if m == 0 {
        return Err(IzoError::Input("sample count must be >= 1".into()));
    }
    let mut acc = 0.0;
    for _ in 0..m {
        let v = sample_unit_ball(x.len(), rng)?;
        acc += oracle.query_re(&complex_shift(x, &v, delta)?)?;
    }
    Ok(acc / m as f64)
}
