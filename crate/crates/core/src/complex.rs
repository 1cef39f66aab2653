//! Complex scalars and vectors, the seeded random source, and uniform
//! samplers on the unit sphere and unit ball.

use std::ops::{Deref, DerefMut};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, IzoError, Result};

pub type ComplexScalar = Complex64;

/// A point of `C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(components: Vec<Complex64>) -> Result<Self> {
        if components.is_empty() {
            return Err(IzoError::Dimension("complex vector must have n >= 1".into()));
        }
        Ok(Self(components))
    }

    /// Embeds a real vector with zero imaginary parts.
    pub fn from_real(x: &[f64]) -> Result<Self> {
        Self::new(x.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn re(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.im).collect()
    }

    /// Largest absolute imaginary component.
    pub fn im_max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()))
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

impl Deref for ComplexVector {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

impl DerefMut for ComplexVector {
    fn deref_mut(&mut self) -> &mut [Complex64] {
        &mut self.0
    }
}

/// Seeded pseudo-random stream.
///
/// Backed by ChaCha8, whose output for a given (seed, stream) pair is fixed
/// across platforms and releases of `rand_chacha`.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream `stream` under the same seed. Used to give every
    /// run and every oracle its own generator.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.rng.random::<f64>();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn gaussian_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.gaussian()).collect()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random::<u64>()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Uniform draw from the unit sphere `S^{n-1}` (normalized Gaussian).
pub fn sample_unit_sphere(n: usize, rng: &mut RandomSource) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(IzoError::Dimension("sphere dimension must be >= 1".into()));
    }
    loop {
        let mut u = rng.gaussian_vec(n);
        let r = norm2(&u);
        // r == 0 has probability zero but would poison the direction.
        if r > 0.0 && r.is_finite() {
            u.iter_mut().for_each(|v| *v /= r);
            return Ok(u);
        }
    }
}

/// Uniform draw from the unit ball `B^n`: `r * u` with `r = U^(1/n)`.
pub fn sample_unit_ball(n: usize, rng: &mut RandomSource) -> Result<Vec<f64>> {
    let mut u = sample_unit_sphere(n, rng)?;
    let r = rng.uniform_open().powf(1.0 / n as f64);
    u.iter_mut().for_each(|v| *v *= r);
    Ok(u)
}

/// `x + i*delta*u`, componentwise.
pub fn complex_shift(x: &[f64], u: &[f64], delta: f64) -> Result<ComplexVector> {
    check_dim(x.len(), u.len(), "complex_shift direction")?;
    if !(delta > 0.0) {
        return Err(IzoError::Domain(format!("delta must be positive, got {delta}")));
    }
    ComplexVector::new(x.iter().zip(u).map(|(&xr, &ui)| Complex64::new(xr, delta * ui)).collect())
}
