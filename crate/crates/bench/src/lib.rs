//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use izo_core::oracle::RegularizedLs;
use izo_core::tau::build_ddp_lp;
use izo_core::{collect_data, DataPoint, DataSource, DdpBasis, LpProblem, Matrix, NoisyOracle, RandomSource};

/// Random symmetric positive definite matrix `M^T M + I`.
pub fn spd_matrix(n: usize, seed: u64) -> Matrix {
    let mut rng = RandomSource::new(seed);
    Matrix::from_fn(n, n, |_, _| rng.gaussian()).gram().add_diag(1.0)
}

/// Noise-free observations of a random least-squares objective, enough to
/// pin down a quadratic model in `n` variables.
pub fn ddp_data(n: usize, seed: u64) -> Vec<DataPoint> {
    let mut rng = RandomSource::new(seed);
    let f = RegularizedLs::random(2 * n, n, 1e-4, &mut rng).expect("valid instance");
    let mut oracle = NoisyOracle::exact(Arc::new(f));
    let count = (n + 1) * (n + 2);
    let centers: Vec<Vec<f64>> = (0..count).map(|_| (0..n).map(|_| 2.0 * rng.uniform() - 1.0).collect()).collect();
    collect_data(DataSource::Fresh { oracle: &mut oracle, centers: &centers, delta: 1e-3, rng: &mut rng }, count)
        .expect("enough data points")
}

/// The diagonally dominant program for [`ddp_data`] in the identity basis.
pub fn ddp_lp(n: usize, seed: u64) -> LpProblem {
    build_ddp_lp(&ddp_data(n, seed), 1e-4, &DdpBasis::identity(n)).expect("well-formed program")
}
