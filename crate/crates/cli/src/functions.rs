//! Test functions addressable by name from a configuration.
//!
//! | name                | params                                          |
//! |---------------------|-------------------------------------------------|
//! | `half_sq_norm`      | (uses `n`)                                      |
//! | `quadratic`         | `lo`, `hi`, `center`, `quartic`, `data_seed`    |
//! | `regularized_ls`    | `m`, `lambda`, `quartic`, `data_seed`           |
//! | `himmelblau`        |                                                 |
//! | `log`               |                                                 |
//! | `power`             | `p`                                             |
//! | `bump_tail`         |                                                 |
//! | `pde_velocity_norm` | `speed`                                         |
//!
//! `quadratic` has Hessian `Q diag(linspace(lo, hi, n)) Q^T` with a random
//! orthogonal `Q` and unconstrained quadratic minimizer `center * (1,...,1)`.
//! A positive `quartic` adds `quartic * sum x_i^4`.

use std::sync::Arc;

use izo_core::oracle::{Quadratic, RegularizedLs};
use izo_core::{builtin, AnalyticFunction, BuiltinSpec, Matrix, RandomSource};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

pub const FUNCTION_NAMES: [&str; 8] =
    ["half_sq_norm", "quadratic", "regularized_ls", "himmelblau", "log", "power", "bump_tail", "pde_velocity_norm"];

/// Stream reserved for drawing problem instances.
pub const DATA_STREAM: u64 = 3;

/// A random orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal(n: usize, rng: &mut RandomSource) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v = rng.gaussian_vec(n);
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

fn dim(config: &ExperimentConfig, default: usize) -> CliResult<usize> {
    match config.n.unwrap_or(default) {
        0 => Err(CliError::Config("n must be positive".into())),
        n => Ok(n),
    }
}

fn data_rng(config: &ExperimentConfig) -> CliResult<RandomSource> {
    let seed = match config.param("data_seed") {
        Some(_) => config.param_usize("data_seed", 0)? as u64,
        None => config.require_seed()?,
    };
    Ok(RandomSource::with_stream(seed, DATA_STREAM))
}

pub fn rotated_quadratic(config: &ExperimentConfig) -> CliResult<Quadratic> {
    let n = dim(config, 5)?;
    let (lo, hi) = (config.param_or("lo", 1.0), config.param_or("hi", 2.0));
    if !(lo > 0.0 && hi >= lo) {
        return Err(CliError::Config(format!("quadratic needs 0 < lo <= hi, got lo={lo} hi={hi}")));
    }
    let center = config.param_or("center", 0.5);
    let mut rng = data_rng(config)?;
    let q = random_orthogonal(n, &mut rng);
    let spectrum: Vec<f64> =
        (0..n).map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect();
    let qd = Matrix::from_fn(n, n, |i, j| q[(i, j)] * spectrum[j]);
    let mut p = qd.matmul(&q.transpose())?;
    p.symmetrize();
    let lin: Vec<f64> = p.matvec(&vec![center; n])?.iter().map(|v| -v).collect();
    Ok(Quadratic::with_quartic(p, lin, 0.0, config.param_or("quartic", 0.0))?)
}

pub fn regularized_ls(config: &ExperimentConfig) -> CliResult<RegularizedLs> {
    let n = dim(config, 10)?;
    let m = config.param_usize("m", 2 * n)?;
    let lambda = config.param_or("lambda", 1e-4);
    let mut rng = data_rng(config)?;
    Ok(RegularizedLs::random(m, n, lambda, &mut rng)?)
}

/// Builds the function named in the configuration.
pub fn build_function(config: &ExperimentConfig) -> CliResult<Arc<dyn AnalyticFunction>> {
    let name = config.function.as_deref().ok_or_else(|| CliError::Config("no function given".into()))?;
    let f: Arc<dyn AnalyticFunction> = match name {
        "half_sq_norm" => builtin(BuiltinSpec::HalfSqNorm { n: dim(config, 1)? })?,
        "quadratic" => Arc::new(rotated_quadratic(config)?),
        "regularized_ls" => {
            let ls = regularized_ls(config)?;
            match config.param_or("quartic", 0.0) {
                w if w > 0.0 => Arc::new(ls.to_quadratic(w)?),
                _ => Arc::new(ls),
            }
        }
        "himmelblau" => builtin(BuiltinSpec::Himmelblau)?,
        "log" => builtin(BuiltinSpec::Log)?,
        "power" => {
            let p = config.param_usize("p", 2)?;
            let p = u32::try_from(p).map_err(|_| CliError::Config(format!("param.p too large: {p}")))?;
            builtin(BuiltinSpec::Power { p })?
        }
        "bump_tail" => builtin(BuiltinSpec::BumpTail)?,
        "pde_velocity_norm" => builtin(BuiltinSpec::PdeVelocityNorm { speed: config.param_or("speed", 1.0) })?,
        other => {
            return Err(CliError::Config(format!(
                "unknown function {other:?}; expected one of {}",
                FUNCTION_NAMES.join(", ")
            )))
        }
    };
    if let Some(n) = config.n {
        if n != f.dim() {
            return Err(CliError::Config(format!("{name} has dimension {}, but n={n} was requested", f.dim())));
        }
    }
    Ok(f)
}

/// Gradient bound `L1`: `param.l1` when given, otherwise the function's own
/// constant, otherwise (for quadratics with a quartic term) the bound on the
/// ball of radius `param.l1_radius`.
pub fn gradient_bound(config: &ExperimentConfig, f: &Arc<dyn AnalyticFunction>) -> CliResult<Option<f64>> {
    if let Some(l1) = config.param("l1") {
        return Ok(Some(l1));
    }
    if let Some(l1) = f.metadata().l1 {
        return Ok(Some(l1));
    }
    let Some(radius) = config.param("l1_radius") else {
        return Ok(None);
    };
    let quad = match config.function.as_deref() {
        Some("quadratic") => rotated_quadratic(config)?,
        Some("regularized_ls") => regularized_ls(config)?.to_quadratic(config.param_or("quartic", 0.0))?,
        _ => return Ok(None),
    };
    Ok(Some(quad.l1_on_ball(radius)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_kv_text(text).unwrap()
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let q = random_orthogonal(6, &mut RandomSource::new(1));
        let i = q.transpose().matmul(&q).unwrap().sub(&Matrix::identity(6)).unwrap();
        assert!(i.max_abs() < 1e-13);
    }

    #[test]
    fn rotated_quadratic_spectrum_and_minimizer() {
        let f = rotated_quadratic(&cfg("n=5\nseed=3\nparam.center=0.5")).unwrap();
        let m = f.metadata();
        assert!((m.tau.unwrap() - 1.0).abs() < 1e-12);
        assert!((m.l1.unwrap() - 2.0).abs() < 1e-12);
        for v in m.minimizer.as_ref().unwrap() {
            assert!((v - 0.5).abs() < 1e-12);
        }
        let fq = rotated_quadratic(&cfg("n=5\nseed=3\nparam.quartic=0.01")).unwrap();
        assert!((fq.l1_on_ball(2.0) - 2.48).abs() < 1e-12);
    }

    #[test]
    fn names_resolve() {
        for name in FUNCTION_NAMES {
            let f = build_function(&cfg(&format!("function={name}\nseed=1"))).unwrap();
            assert!(f.dim() >= 1);
        }
        assert!(matches!(build_function(&cfg("function=rosenbrock\nseed=1")), Err(CliError::Config(_))));
        assert!(build_function(&cfg("function=log\nn=3\nseed=1")).is_err());
    }

    #[test]
    fn data_seed_fixes_the_instance() {
        let a = regularized_ls(&cfg("seed=1\nparam.data_seed=7")).unwrap();
        let b = regularized_ls(&cfg("seed=2\nparam.data_seed=7")).unwrap();
        let c = regularized_ls(&cfg("seed=2")).unwrap();
        assert_eq!(a.rhs(), b.rhs());
        assert_ne!(b.rhs(), c.rhs());
    }
}
