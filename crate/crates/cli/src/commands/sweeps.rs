use izo_core::{cd_derivative, cs_derivative, fd_derivative, IzoError, NoisyOracle};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use super::{noise_model, stream, NOISE_STREAM};
use crate::config::{preamble, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::functions::build_function;
use crate::output::Report;

#[derive(Debug, Serialize)]
struct SweepRow {
    delta: f64,
    fd_err: Option<f64>,
    cd_err: Option<f64>,
    cs_err: Option<f64>,
}

/// `10^0, 10^-1, ..., 10^-300`, each the double nearest the decimal value.
pub fn decade_grid() -> Vec<f64> {
    (0..=300).map(|j| format!("1e-{j}").parse().expect("valid literal")).collect()
}

/// Out-of-domain evaluations leave an empty cell; anything else aborts.
fn error_or_blank(r: izo_core::Result<f64>, exact: f64) -> CliResult<Option<f64>> {
    match r {
        Ok(v) => Ok(Some((v - exact).abs())),
        Err(IzoError::Domain(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn min_of(rows: &[SweepRow], pick: impl Fn(&SweepRow) -> Option<f64>) -> Option<f64> {
    rows.iter().filter_map(pick).reduce(f64::min)
}

/// Absolute errors of forward, central and complex-step derivatives of a
/// scalar function at `param.x` over the decade grid of steps.
pub fn estimator_sweep(c: &ExperimentConfig) -> CliResult<Report> {
    let f = build_function(c)?;
    if f.dim() != 1 {
        return Err(CliError::Config(format!(
            "estimator-sweep needs a scalar function, {} has n={}",
            f.name(),
            f.dim()
        )));
    }
    let x = c.param_or("x", 1.0);
    let exact =
        f.gradient(&[x]).ok_or_else(|| CliError::Config(format!("{} has no reference derivative", f.name())))?[0];
    let mut oracle = NoisyOracle::new(f, noise_model(c)?, stream(c.require_seed()?, NOISE_STREAM));
    let mut rows = Vec::new();
    for delta in decade_grid() {
        rows.push(SweepRow {
            delta,
            fd_err: error_or_blank(fd_derivative(&mut oracle, x, delta), exact)?,
            cd_err: error_or_blank(cd_derivative(&mut oracle, x, delta), exact)?,
            cs_err: error_or_blank(cs_derivative(&mut oracle, x, delta), exact)?,
        });
    }
    let cs_small = rows.iter().filter(|r| r.delta <= 1e-8).filter_map(|r| r.cs_err).reduce(f64::max);
    let summary = json!({
        "command": "estimator-sweep",
        "exact_derivative": exact,
        "min_fd_err": min_of(&rows, |r| r.fd_err),
        "min_cd_err": min_of(&rows, |r| r.cd_err),
        "min_cs_err": min_of(&rows, |r| r.cs_err),
        "max_cs_err_delta_le_1e-8": cs_small,
        "queries": oracle.query_count(),
    });
    let pre = preamble("estimator-sweep", c, &[("exact_derivative".into(), format!("{exact:e}"))]);
    Report::from_rows(pre, &rows, summary)
}

#[derive(Debug, Serialize)]
struct SurfaceRow {
    p: u32,
    x: f64,
    y: f64,
    value: f64,
    exact: f64,
}

/// Heights used for `Im f(x+iy)/y`.
pub const SURFACE_HEIGHTS: [f64; 10] = [0.5, 0.2, 0.1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

/// `Im (x+iy)^p / y` against `p x^(p-1)` on a grid of `(x, y)`.
///
/// `param.p` selects one exponent (default: 50, 25, 10 and 2); the `x` grid
/// has `param.x_steps` points on `[param.x_lo, param.x_hi]`.
pub fn imlift_surface(c: &ExperimentConfig) -> CliResult<Report> {
    let powers: Vec<u32> = match c.param("p") {
        Some(_) => vec![c.param_usize("p", 2)? as u32],
        None => vec![50, 25, 10, 2],
    };
    if powers.contains(&0) {
        return Err(CliError::Config("param.p must be >= 1".into()));
    }
    let (lo, hi) = (c.param_or("x_lo", 0.0), c.param_or("x_hi", 2.0));
    let steps = c.param_usize("x_steps", 21)?.max(2);
    if !(hi > lo) {
        return Err(CliError::Config(format!("need x_lo < x_hi, got {lo} and {hi}")));
    }
    let mut rows = Vec::new();
    let mut worst = serde_json::Map::new();
    for &p in &powers {
        let mut max_rel = 0.0f64;
        for i in 0..steps {
            let x = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
            let exact = p as f64 * x.powi(p as i32 - 1);
            for y in SURFACE_HEIGHTS {
                let value = Complex64::new(x, y).powu(p).im / y;
                if y == 1e-8 && exact != 0.0 {
                    max_rel = max_rel.max(((value - exact) / exact).abs());
                }
                rows.push(SurfaceRow { p, x, y, value, exact });
            }
        }
        worst.insert(format!("p{p}"), json!(max_rel));
    }
    let summary = json!({
        "command": "imlift-surface",
        "max_rel_err_at_y_1e-8": worst,
        "rows": rows.len(),
    });
    Report::from_rows(preamble("imlift-surface", c, &[]), &rows, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = decade_grid();
        assert_eq!(g.len(), 301);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[16], 1e-16);
        assert_eq!(g[300], 1e-300);
    }
}
