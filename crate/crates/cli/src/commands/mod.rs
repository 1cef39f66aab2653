//! Experiment commands. Each takes a configuration layered over its own
//! defaults and returns a [`Report`].

mod descent;
mod sweeps;
mod tau;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use izo_core::{AnalyticFunction, LogPlan, NoiseKind, NoiseModel, RandomSource, Regime};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::Report;

pub use descent::{nonconvex, pde, run, sc_quadratic};
pub use sweeps::{estimator_sweep, imlift_surface};
pub use tau::{ddp_demo, tau_demo};

/// Random streams. A run with seed `s` draws its directions from stream
/// `(s, DIRECTION_STREAM)`, its noise from `(s, NOISE_STREAM)` and so on, so
/// arms that share a seed see the same randomness.
pub const DIRECTION_STREAM: u64 = 1;
pub const NOISE_STREAM: u64 = 2;
pub const INIT_STREAM: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    EstimatorSweep,
    ImliftSurface,
    ScQuadratic,
    TauDemo,
    Nonconvex,
    Pde,
    DdpDemo,
    Run,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Self::EstimatorSweep,
        Self::ImliftSurface,
        Self::ScQuadratic,
        Self::TauDemo,
        Self::Nonconvex,
        Self::Pde,
        Self::DdpDemo,
        Self::Run,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::EstimatorSweep => "estimator-sweep",
            Self::ImliftSurface => "imlift-surface",
            Self::ScQuadratic => "sc-quadratic",
            Self::TauDemo => "tau-demo",
            Self::Nonconvex => "nonconvex",
            Self::Pde => "pde",
            Self::DdpDemo => "ddp-demo",
            Self::Run => "run",
        }
    }

    /// Defaults for this command, as `key=value` text.
    pub fn defaults_text(self) -> &'static str {
        match self {
            Self::EstimatorSweep => "function=log\nsigma_xi=0\nparam.x=1",
            Self::ImliftSurface => "function=power",
            Self::ScQuadratic => {
                "function=half_sq_norm\nn=100\nK=100000\nrepeats=25\ndelta=1\nsigma_xi=2.4308653429145085e-63\n\
                 set=ball:1\nparam.delta_tiny=1e-100"
            }
            Self::TauDemo => {
                "function=regularized_ls\nn=10\nK=20000\nrepeats=25\ndelta=2.220446049250313e-16\n\
                 sigma_xi=2.4308653429145085e-63\nset=ball:10\nparam.m=20\nparam.lambda=1e-4\nparam.threshold=1e-6"
            }
            Self::Nonconvex => {
                "function=himmelblau\nK=100000\nrepeats=8\ndelta=1e-6\nsigma_xi=1e-12\nset=ball:6\n\
                 param.init_radius=4.5\nparam.compare=1"
            }
            Self::Pde => {
                "function=pde_velocity_norm\nK=100000\nrepeats=8\ndelta=1e-6\nsigma_xi=1e-12\nset=box:1,2\n\
                 schedule=nonconvex\nparam.speed=1\nparam.r_lo=1\nparam.r_hi=8"
            }
            Self::DdpDemo => {
                "function=regularized_ls\nn=10\nK=1000\nrepeats=100\ndelta=2.220446049250313e-16\n\
                 sigma_xi=2.4308653429145085e-63\nset=ball:10\nparam.m=20\nparam.lambda=1e-4\nparam.init_radius=5"
            }
            Self::Run => {
                "function=half_sq_norm\nn=2\nK=10000\nrepeats=1\nschedule=sc_constrained\ndelta=1e-3\nsigma_xi=0"
            }
        }
    }

    pub fn defaults(self) -> ExperimentConfig {
        ExperimentConfig::from_kv_text(self.defaults_text()).expect("built-in defaults parse")
    }

    /// Runs the command with `config` layered over its defaults.
    pub fn execute(self, config: &ExperimentConfig) -> CliResult<Report> {
        let mut c = self.defaults().overlay(config);
        c.experiment = Some(self.name().to_string());
        c.out = None;
        c.require_seed()?;
        match self {
            Self::EstimatorSweep => estimator_sweep(&c),
            Self::ImliftSurface => imlift_surface(&c),
            Self::ScQuadratic => sc_quadratic(&c),
            Self::TauDemo => tau_demo(&c),
            Self::Nonconvex => nonconvex(&c),
            Self::Pde => pde(&c),
            Self::DdpDemo => ddp_demo(&c),
            Self::Run => run(&c),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| CliError::Config(format!("unknown command {s:?}")))
    }
}

fn noise_model(c: &ExperimentConfig) -> CliResult<NoiseModel> {
    let s = c.sigma_xi.unwrap_or(0.0);
    if s == 0.0 {
        Ok(NoiseModel::none())
    } else {
        Ok(NoiseModel::new(s, NoiseKind::Gaussian)?)
    }
}

fn regime(c: &ExperimentConfig) -> CliResult<Regime> {
    let name = c.schedule.as_deref().ok_or_else(|| CliError::Config("no schedule given".into()))?;
    Ok(name.parse::<Regime>()?)
}

fn positive(c: &ExperimentConfig) -> CliResult<(usize, usize, f64)> {
    let k = c.k.unwrap_or(0);
    let repeats = c.repeats.unwrap_or(1);
    let delta = c.delta.unwrap_or(0.0);
    if k == 0 || repeats == 0 {
        return Err(CliError::Config("K and repeats must be positive".into()));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(CliError::Config(format!("delta must be positive, got {delta}")));
    }
    Ok((k, repeats, delta))
}

/// Geometric (or strided) points plus every power of ten up to `k_total`
/// and any `extra` points.
fn log_plan(c: &ExperimentConfig, k_total: usize, extra: &[usize]) -> LogPlan {
    let plan = match c.log_stride {
        Some(s) => LogPlan::every(s, k_total),
        None => LogPlan::geometric(k_total),
    };
    let decades = std::iter::successors(Some(10usize), |d| d.checked_mul(10)).take_while(|&d| d <= k_total);
    plan.with(decades).with(extra.iter().copied().filter(|&k| k <= k_total))
}

fn f_star(f: &Arc<dyn AnalyticFunction>) -> Option<f64> {
    f.metadata().optimum
}

/// Runs `count` independent jobs in parallel; results come back in index
/// order and the first failure by index is reported.
fn parallel<T: Send>(count: usize, job: impl Fn(usize) -> CliResult<T> + Sync + Send) -> CliResult<Vec<T>> {
    let results: Vec<CliResult<T>> = (0..count).into_par_iter().map(job).collect();
    results.into_iter().collect()
}

fn stream(seed: u64, stream: u64) -> RandomSource {
    RandomSource::with_stream(seed, stream)
}

fn seed_of(c: &ExperimentConfig, r: usize) -> u64 {
    c.seed.expect("seed checked").wrapping_add(r as u64)
}
