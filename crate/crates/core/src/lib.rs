//! Zeroth-order optimization with single-point complex-step gradient
//! estimates.
//!
//! The crate provides holomorphic test functions behind a noisy complex
//! oracle, derivative and gradient estimators, projected descent with the
//! usual stepsize and smoothing schedules, and a linear-programming based
//! estimator of the strong-convexity modulus.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod complex;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod oracle;
pub mod tau;

pub use algorithms::{
    make_schedule, run_izo, run_izo_baseline, run_izo_with, run_online_izo, suffix_average, tail_average,
    uniform_average, FeasibleSet, LogPlan, MembershipTest, Regime, RunOptions, Runner, Schedule, Trace, TraceRecord,
};
pub use complex::{complex_shift, sample_unit_ball, sample_unit_sphere, ComplexScalar, ComplexVector, RandomSource};
pub use error::{IzoError, Result};
pub use estimators::{
    cd_derivative, cs_derivative, cs_gradient_ellipsoid, cs_gradient_sample, fd_derivative, real_multipoint_gradient,
    smoothed_value_estimate, DifferenceVariant, GradientSample, SmoothingShape,
};
pub use linalg::{cholesky, min_eigenvalue, Matrix};
pub use oracle::{builtin, AnalyticFunction, BuiltinSpec, Metadata, NoiseKind, NoiseModel, NoisyOracle};
pub use tau::{
    collect_data, estimate_tau, DataPoint, DataSource, DdpBasis, LpProblem, LpSolution, LpStatus, QuadraticModel,
    TauEstimate,
};
