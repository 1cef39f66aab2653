//! Projected single-point descent, its schedules, and run traces.
//!
//! A run performs `x_{k+1} = P(x_k - mu_k g_k)` for `k = 1..K`, where `g_k`
//! is a complex-step sample at `x_k` with smoothing `delta_k` and `P` is the
//! projection onto the feasible set. The uniform average over the first `K`
//! iterates is `(1/K) sum_{k<=K} x_k`; the suffix average takes the last
//! `K - floor(K/2)` of them and the tail average those after a warm-up `K0`.

mod schedule;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

pub use schedule::{make_schedule, FeasibleSet, MembershipTest, Regime, Schedule};

use crate::complex::{sample_unit_sphere, RandomSource};
use crate::error::{check_dim, IzoError, Result};
use crate::estimators::{cs_gradient_along, real_multipoint_gradient, DifferenceVariant, GradientSample};
use crate::oracle::{AnalyticFunction, NoisyOracle};
use crate::tau::DataPoint;

/// Iterations at which a record is written.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LogPlan {
    points: BTreeSet<usize>,
}

impl LogPlan {
    /// `k in {1, 2, 4, 8, ...}` up to `k_total`, plus `k_total`.
    pub fn geometric(k_total: usize) -> Self {
        let mut points = BTreeSet::new();
        let mut k = 1;
        while k <= k_total {
            points.insert(k);
            k *= 2;
        }
        if k_total > 0 {
            points.insert(k_total);
        }
        Self { points }
    }

    /// Every `stride`-th iteration plus `k_total`.
    pub fn every(stride: usize, k_total: usize) -> Self {
        let stride = stride.max(1);
        let mut points: BTreeSet<usize> = (stride..=k_total).step_by(stride).collect();
        if k_total > 0 {
            points.insert(k_total);
        }
        Self { points }
    }

    pub fn with(mut self, ks: impl IntoIterator<Item = usize>) -> Self {
        self.points.extend(ks.into_iter().filter(|&k| k > 0));
        self
    }

    pub fn contains(&self, k: usize) -> bool {
        self.points.contains(&k)
    }

    pub fn points(&self) -> impl Iterator<Item = usize> + '_ {
        self.points.iter().copied()
    }
}

/// Options that do not affect the iterates themselves.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub log: Option<LogPlan>,
    /// Store every iterate. Defaults to `n <= 64`.
    pub keep_history: Option<bool>,
    /// Keep the running sum at this index so a tail average is available.
    pub tail_start: Option<usize>,
    /// Record this many data points (from the first iterations) for
    /// strong-convexity estimation, reusing each step's oracle call.
    pub collect_data: usize,
    /// Track `min_k ||grad f(x_k)||^2` with the reference gradient.
    pub track_grad: bool,
    /// Store the iterate and its running average in each record.
    pub record_points: bool,
}

/// One logged iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    /// `f(x_k)`, noiseless.
    pub f_value: f64,
    /// `f` at the uniform average of `x_1..x_k`.
    pub f_uniform_avg: f64,
    /// `f` at the average of `x_{floor(k/2)+1}..x_k`.
    pub f_suffix_avg: f64,
    pub grad_norm_sq: Option<f64>,
    /// Stepsize and smoothing used at step `k`.
    pub mu: f64,
    pub delta: f64,
    /// Oracle queries consumed through step `k`.
    pub queries: u64,
    pub point: Option<Vec<f64>>,
    pub avg_point: Option<Vec<f64>>,
}

/// Result of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub n: usize,
    /// Number of completed steps `K`.
    pub steps: usize,
    pub records: Vec<TraceRecord>,
    /// `x_1..x_K`, row-major, if kept.
    pub history: Option<Vec<f64>>,
    /// `sum_{k<=K} x_k`.
    pub sum: Vec<f64>,
    /// Running sums `sum_{j<=i} x_j` keyed by `i`.
    pub partial_sums: BTreeMap<usize, Vec<f64>>,
    /// `x_{K+1}`.
    pub last: Vec<f64>,
    pub queries: u64,
    /// Lowest `||grad f(x_k)||^2` over `k <= K`, if tracked.
    pub min_grad_norm_sq: Option<f64>,
    pub data: Vec<DataPoint>,
    /// Per-round losses `f_k(x_k)` of an online run.
    pub losses: Vec<f64>,
}

impl Trace {
    /// Trace of a given iterate sequence `x_1..x_K`, for averaging.
    pub fn from_iterates(iterates: &[Vec<f64>]) -> Result<Self> {
        let first = iterates.first().ok_or_else(|| IzoError::Input("no iterates".into()))?;
        let n = first.len();
        let mut trace = Trace { n, sum: vec![0.0; n], history: Some(Vec::new()), ..Trace::default() };
        for x in iterates {
            check_dim(n, x.len(), "iterate")?;
            trace.history.as_mut().unwrap().extend_from_slice(x);
            add_assign(&mut trace.sum, x);
            trace.steps += 1;
        }
        trace.last = iterates.last().unwrap().clone();
        Ok(trace)
    }

    /// Iterate `x_k`, `1 <= k <= K`, if the history was kept.
    pub fn iterate(&self, k: usize) -> Option<&[f64]> {
        let h = self.history.as_ref()?;
        (k >= 1 && k <= self.steps).then(|| &h[(k - 1) * self.n..k * self.n])
    }

    fn prefix_sum(&self, i: usize) -> Option<Vec<f64>> {
        if i == 0 {
            return Some(vec![0.0; self.n]);
        }
        if i == self.steps {
            return Some(self.sum.clone());
        }
        if let Some(s) = self.partial_sums.get(&i) {
            return Some(s.clone());
        }
        let h = self.history.as_ref()?;
        let mut s = vec![0.0; self.n];
        for row in h[..i * self.n].chunks(self.n) {
            add_assign(&mut s, row);
        }
        Some(s)
    }

    fn window_average(&self, start: usize) -> Result<Vec<f64>> {
        let lo =
            self.prefix_sum(start).ok_or_else(|| IzoError::Input(format!("running sum at k={start} was not kept")))?;
        let count = (self.steps - start) as f64;
        Ok(self.sum.iter().zip(&lo).map(|(a, b)| (a - b) / count).collect())
    }
}

/// Reports an overflowing function value as a non-finite step `k`.
fn at_step(k: usize) -> impl Fn(IzoError) -> IzoError {
    move |e| match e {
        IzoError::Overflow(detail) => IzoError::NonFinite { k, detail },
        other => other,
    }
}

fn add_assign(acc: &mut [f64], x: &[f64]) {
    acc.iter_mut().zip(x).for_each(|(a, b)| *a += b);
}

/// `(1/K) sum_{k<=K} x_k`.
pub fn uniform_average(trace: &Trace) -> Result<Vec<f64>> {
    if trace.steps == 0 {
        return Err(IzoError::Input("empty trace".into()));
    }
    trace.window_average(0)
}

/// `(2/K) sum_{k=K/2+1}^{K} x_k`; requires an even `K`.
pub fn suffix_average(trace: &Trace) -> Result<Vec<f64>> {
    if trace.steps == 0 || !trace.steps.is_multiple_of(2) {
        return Err(IzoError::Input(format!("suffix average needs an even K, got {}", trace.steps)));
    }
    trace.window_average(trace.steps / 2)
}

/// `(1/(K-K0)) sum_{k=K0+1}^{K} x_k`; requires `K > K0`.
pub fn tail_average(trace: &Trace, k0: usize) -> Result<Vec<f64>> {
    if trace.steps <= k0 {
        return Err(IzoError::Input(format!("tail average needs K > K0, got K={} K0={k0}", trace.steps)));
    }
    trace.window_average(k0)
}

/// Stateful descent loop. The stepsize and smoothing are supplied per step,
/// so a schedule may be swapped mid-run.
pub struct Runner<'a> {
    oracle: &'a mut NoisyOracle,
    set: &'a FeasibleSet,
    rng: &'a mut RandomSource,
    function: Arc<dyn AnalyticFunction>,
    options: RunOptions,
    /// Running-sum indices to snapshot: `floor(k/2)` for logged `k`, and the
    /// tail start.
    snapshot_at: BTreeSet<usize>,
    x: Vec<f64>,
    trace: Trace,
}

impl<'a> Runner<'a> {
    pub fn new(
        oracle: &'a mut NoisyOracle,
        set: &'a FeasibleSet,
        x1: &[f64],
        rng: &'a mut RandomSource,
        options: RunOptions,
    ) -> Result<Self> {
        let n = oracle.dim();
        check_dim(n, x1.len(), "initial point")?;
        if x1.iter().any(|v| !v.is_finite()) {
            return Err(IzoError::Input("initial point must be finite".into()));
        }
        if !set.contains(x1) {
            return Err(IzoError::Input("initial point must be feasible".into()));
        }
        let mut snapshot_at: BTreeSet<usize> =
            options.log.as_ref().map(|p| p.points().map(|k| k / 2).filter(|&i| i > 0).collect()).unwrap_or_default();
        snapshot_at.extend(options.tail_start.filter(|&i| i > 0));
        let keep = options.keep_history.unwrap_or(n <= 64);
        let function = oracle.function().clone();
        let trace = Trace {
            n,
            sum: vec![0.0; n],
            history: keep.then(Vec::new),
            last: x1.to_vec(),
            queries: oracle.query_count(),
            ..Trace::default()
        };
        Ok(Self { oracle, set, rng, function, options, snapshot_at, x: x1.to_vec(), trace })
    }

    /// Current iterate `x_{k+1}` after `k` completed steps.
    pub fn current(&self) -> &[f64] {
        &self.x
    }

    pub fn steps(&self) -> usize {
        self.trace.steps
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn oracle(&self) -> &NoisyOracle {
        self.oracle
    }

    /// One complex-step iteration with the given stepsize and smoothing.
    pub fn step(&mut self, mu: f64, delta: f64) -> Result<()> {
        let k = self.trace.steps + 1;
        let u = sample_unit_sphere(self.x.len(), self.rng)?;
        let sample = if self.trace.data.len() < self.options.collect_data {
            let z = crate::complex::complex_shift(&self.x, &u, delta)?;
            let (re, im) = self.oracle.query_both(&z).map_err(at_step(k))?;
            self.trace.data.push(DataPoint { x: self.x.clone(), u: u.clone(), delta, value: re });
            let scale = self.x.len() as f64 * im / delta;
            GradientSample { g: u.iter().map(|v| scale * v).collect(), u, delta, queries_used: 1 }
        } else {
            cs_gradient_along(self.oracle, &self.x, delta, u).map_err(at_step(k))?
        };
        self.advance(k, mu, delta, &sample.g)
    }

    /// One iteration driven by an externally computed gradient estimate.
    pub fn step_with(&mut self, mu: f64, delta: f64, g: &[f64]) -> Result<()> {
        let k = self.trace.steps + 1;
        self.advance(k, mu, delta, g)
    }

    fn advance(&mut self, k: usize, mu: f64, delta: f64, g: &[f64]) -> Result<()> {
        // account x_k before moving
        add_assign(&mut self.trace.sum, &self.x);
        if let Some(h) = self.trace.history.as_mut() {
            h.extend_from_slice(&self.x);
        }
        self.trace.steps = k;
        if self.snapshot_at.contains(&k) {
            self.trace.partial_sums.insert(k, self.trace.sum.clone());
        }
        if self.options.track_grad {
            if let Some(gr) = self.function.gradient(&self.x) {
                let s: f64 = gr.iter().map(|v| v * v).sum();
                let m = self.trace.min_grad_norm_sq.get_or_insert(s);
                *m = m.min(s);
            }
        }
        self.trace.queries = self.oracle.query_count();
        if self.options.log.as_ref().is_some_and(|p| p.contains(k)) {
            let record = self.record(k, mu, delta)?;
            self.trace.records.push(record);
        }

        let stepped: Vec<f64> = self.x.iter().zip(g).map(|(x, gi)| x - mu * gi).collect();
        if let Some(bad) = stepped.iter().position(|v| !v.is_finite()) {
            return Err(IzoError::NonFinite { k, detail: format!("component {bad} after a step of size {mu:e}") });
        }
        let next = self.set.project(&stepped)?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(IzoError::NonFinite { k, detail: "projection returned a non-finite point".into() });
        }
        if !self.set.contains(&next) {
            return Err(IzoError::Contract(format!("iterate {} left the feasible set", k + 1)));
        }
        self.x = next;
        self.trace.last = self.x.clone();
        Ok(())
    }

    fn record(&self, k: usize, mu: f64, delta: f64) -> Result<TraceRecord> {
        let kf = k as f64;
        let avg: Vec<f64> = self.trace.sum.iter().map(|s| s / kf).collect();
        let half = k / 2;
        let lo = match half {
            0 => vec![0.0; self.x.len()],
            h => self.trace.partial_sums.get(&h).cloned().unwrap_or_else(|| vec![0.0; self.x.len()]),
        };
        let count = (k - half) as f64;
        let suffix: Vec<f64> = self.trace.sum.iter().zip(&lo).map(|(a, b)| (a - b) / count).collect();
        let grad_norm_sq = self.function.gradient(&self.x).map(|g| g.iter().map(|v| v * v).sum());
        Ok(TraceRecord {
            k,
            f_value: self.function.value(&self.x)?,
            f_uniform_avg: self.function.value(&avg)?,
            f_suffix_avg: self.function.value(&suffix)?,
            grad_norm_sq,
            mu,
            delta,
            queries: self.oracle.query_count(),
            point: self.options.record_points.then(|| self.x.clone()),
            avg_point: self.options.record_points.then_some(avg),
        })
    }

    /// Runs the schedule's steps `steps()+1 ..= until`.
    pub fn run_schedule(&mut self, schedule: &Schedule, until: usize) -> Result<()> {
        while self.trace.steps < until {
            let k = self.trace.steps + 1;
            self.step(schedule.mu(k), schedule.delta(k))?;
        }
        Ok(())
    }

    pub fn finish(self) -> Trace {
        self.trace
    }
}

/// Complex-step projected descent for `k_total` iterations.
pub fn run_izo(
    oracle: &mut NoisyOracle,
    set: &FeasibleSet,
    schedule: &Schedule,
    x1: &[f64],
    k_total: usize,
    rng: &mut RandomSource,
) -> Result<Trace> {
    let options = RunOptions { log: Some(LogPlan::geometric(k_total)), ..RunOptions::default() };
    run_izo_with(oracle, set, schedule, x1, k_total, rng, options)
}

pub fn run_izo_with(
    oracle: &mut NoisyOracle,
    set: &FeasibleSet,
    schedule: &Schedule,
    x1: &[f64],
    k_total: usize,
    rng: &mut RandomSource,
    options: RunOptions,
) -> Result<Trace> {
    if schedule.n != oracle.dim() {
        return Err(IzoError::Config(format!(
            "schedule built for n={} but the oracle has n={}",
            schedule.n,
            oracle.dim()
        )));
    }
    let mut runner = Runner::new(oracle, set, x1, rng, options)?;
    runner.run_schedule(schedule, k_total)?;
    Ok(runner.finish())
}

/// Smoothing of the central-difference baseline:
/// `delta_k = (3 n^2 sigma / (4k + 9 n^2))^(1/4)`.
pub fn baseline_delta(n: usize, sigma_xi: f64, k: usize) -> f64 {
    let n2 = (n * n) as f64;
    (3.0 * n2 * sigma_xi / (4.0 * k as f64 + 9.0 * n2)).powf(0.25)
}

/// Projected descent with two-point central differences in real arithmetic,
/// `mu_k = 2/(tau k)` and the [`baseline_delta`] smoothing law.
pub fn run_izo_baseline(
    oracle: &mut NoisyOracle,
    set: &FeasibleSet,
    tau: f64,
    x1: &[f64],
    k_total: usize,
    rng: &mut RandomSource,
    options: RunOptions,
) -> Result<Trace> {
    if !(tau > 0.0) {
        return Err(IzoError::Config(format!("tau must be positive, got {tau}")));
    }
    let sigma = oracle.noise().sigma_xi;
    if !(sigma > 0.0) {
        return Err(IzoError::Config("the baseline smoothing law needs sigma_xi > 0".into()));
    }
    let n = oracle.dim();
    let mut runner = Runner::new(oracle, set, x1, rng, options)?;
    for k in 1..=k_total {
        let mu = 2.0 / (tau * k as f64);
        let delta = baseline_delta(n, sigma, k);
        let x = runner.current().to_vec();
        let s = real_multipoint_gradient(runner.oracle, &x, delta, runner.rng, DifferenceVariant::Central)
            .map_err(at_step(k))?;
        runner.step_with(mu, delta, &s.g)?;
    }
    Ok(runner.finish())
}

/// Online descent over a sequence of functions: step `k` queries `f_{k+1}`
/// at `x_k` and the round loss is `f_k(x_k)`. Needs `K+1` oracles.
pub fn run_online_izo(
    oracles: &mut [NoisyOracle],
    set: &FeasibleSet,
    schedule: &Schedule,
    x1: &[f64],
    k_total: usize,
    rng: &mut RandomSource,
) -> Result<Trace> {
    if oracles.len() < k_total + 1 {
        return Err(IzoError::Input(format!(
            "online run of {k_total} rounds needs {} oracles, got {}",
            k_total + 1,
            oracles.len()
        )));
    }
    let n = x1.len();
    for o in oracles.iter() {
        check_dim(n, o.dim(), "online oracle")?;
    }
    if !set.contains(x1) {
        return Err(IzoError::Input("initial point must be feasible".into()));
    }
    let mut trace = Trace { n, sum: vec![0.0; n], history: (n <= 64).then(Vec::new), ..Trace::default() };
    let mut x = x1.to_vec();
    let mut queries = 0;
    for k in 1..=k_total {
        trace.losses.push(oracles[k - 1].function().value(&x)?);
        add_assign(&mut trace.sum, &x);
        if let Some(h) = trace.history.as_mut() {
            h.extend_from_slice(&x);
        }
        let next_oracle = &mut oracles[k];
        let before = next_oracle.query_count();
        let u = sample_unit_sphere(n, rng)?;
        let s = cs_gradient_along(next_oracle, &x, schedule.delta(k), u).map_err(at_step(k))?;
        queries += next_oracle.query_count() - before;
        let mu = schedule.mu(k);
        let stepped: Vec<f64> = x.iter().zip(&s.g).map(|(a, g)| a - mu * g).collect();
        if stepped.iter().any(|v| !v.is_finite()) {
            return Err(IzoError::NonFinite { k, detail: format!("online step of size {mu:e}") });
        }
        x = set.project(&stepped)?;
        trace.steps = k;
    }
    trace.last = x;
    trace.queries = queries;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::norm2;
    use crate::linalg::Matrix;
    use crate::oracle::{HalfSqNorm, Linear, NoiseModel, Quadratic};

    fn half_sq(n: usize) -> NoisyOracle {
        NoisyOracle::exact(Arc::new(HalfSqNorm::new(n).unwrap()))
    }

    #[test]
    fn zero_function_keeps_initial_point() {
        let mut o = NoisyOracle::exact(Arc::new(Linear::zero(3).unwrap()));
        let set = FeasibleSet::WholeSpace;
        let s = make_schedule(Regime::ScConstrained, 1.0, 1.0, 3, 0.5, 50).unwrap();
        let x1 = [0.1, -0.2, 0.3];
        let t = run_izo(&mut o, &set, &s, &x1, 50, &mut RandomSource::new(1)).unwrap();
        assert_eq!(t.last, x1.to_vec());
        for (a, b) in uniform_average(&t).unwrap().iter().zip(&x1) {
            assert!((a - b).abs() <= 50.0 * f64::EPSILON * b.abs());
        }
        assert_eq!(t.queries, 50);
    }

    #[test]
    fn half_sq_norm_contracts() {
        let mut o = half_sq(2);
        let set = FeasibleSet::centered_ball(2, 10.0).unwrap();
        let s = make_schedule(Regime::ScConstrained, 1.0, 1.0, 2, 0.1, 10_000).unwrap();
        let t = run_izo(&mut o, &set, &s, &[1.0, 1.0], 10_000, &mut RandomSource::new(4)).unwrap();
        let avg = uniform_average(&t).unwrap();
        let f = 0.5 * norm2(&avg).powi(2);
        assert!(f <= 1e-2 * 1.0, "f(avg) = {f}");
        let last = t.records.last().unwrap();
        assert_eq!(last.k, 10_000);
        assert!((last.f_uniform_avg - f).abs() <= 1e-12 * (1.0 + f));
    }

    #[test]
    fn averages_of_known_sequences() {
        let c = vec![vec![2.0, -1.0]; 6];
        let t = Trace::from_iterates(&c).unwrap();
        assert_eq!(uniform_average(&t).unwrap(), vec![2.0, -1.0]);
        assert_eq!(suffix_average(&t).unwrap(), vec![2.0, -1.0]);
        assert_eq!(tail_average(&t, 3).unwrap(), vec![2.0, -1.0]);

        let ramp: Vec<Vec<f64>> = (1..=4).map(|k| vec![k as f64, 0.0]).collect();
        let t = Trace::from_iterates(&ramp).unwrap();
        assert_eq!(suffix_average(&t).unwrap(), vec![3.5, 0.0]);
        assert_eq!(tail_average(&t, 2).unwrap(), vec![3.5, 0.0]);
        assert_eq!(uniform_average(&t).unwrap(), vec![2.5, 0.0]);
        assert!(tail_average(&t, 4).is_err());
        let odd = Trace::from_iterates(&ramp[..3]).unwrap();
        assert!(suffix_average(&odd).is_err());
    }

    #[test]
    fn averages_without_history_use_snapshots() {
        let n = 80;
        let mut o = half_sq(n);
        let set = FeasibleSet::centered_ball(n, 1.0).unwrap();
        let s = make_schedule(Regime::QuadConstrained, 1.0, 1.0, n, 1.0, 1000).unwrap();
        let x1 = vec![0.1; n];
        let opts = RunOptions { log: Some(LogPlan::geometric(1000)), tail_start: Some(100), ..RunOptions::default() };
        let t = run_izo_with(&mut o, &set, &s, &x1, 1000, &mut RandomSource::new(2), opts).unwrap();
        assert!(t.history.is_none());
        assert!(suffix_average(&t).is_ok());
        assert!(tail_average(&t, 100).is_ok());
        assert!(tail_average(&t, 101).is_err());
    }

    #[test]
    fn iterates_stay_feasible() {
        let mut o = NoisyOracle::new(
            Arc::new(Quadratic::new(Matrix::from_diag(&[1.0, 3.0]), vec![-5.0, 4.0], 0.0).unwrap()),
            NoiseModel::gaussian(1e-4).unwrap(),
            RandomSource::new(7),
        );
        let ball = FeasibleSet::centered_ball(2, 1.0).unwrap();
        let s = make_schedule(Regime::QuadConstrained, 1.0, 3.0, 2, 0.3, 3000).unwrap();
        let t = run_izo(&mut o, &ball, &s, &[0.0, 0.0], 3000, &mut RandomSource::new(8)).unwrap();
        for k in 1..=3000 {
            assert!(norm2(t.iterate(k).unwrap()) <= 1.0 + 1e-12);
        }
        let bx = FeasibleSet::boxed(vec![-0.5, -0.5], vec![0.5, 0.5]).unwrap();
        let t = run_izo(&mut o, &bx, &s, &[0.0, 0.0], 3000, &mut RandomSource::new(8)).unwrap();
        for k in 1..=3000 {
            assert!(t.iterate(k).unwrap().iter().all(|v| v.abs() <= 0.5));
        }
    }

    #[test]
    fn determinism() {
        let run = || {
            let mut o = NoisyOracle::new(
                Arc::new(HalfSqNorm::new(5).unwrap()),
                NoiseModel::gaussian(1e-6).unwrap(),
                RandomSource::with_stream(11, 1),
            );
            let s = make_schedule(Regime::ScConstrained, 1.0, 1.0, 5, 0.2, 500).unwrap();
            let set = FeasibleSet::centered_ball(5, 3.0).unwrap();
            run_izo(&mut o, &set, &s, &[1.0; 5], 500, &mut RandomSource::with_stream(11, 2)).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn overflow_aborts_with_iteration() {
        let mut o = NoisyOracle::exact(Arc::new(Linear::new(vec![1e300, 1e300], 0.0).unwrap()));
        let s = make_schedule(Regime::ScConstrained, 1e-10, 1.0, 2, 1.0, 10).unwrap();
        let err =
            run_izo(&mut o, &FeasibleSet::WholeSpace, &s, &[0.0, 0.0], 10, &mut RandomSource::new(1)).unwrap_err();
        assert!(matches!(err, IzoError::NonFinite { k: 1, .. }), "{err:?}");

        // finite iterate, overflowing value
        let mut o = NoisyOracle::exact(Arc::new(HalfSqNorm::new(1).unwrap()));
        let s = make_schedule(Regime::ScConstrained, 1.0, 1.0, 1, 0.5, 10).unwrap();
        let err = run_izo(&mut o, &FeasibleSet::WholeSpace, &s, &[1e200], 10, &mut RandomSource::new(1)).unwrap_err();
        assert!(matches!(err, IzoError::NonFinite { k: 1, .. }), "{err:?}");
    }

    #[test]
    fn baseline_formulas_and_accounting() {
        assert!((baseline_delta(1, 1.0, 1) - (3.0_f64 / 13.0).powf(0.25)).abs() < 1e-15);
        for k in [1, 10, 100_000] {
            assert!(baseline_delta(100, f64::EPSILON.powi(4), k) < 1e-15);
        }
        let mut o = NoisyOracle::new(
            Arc::new(HalfSqNorm::new(3).unwrap()),
            NoiseModel::gaussian(1e-8).unwrap(),
            RandomSource::new(3),
        );
        let set = FeasibleSet::centered_ball(3, 1.0).unwrap();
        let opts = RunOptions { log: Some(LogPlan::geometric(100)), ..RunOptions::default() };
        let t = run_izo_baseline(&mut o, &set, 2.0, &[0.5, 0.0, 0.0], 100, &mut RandomSource::new(4), opts).unwrap();
        assert_eq!(t.queries, 200);
        assert_eq!(t.records[0].mu, 1.0);
    }

    #[test]
    fn data_collection_reuses_queries() {
        let mut o = half_sq(2);
        let s = make_schedule(Regime::QuadConstrained, 1.0, 1.0, 2, 0.1, 20).unwrap();
        let opts = RunOptions { collect_data: 6, ..RunOptions::default() };
        let set = FeasibleSet::centered_ball(2, 5.0).unwrap();
        let t = run_izo_with(&mut o, &set, &s, &[1.0, 2.0], 20, &mut RandomSource::new(1), opts).unwrap();
        assert_eq!(t.data.len(), 6);
        assert_eq!(t.queries, 20);
        let d = &t.data[0];
        assert_eq!(d.x, vec![1.0, 2.0]);
        let expected = 0.5 * (1.0 + 4.0) - 0.5 * 0.01;
        assert!((d.value - expected).abs() < 1e-15);
    }

    #[test]
    fn online_identical_functions_match_offline() {
        let f: Arc<dyn AnalyticFunction> = Arc::new(HalfSqNorm::new(3).unwrap());
        let k_total = 200;
        let mut oracles: Vec<NoisyOracle> = (0..=k_total).map(|_| NoisyOracle::exact(f.clone())).collect();
        let s = make_schedule(Regime::OnlineQuadratic, 1.0, 1.0, 3, 0.5, k_total).unwrap();
        let q = make_schedule(Regime::QuadConstrained, 1.0, 1.0, 3, 0.5, k_total).unwrap();
        let set = FeasibleSet::centered_ball(3, 2.0).unwrap();
        let x1 = [1.0, 0.5, -0.5];
        let online = run_online_izo(&mut oracles, &set, &s, &x1, k_total, &mut RandomSource::new(6)).unwrap();
        let mut o = NoisyOracle::exact(f.clone());
        let offline = run_izo(&mut o, &set, &q, &x1, k_total, &mut RandomSource::new(6)).unwrap();
        assert_eq!(online.last, offline.last);
        assert_eq!(online.queries, k_total as u64);
        assert_eq!(online.losses.len(), k_total);

        let mut short: Vec<NoisyOracle> = (0..k_total).map(|_| NoisyOracle::exact(f.clone())).collect();
        assert!(matches!(
            run_online_izo(&mut short, &set, &s, &x1, k_total, &mut RandomSource::new(6)),
            Err(IzoError::Input(_))
        ));
        let mut one: Vec<NoisyOracle> = (0..2).map(|_| NoisyOracle::exact(f.clone())).collect();
        let t = run_online_izo(&mut one, &set, &s, &x1, 1, &mut RandomSource::new(6)).unwrap();
        assert_eq!(t.steps, 1);
    }

    #[test]
    fn online_regret_decays() {
        // f_k(x) = 1/2 ||x - c_k||^2 with c_k = +-c; the best fixed point is 0
        let n = 2;
        let c = [0.5, -0.25];
        let k_max = 20_000;
        let funcs: Vec<Arc<dyn AnalyticFunction>> = (0..2)
            .map(|i| {
                let sign = if i == 0 { 1.0 } else { -1.0 };
                let q: Vec<f64> = c.iter().map(|v| -sign * v).collect();
                let r = 0.5 * (c[0] * c[0] + c[1] * c[1]);
                Arc::new(Quadratic::new(Matrix::identity(n), q, r).unwrap()) as Arc<dyn AnalyticFunction>
            })
            .collect();
        let mut oracles: Vec<NoisyOracle> = (0..=k_max).map(|k| NoisyOracle::exact(funcs[k % 2].clone())).collect();
        let s = make_schedule(Regime::OnlineQuadratic, 1.0, 1.0, n, 0.5, k_max).unwrap();
        let set = FeasibleSet::centered_ball(n, 2.0).unwrap();
        let t = run_online_izo(&mut oracles, &set, &s, &[1.0, 1.0], k_max, &mut RandomSource::new(9)).unwrap();
        let best = 0.5 * (c[0] * c[0] + c[1] * c[1]);
        let mut cum = 0.0;
        let mut pts = Vec::new();
        for (i, loss) in t.losses.iter().enumerate() {
            cum += loss - best;
            let k = i + 1;
            if [200, 2000, 20_000].contains(&k) {
                pts.push(((k as f64).ln(), (cum / k as f64).max(1e-300).ln()));
            }
        }
        let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
        assert!(slope < -0.6, "average regret slope {slope}");
    }
}
