use std::sync::Arc;

use izo_core::complex::norm2;
use izo_core::oracle::{PdeVelocityNorm, HIMMELBLAU_MINIMIZERS};
use izo_core::{
    make_schedule, run_izo_baseline, run_izo_with, sample_unit_sphere, tail_average, uniform_average, AnalyticFunction,
    NoisyOracle, Regime, RunOptions, Schedule, Trace,
};
use serde_json::{json, Value};

use super::{
    f_star, log_plan, noise_model, parallel, positive, regime, seed_of, stream, DIRECTION_STREAM, INIT_STREAM,
    NOISE_STREAM,
};
use crate::config::{preamble, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::functions::{build_function, gradient_bound};
use crate::output::{loglog_slope, quantile, CsvRecord, Report};

/// A finished run: its CSV rows and its summary entry.
struct RunOutput {
    records: Vec<CsvRecord>,
    summary: Value,
}

fn records(run_id: &str, trace: &Trace, fs: Option<f64>) -> Vec<CsvRecord> {
    trace.records.iter().map(|r| CsvRecord::from_trace(run_id, r, fs)).collect()
}

fn gap(f: &Arc<dyn AnalyticFunction>, x: &[f64], fs: Option<f64>) -> CliResult<Option<f64>> {
    let v = f.value(x)?;
    Ok(fs.map(|s| v - s))
}

fn assemble(
    command: &str,
    c: &ExperimentConfig,
    extra: &[(String, String)],
    runs: Vec<RunOutput>,
    mut summary: Value,
) -> CliResult<Report> {
    let rows: Vec<CsvRecord> = runs.iter().flat_map(|r| r.records.iter().cloned()).collect();
    summary["command"] = json!(command);
    summary["config"] = serde_json::to_value(c).expect("config serializes");
    summary["runs"] = Value::Array(runs.into_iter().map(|r| r.summary).collect());
    Report::from_rows(preamble(command, c, extra), &rows, summary)
}

fn f_star_line(fs: Option<f64>) -> Vec<(String, String)> {
    fs.map(|v| vec![("f_star".to_string(), format!("{v:e}"))]).unwrap_or_default()
}

/// Quantiles of `f(xbar_k) - f*` across runs at each of the given `k`.
fn averaged_quantiles(runs: &[&RunOutput], ks: &[usize], fs: f64) -> Value {
    let mut out = Vec::new();
    for &k in ks {
        let gaps: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.records.iter().find(|rec| rec.k == k))
            .map(|rec| rec.f_uniform_avg - fs)
            .collect();
        out.push(json!({
            "k": k,
            "q25": quantile(&gaps, 0.25),
            "median": quantile(&gaps, 0.5),
            "q75": quantile(&gaps, 0.75),
        }));
    }
    Value::Array(out)
}

fn decades_upto(k_total: usize, from: usize) -> Vec<usize> {
    std::iter::successors(Some(from), |d| d.checked_mul(10)).take_while(|&d| d <= k_total).collect()
}

/// Complex-step descent on `half_sq_norm` over a ball with two smoothing
/// levels (`delta` and `param.delta_tiny`) against the real two-point
/// baseline. Medians of the averaged-iterate gap are reported per decade.
pub fn sc_quadratic(c: &ExperimentConfig) -> CliResult<Report> {
    let f = build_function(c)?;
    let n = f.dim();
    let set = c.feasible_set(n)?;
    let (k_total, repeats, delta) = positive(c)?;
    let tau = c
        .param("tau")
        .or(f.metadata().tau)
        .ok_or_else(|| CliError::Config("sc-quadratic needs tau (param.tau)".into()))?;
    let fs = f_star(&f).ok_or_else(|| CliError::Config("sc-quadratic needs a known optimum".into()))?;
    let tiny = c.param_or("delta_tiny", 1e-100);
    let init_radius = c.param_or("init_radius", 1.0);
    let arms: [(&str, Option<f64>); 3] = [("cs", Some(delta)), ("cs_tiny", Some(tiny)), ("beta", None)];
    let schedules: Vec<Option<Schedule>> = arms
        .iter()
        .map(|(_, d)| d.map(|d| make_schedule(Regime::QuadConstrained, tau, 0.0, n, d, k_total)).transpose())
        .collect::<Result<_, _>>()?;
    let noise = noise_model(c)?;
    let plan = log_plan(c, k_total, &[]);

    let runs = parallel(repeats * arms.len(), |job| {
        let (r, a) = (job / arms.len(), job % arms.len());
        let seed = seed_of(c, r);
        let u = sample_unit_sphere(n, &mut stream(seed, INIT_STREAM))?;
        let x1 = set.project(&u.iter().map(|v| v * init_radius).collect::<Vec<_>>())?;
        let mut oracle = NoisyOracle::new(f.clone(), noise, stream(seed, NOISE_STREAM));
        let mut rng = stream(seed, DIRECTION_STREAM);
        let options = RunOptions { log: Some(plan.clone()), ..RunOptions::default() };
        let trace = match &schedules[a] {
            Some(s) => run_izo_with(&mut oracle, &set, s, &x1, k_total, &mut rng, options)?,
            None => run_izo_baseline(&mut oracle, &set, tau, &x1, k_total, &mut rng, options)?,
        };
        let run_id = format!("{}:{seed}", arms[a].0);
        let avg = uniform_average(&trace)?;
        Ok(RunOutput {
            records: records(&run_id, &trace, Some(fs)),
            summary: json!({
                "run_id": run_id,
                "arm": arms[a].0,
                "seed": seed,
                "K": k_total,
                "queries": trace.queries,
                "final_avg_subopt": f.value(&avg)? - fs,
                "final_last_subopt": f.value(&trace.last)? - fs,
            }),
        })
    })?;

    let ks = decades_upto(k_total, 100);
    let mut per_arm = serde_json::Map::new();
    for (a, (name, _)) in arms.iter().enumerate() {
        let mine: Vec<&RunOutput> = runs.iter().skip(a).step_by(arms.len()).collect();
        let q = averaged_quantiles(&mine, &ks, fs);
        let medians: Vec<f64> =
            q.as_array().unwrap().iter().map(|v| v["median"].as_f64().unwrap_or(f64::NAN)).collect();
        let slope = (ks.len() >= 2).then(|| loglog_slope(&ks.iter().map(|&k| k as f64).collect::<Vec<_>>(), &medians));
        per_arm.insert(name.to_string(), json!({ "quantiles": q, "slope": slope }));
    }
    let median_at_k = |arm: &str| -> Option<f64> { per_arm[arm]["quantiles"].as_array()?.last()?["median"].as_f64() };
    let ratio = match (median_at_k("beta"), median_at_k("cs")) {
        (Some(b), Some(s)) if s > 0.0 => Some(b / s),
        _ => None,
    };
    let summary = json!({ "arms": per_arm, "beta_over_cs_median_at_K": ratio, "f_star": fs });
    assemble("sc-quadratic", c, &f_star_line(Some(fs)), runs, summary)
}

/// Plain descent with a named schedule on any function; `param.x0` fills
/// the initial point (then projected), `param.tau` and `param.l1` override
/// the function's constants.
pub fn run(c: &ExperimentConfig) -> CliResult<Report> {
    let f = build_function(c)?;
    let n = f.dim();
    let set = c.feasible_set(n)?;
    let regime = regime(c)?;
    let (k_total, repeats, delta) = positive(c)?;
    let tau = c.param("tau").or(f.metadata().tau).unwrap_or(0.0);
    let l1 = gradient_bound(c, &f)?.unwrap_or(0.0);
    let schedule = make_schedule(regime, tau, l1, n, delta, k_total)?;
    let k0 = schedule.k0;
    let x1 = set.project(&vec![c.param_or("x0", 0.0); n])?;
    let fs = f_star(&f);
    let noise = noise_model(c)?;
    let plan = log_plan(c, k_total, &[k0]);

    let runs = parallel(repeats, |r| {
        let seed = seed_of(c, r);
        let mut oracle = NoisyOracle::new(f.clone(), noise, stream(seed, NOISE_STREAM));
        let mut rng = stream(seed, DIRECTION_STREAM);
        let options = RunOptions {
            log: Some(plan.clone()),
            tail_start: (k0 > 0).then_some(k0),
            track_grad: true,
            ..RunOptions::default()
        };
        let trace = run_izo_with(&mut oracle, &set, &schedule, &x1, k_total, &mut rng, options)?;
        let run_id = format!("{}:{seed}", regime.as_str());
        let avg = uniform_average(&trace)?;
        let tail = if k0 > 0 && k_total > k0 { Some(tail_average(&trace, k0)?) } else { None };
        let at_k0 = trace.records.iter().find(|rec| rec.k == k0).map(|rec| rec.f_value);
        Ok(RunOutput {
            records: records(&run_id, &trace, fs),
            summary: json!({
                "run_id": run_id,
                "seed": seed,
                "K": k_total,
                "K0": k0,
                "queries": trace.queries,
                "final_point": trace.last,
                "last_subopt": gap(&f, &trace.last, fs)?,
                "avg_subopt": gap(&f, &avg, fs)?,
                "tail_subopt": tail.map(|t| gap(&f, &t, fs)).transpose()?.flatten(),
                "subopt_at_K0": at_k0.and_then(|v| fs.map(|s| v - s)),
                "min_grad_norm_sq": trace.min_grad_norm_sq,
            }),
        })
    })?;
    let summary = json!({
        "regime": regime.as_str(),
        "tau": tau,
        "L1": l1,
        "K0": k0,
        "f_star": fs,
        "minimizer": f.metadata().minimizer,
    });
    assemble("run", c, &f_star_line(fs), runs, summary)
}

/// Descent from `repeats` starting points evenly spaced on the circle of
/// radius `param.init_radius`, with the noise-adapted nonconvex schedule and
/// (when `param.compare` is nonzero) the fast-decay comparison arm.
pub fn nonconvex(c: &ExperimentConfig) -> CliResult<Report> {
    let f = build_function(c)?;
    let n = f.dim();
    if n != 2 {
        return Err(CliError::Config(format!("nonconvex places starting points on a circle and needs n=2, got {n}")));
    }
    let set = c.feasible_set(n)?;
    let (k_total, inits, delta) = positive(c)?;
    let l1 = gradient_bound(c, &f)?.ok_or_else(|| CliError::Config("nonconvex needs L1 (param.l1)".into()))?;
    let mut arms = vec![("adapted", Regime::Nonconvex)];
    if c.param_or("compare", 1.0) != 0.0 {
        arms.push(("fast_decay", Regime::NonconvexFastDecay));
    }
    let schedules: Vec<Schedule> =
        arms.iter().map(|(_, reg)| make_schedule(*reg, 0.0, l1, n, delta, k_total)).collect::<Result<_, _>>()?;
    let radius = c.param_or("init_radius", 4.5);
    let fs = f_star(&f);
    let noise = noise_model(c)?;
    let plan = log_plan(c, k_total, &[]);
    let is_himmelblau = f.name() == "himmelblau";

    let runs = parallel(inits * arms.len(), |job| {
        let (i, a) = (job / arms.len(), job % arms.len());
        let seed = seed_of(c, i);
        let angle = 2.0 * std::f64::consts::PI * i as f64 / inits as f64;
        let x1 = set.project(&[radius * angle.cos(), radius * angle.sin()])?;
        let mut oracle = NoisyOracle::new(f.clone(), noise, stream(seed, NOISE_STREAM));
        let mut rng = stream(seed, DIRECTION_STREAM);
        let options = RunOptions { log: Some(plan.clone()), track_grad: true, ..RunOptions::default() };
        let trace = run_izo_with(&mut oracle, &set, &schedules[a], &x1, k_total, &mut rng, options)?;
        let run_id = format!("{}:{i}", arms[a].0);
        let nearest = is_himmelblau.then(|| {
            HIMMELBLAU_MINIMIZERS
                .iter()
                .map(|m| (m, norm2(&[trace.last[0] - m[0], trace.last[1] - m[1]])))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(m, d)| json!({ "minimizer": m, "distance": d }))
        });
        Ok(RunOutput {
            records: records(&run_id, &trace, fs),
            summary: json!({
                "run_id": run_id,
                "arm": arms[a].0,
                "init": i,
                "seed": seed,
                "x1": x1,
                "queries": trace.queries,
                "final_point": trace.last,
                "last_subopt": gap(&f, &trace.last, fs)?,
                "avg_subopt": gap(&f, &uniform_average(&trace)?, fs)?,
                "min_grad_norm_sq": trace.min_grad_norm_sq,
                "nearest": nearest.flatten(),
            }),
        })
    })?;
    let summary = json!({ "L1": l1, "f_star": fs });
    assemble("nonconvex", c, &f_star_line(fs), runs, summary)
}

/// Radii at which the flow potential is checked before a run.
pub const PDE_CHECK_RADII: [f64; 3] = [1.0, 1.5, 2.0];

/// Tolerance on the potential's divergence, curl and slip residuals.
pub const PDE_TOLERANCE: f64 = 1e-8;

/// Scalar descent on the disk radius for the velocity-norm objective, from
/// `repeats` starting radii spread over `[param.r_lo, param.r_hi]` and
/// projected onto the feasible interval.
pub fn pde(c: &ExperimentConfig) -> CliResult<Report> {
    let speed = c.param_or("speed", 1.0);
    let flow = PdeVelocityNorm::new(speed)?;
    let residuals: Vec<f64> = PDE_CHECK_RADII.iter().map(|&r| flow.validate(r).max()).collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if !(worst < PDE_TOLERANCE) {
        return Err(CliError::Numerical(format!("flow potential failed validation: residual {worst:e}")));
    }
    let f = build_function(c)?;
    if f.dim() != 1 {
        return Err(CliError::Config("pde works on the scalar radius".into()));
    }
    let set = c.feasible_set(1)?;
    let regime = regime(c)?;
    let (k_total, inits, delta) = positive(c)?;
    let l1 = gradient_bound(c, &f)?.unwrap_or(0.0);
    let tau = c.param("tau").or(f.metadata().tau).unwrap_or(0.0);
    let schedule = make_schedule(regime, tau, l1, 1, delta, k_total)?;
    let (lo, hi) = (c.param_or("r_lo", 1.0), c.param_or("r_hi", 8.0));
    let fs = f_star(&f);
    let noise = noise_model(c)?;
    let plan = log_plan(c, k_total, &[]);

    let runs = parallel(inits, |i| {
        let seed = seed_of(c, i);
        let r0 = if inits == 1 { lo } else { lo + (hi - lo) * i as f64 / (inits - 1) as f64 };
        let x1 = set.project(&[r0])?;
        let mut oracle = NoisyOracle::new(f.clone(), noise, stream(seed, NOISE_STREAM));
        let mut rng = stream(seed, DIRECTION_STREAM);
        let options = RunOptions { log: Some(plan.clone()), ..RunOptions::default() };
        let trace = run_izo_with(&mut oracle, &set, &schedule, &x1, k_total, &mut rng, options)?;
        let run_id = format!("r0={r0}");
        Ok(RunOutput {
            records: records(&run_id, &trace, fs),
            summary: json!({
                "run_id": run_id,
                "seed": seed,
                "r0": r0,
                "r1": x1[0],
                "r_last": trace.last[0],
                "r_avg": uniform_average(&trace)?[0],
                "queries": trace.queries,
                "last_subopt": gap(&f, &trace.last, fs)?,
            }),
        })
    })?;
    let spread = |key: &str| {
        let v: Vec<f64> = runs.iter().filter_map(|r| r.summary[key].as_f64()).collect();
        v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - v.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let summary = json!({
        "validation": {
            "radii": PDE_CHECK_RADII,
            "max_residual": residuals,
        },
        "r_last_spread": spread("r_last"),
        "r_avg_spread": spread("r_avg"),
        "regime": regime.as_str(),
        "L1": l1,
    });
    let mut extra = f_star_line(fs);
    extra.push(("potential_residual".into(), format!("{worst:e}")));
    assemble("pde", c, &extra, runs, summary)
}
