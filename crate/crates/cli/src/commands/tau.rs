use std::sync::Arc;

use izo_core::tau::min_data_points;
use izo_core::{
    estimate_tau, make_schedule, sample_unit_ball, AnalyticFunction, FeasibleSet, NoisyOracle, Regime, RunOptions,
    Runner, Schedule, TauEstimate, Trace,
};
use serde_json::{json, Value};

use super::{
    f_star, log_plan, noise_model, parallel, positive, seed_of, stream, DIRECTION_STREAM, INIT_STREAM, NOISE_STREAM,
};
use crate::config::{preamble, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::functions::build_function;
use crate::output::{CsvRecord, Report};

/// Shared knobs of the two estimation commands.
struct Setup {
    k_total: usize,
    delta: f64,
    tau0: f64,
    switch: usize,
    pursuit: usize,
    threshold: f64,
    sigma_xi: f64,
}

impl Setup {
    fn new(c: &ExperimentConfig, n: usize) -> CliResult<Self> {
        let (k_total, _, delta) = positive(c)?;
        let tau0 = c.param("tau0").unwrap_or(c.param_or("lambda", 1e-4));
        let switch = c.param_usize("switch", min_data_points(n))?;
        if switch == 0 || switch >= k_total {
            return Err(CliError::Config(format!("need 0 < switch < K, got switch={switch} K={k_total}")));
        }
        Ok(Self {
            k_total,
            delta,
            tau0,
            switch,
            pursuit: c.param_usize("pursuit", n)?.max(1),
            threshold: c.param_or("threshold", 1e-6),
            sigma_xi: c.sigma_xi.unwrap_or(0.0),
        })
    }

    fn schedule(&self, n: usize) -> CliResult<Schedule> {
        Ok(make_schedule(Regime::QuadConstrained, self.tau0, 0.0, n, self.delta, self.k_total)?)
    }
}

/// First iteration index whose iterate is within `threshold` of `f*`.
struct HitTracker<'a> {
    f: &'a Arc<dyn AnalyticFunction>,
    fs: f64,
    threshold: f64,
    hit: Option<usize>,
}

impl HitTracker<'_> {
    fn check(&mut self, k: usize, x: &[f64]) -> CliResult<()> {
        if self.hit.is_none() && self.f.value(x)? - self.fs <= self.threshold {
            self.hit = Some(k);
        }
        Ok(())
    }

    fn drive(&mut self, runner: &mut Runner<'_>, schedule: &Schedule, until: usize) -> CliResult<()> {
        while runner.steps() < until {
            let k = runner.steps() + 1;
            runner.step(schedule.mu(k), schedule.delta(k))?;
            self.check(k + 1, runner.current())?;
        }
        Ok(())
    }
}

struct Outcome {
    trace: Trace,
    hit: Option<usize>,
    estimate: Option<TauEstimate>,
}

/// One run from `x1`. With `estimate` set the first `switch` iterations
/// double as data for the modulus estimate, after which the stepsize uses
/// `tau_hat`; otherwise `tau0` is used throughout.
#[allow(clippy::too_many_arguments)]
fn descend(
    f: &Arc<dyn AnalyticFunction>,
    set: &FeasibleSet,
    c: &ExperimentConfig,
    s: &Setup,
    x1: &[f64],
    seed: u64,
    estimate: bool,
) -> CliResult<Outcome> {
    let n = f.dim();
    let fs = f_star(f).ok_or_else(|| CliError::Config("estimation demos need a known optimum".into()))?;
    let base = s.schedule(n)?;
    let mut oracle = NoisyOracle::new(f.clone(), noise_model(c)?, stream(seed, NOISE_STREAM));
    let mut rng = stream(seed, DIRECTION_STREAM);
    let options = RunOptions {
        log: Some(log_plan(c, s.k_total, &[s.switch])),
        collect_data: if estimate { s.switch } else { 0 },
        ..RunOptions::default()
    };
    let mut runner = Runner::new(&mut oracle, set, x1, &mut rng, options)?;
    let mut tracker = HitTracker { f, fs, threshold: s.threshold, hit: None };
    tracker.check(1, x1)?;
    if !estimate {
        tracker.drive(&mut runner, &base, s.k_total)?;
        return Ok(Outcome { trace: runner.finish(), hit: tracker.hit, estimate: None });
    }
    tracker.drive(&mut runner, &base, s.switch)?;
    let est = estimate_tau(&runner.trace().data, s.tau0, s.pursuit, s.sigma_xi)?;
    let tuned = base.with_tau(est.tau_hat)?;
    tracker.drive(&mut runner, &tuned, s.k_total)?;
    Ok(Outcome { trace: runner.finish(), hit: tracker.hit, estimate: Some(est) })
}

fn rows(run_id: &str, o: &Outcome, fs: Option<f64>) -> Vec<CsvRecord> {
    o.trace.records.iter().map(|r| CsvRecord::from_trace(run_id, r, fs)).collect()
}

/// Objectives are nonincreasing up to LP round-off.
pub fn nonincreasing(objectives: &[f64]) -> bool {
    objectives.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0))
}

/// First pursuit iteration (1-based) after which every estimate stays within
/// `rel` of the final one.
pub fn settle_index(taus: &[f64], rel: f64) -> Option<usize> {
    let last = *taus.last()?;
    let mut first = taus.len();
    for (z, t) in taus.iter().enumerate().rev() {
        if (t - last).abs() <= rel * last.abs() {
            first = z;
        } else {
            break;
        }
    }
    Some(first + 1)
}

fn estimate_json(est: &TauEstimate, tau0: f64) -> Value {
    json!({
        "tau_hat": est.tau_hat,
        "taus": est.taus,
        "objectives": est.objectives,
        "objective_nonincreasing": nonincreasing(&est.objectives),
        "certificate": est.certificate_holds(tau0, 1e-9),
        "settle_z_20pct": settle_index(&est.taus, 0.2),
    })
}

/// Per seed, a fresh least-squares instance run twice from the origin: with
/// `tau0` throughout, and with `tau_hat` estimated from the first
/// `param.switch` iterations. Reports the first iteration at which each
/// run's iterate is within `param.threshold` of the optimum.
pub fn tau_demo(c: &ExperimentConfig) -> CliResult<Report> {
    let repeats = positive(c)?.1;
    let fixed_instance = c.param("data_seed").is_some();
    let instance = |r: usize| -> CliResult<(ExperimentConfig, Arc<dyn AnalyticFunction>)> {
        let mut cr = c.clone();
        if !fixed_instance {
            cr.params.insert("data_seed".into(), seed_of(c, r) as f64);
        }
        let f = build_function(&cr)?;
        Ok((cr, f))
    };
    let (_, f0) = instance(0)?;
    let n = f0.dim();
    let setup = Setup::new(c, n)?;
    let set = c.feasible_set(n)?;
    let x1 = set.project(&vec![c.param_or("x0", 0.0); n])?;

    let jobs = parallel(2 * repeats, |job| {
        let (r, with_estimate) = (job / 2, job % 2 == 1);
        let seed = seed_of(c, r);
        let (_, f) = instance(r)?;
        let fs = f_star(&f);
        let o = descend(&f, &set, c, &setup, &x1, seed, with_estimate)?;
        let run_id = format!("{}:{seed}", if with_estimate { "tauhat" } else { "tau0" });
        let mut summary = json!({
            "run_id": run_id,
            "seed": seed,
            "queries": o.trace.queries,
            "hit": o.hit,
            "final_last_subopt": fs.map(|s| f.value(&o.trace.last).map(|v| v - s)).transpose()?,
            "tau_true": f.metadata().tau,
        });
        if let Some(est) = &o.estimate {
            summary["estimate"] = estimate_json(est, setup.tau0);
        }
        Ok((rows(&run_id, &o, fs), summary, o.hit))
    })?;

    let mut per_seed = Vec::new();
    for pair in jobs.chunks(2) {
        let (plain, tuned) = (&pair[0], &pair[1]);
        let faster = match (plain.2, tuned.2) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(a), Some(b)) => b < a,
        };
        let tau_true = tuned.1["tau_true"].as_f64();
        let tau_hat = tuned.1["estimate"]["tau_hat"].as_f64();
        per_seed.push(json!({
            "seed": tuned.1["seed"],
            "tau_hat": tau_hat,
            "tau_true": tau_true,
            "hit_tau0": plain.2,
            "hit_tauhat": tuned.2,
            "tauhat_faster": faster,
        }));
    }
    let faster = per_seed.iter().filter(|s| s["tauhat_faster"].as_bool() == Some(true)).count();
    let rows: Vec<CsvRecord> = jobs.iter().flat_map(|j| j.0.iter().cloned()).collect();
    let summary = json!({
        "command": "tau-demo",
        "config": serde_json::to_value(c).expect("config serializes"),
        "tau0": setup.tau0,
        "switch": setup.switch,
        "pursuit": setup.pursuit,
        "threshold": setup.threshold,
        "tauhat_faster_fraction": faster as f64 / per_seed.len() as f64,
        "seeds": per_seed,
        "runs": jobs.into_iter().map(|j| j.1).collect::<Vec<_>>(),
    });
    let extra = [("tau0".to_string(), format!("{:e}", setup.tau0)), ("switch".to_string(), setup.switch.to_string())];
    Report::from_rows(preamble("tau-demo", c, &extra), &rows, summary)
}

/// One fixed least-squares instance (`param.data_seed`, default the seed)
/// descended from `repeats` random starting points in the ball of radius
/// `param.init_radius`, each switching to its own `tau_hat` estimate.
pub fn ddp_demo(c: &ExperimentConfig) -> CliResult<Report> {
    let inits = positive(c)?.1;
    let f = build_function(c)?;
    let n = f.dim();
    let setup = Setup::new(c, n)?;
    let set = c.feasible_set(n)?;
    let radius = c.param_or("init_radius", 5.0);
    let fs = f_star(&f);

    let jobs = parallel(inits, |i| {
        let seed = seed_of(c, i);
        let b = sample_unit_ball(n, &mut stream(seed, INIT_STREAM))?;
        let x1 = set.project(&b.iter().map(|v| v * radius).collect::<Vec<_>>())?;
        let o = descend(&f, &set, c, &setup, &x1, seed, true)?;
        let run_id = format!("init:{i}");
        let est = o.estimate.as_ref().expect("estimate requested");
        let summary = json!({
            "run_id": run_id,
            "seed": seed,
            "queries": o.trace.queries,
            "hit": o.hit,
            "final_last_subopt": fs.map(|s| f.value(&o.trace.last).map(|v| v - s)).transpose()?,
            "estimate": estimate_json(est, setup.tau0),
        });
        Ok((rows(&run_id, &o, fs), summary))
    })?;
    let all_monotone = jobs.iter().all(|j| j.1["estimate"]["objective_nonincreasing"].as_bool() == Some(true));
    let all_certified = jobs.iter().all(|j| j.1["estimate"]["certificate"].as_bool() == Some(true));
    let half = (n / 2).max(1);
    let settled =
        jobs.iter().filter(|j| j.1["estimate"]["settle_z_20pct"].as_u64().is_some_and(|z| z as usize <= half)).count();
    let rows: Vec<CsvRecord> = jobs.iter().flat_map(|j| j.0.iter().cloned()).collect();
    let summary = json!({
        "command": "ddp-demo",
        "config": serde_json::to_value(c).expect("config serializes"),
        "tau0": setup.tau0,
        "tau_true": f.metadata().tau,
        "pursuit": setup.pursuit,
        "all_objectives_nonincreasing": all_monotone,
        "all_certificates_hold": all_certified,
        "settled_by_half_fraction": settled as f64 / jobs.len() as f64,
        "runs": jobs.into_iter().map(|j| j.1).collect::<Vec<_>>(),
    });
    let extra = [("tau0".to_string(), format!("{:e}", setup.tau0))];
    Report::from_rows(preamble("ddp-demo", c, &extra), &rows, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settle_and_monotone() {
        assert_eq!(settle_index(&[5.0, 3.0, 2.1, 2.0], 0.2), Some(3));
        assert_eq!(settle_index(&[2.0], 0.2), Some(1));
        assert_eq!(settle_index(&[], 0.2), None);
        assert!(nonincreasing(&[3.0, 2.0, 2.0 + 1e-12]));
        assert!(!nonincreasing(&[3.0, 3.1]));
    }
}
