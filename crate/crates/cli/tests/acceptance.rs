//! Acceptance checks. Prints one PASS/FAIL line per criterion with the
//! measured quantities and the wall time. Outcomes are reported, not
//! asserted: a criterion that is not met shows up as FAIL here.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use izo_cli::functions::{build_function, gradient_bound};
use izo_cli::output::{loglog_slope, median};
use izo_cli::{read_records, Command, ExperimentConfig, Report};
use izo_core::complex::{dot, norm2};
use izo_core::oracle::{HalfSqNorm, PdeVelocityNorm};
use izo_core::{
    cs_gradient_sample, min_eigenvalue, sample_unit_sphere, AnalyticFunction, Matrix, NoiseModel, NoisyOracle,
    RandomSource,
};
use serde_json::Value;

type Check = Result<(bool, String), String>;

struct Harness {
    passed: usize,
    total: usize,
    /// Reports kept for the determinism rerun, keyed by label.
    reports: BTreeMap<String, (Command, ExperimentConfig, String)>,
}

impl Harness {
    fn record(&mut self, id: u32, limit: Option<Duration>, elapsed: Duration, outcome: Check) {
        let secs = elapsed.as_secs_f64();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => match limit {
                Some(l) if elapsed > l => (false, format!("{detail}; over the {} s limit", l.as_secs())),
                _ => (ok, detail),
            },
            Err(e) => (false, format!("error: {e}")),
        };
        self.total += 1;
        self.passed += ok as usize;
        println!("criterion {id:>2}: {}  {detail} ({secs:.2} s)", if ok { "PASS" } else { "FAIL" });
    }

    fn execute(&mut self, label: &str, command: Command, config: ExperimentConfig) -> Result<Report, String> {
        let report = command.execute(&config).map_err(|e| e.to_string())?;
        self.reports.insert(label.to_string(), (command, config, report.csv.clone()));
        Ok(report)
    }
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_kv_text(text).expect("acceptance configuration parses")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn num(v: &Value, path: &[&str]) -> Result<f64, String> {
    let mut cur = v;
    for key in path {
        cur = &cur[*key];
    }
    cur.as_f64().ok_or_else(|| format!("summary field {} missing", path.join(".")))
}

fn estimator_stability(h: &mut Harness) -> Check {
    let report = h.execute("estimator-sweep", Command::EstimatorSweep, config("seed=1"))?;
    let s = &report.summary;
    let (cs, fd, cd) = (num(s, &["min_cs_err"])?, num(s, &["min_fd_err"])?, num(s, &["min_cd_err"])?);
    let cs_small = num(s, &["max_cs_err_delta_le_1e-8"])?;
    let ok = cs <= 1e-15 && fd >= 1e-9 && cd >= 1e-11 && cs_small <= 1e-13;
    Ok((ok, format!("min cs {cs:.2e}, min fd {fd:.3e}, min cd {cd:.3e}, max cs for delta<=1e-8 {cs_small:.2e}")))
}

fn sphere_identity() -> Check {
    let m = 1_000_000;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for n in [2usize, 5, 20] {
        let mut rng = RandomSource::new(7 + n as u64);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).sqrt()).collect();
        let mut acc = vec![0.0; n];
        for _ in 0..m {
            let u = sample_unit_sphere(n, &mut rng).map_err(|e| e.to_string())?;
            let c = dot(&x, &u);
            acc.iter_mut().zip(&u).for_each(|(a, ui)| *a += c * ui);
        }
        let diff: Vec<f64> = acc.iter().zip(&x).map(|(a, xi)| n as f64 * a / m as f64 - xi).collect();
        let ratio = norm2(&diff) / (5.0 * norm2(&x) * (n as f64 / m as f64).sqrt());
        worst = worst.max(ratio);
        ok &= ratio <= 1.0;
    }
    Ok((ok, format!("worst error / bound = {worst:.3}")))
}

fn quadratic_moments() -> Check {
    let (n, delta, sigma, m) = (8usize, 0.3, 1e-6, 1_000_000usize);
    let f: Arc<dyn AnalyticFunction> = Arc::new(HalfSqNorm::new(n).map_err(|e| e.to_string())?);
    let noise = NoiseModel::gaussian(sigma).map_err(|e| e.to_string())?;
    let mut oracle = NoisyOracle::new(f, noise, RandomSource::with_stream(3, 2));
    let mut rng = RandomSource::with_stream(3, 1);
    let x: Vec<f64> = (0..n).map(|i| 0.5 - 0.1 * i as f64).collect();
    let (mut s1, mut s2, mut q) = (vec![0.0; n], vec![0.0; n], 0.0);
    for _ in 0..m {
        let g = cs_gradient_sample(&mut oracle, &x, delta, &mut rng).map_err(|e| e.to_string())?.g;
        for i in 0..n {
            s1[i] += g[i];
            s2[i] += g[i] * g[i];
        }
        q += dot(&g, &g);
    }
    let mf = m as f64;
    let mut mean_ok = true;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mean = s1[i] / mf;
        let sd = (s2[i] / mf - mean * mean).max(0.0).sqrt();
        let ratio = (mean - x[i]).abs() / (5.0 * sd / mf.sqrt());
        worst = worst.max(ratio);
        mean_ok &= ratio <= 1.0;
    }
    let predicted = n as f64 * dot(&x, &x) + (n * n) as f64 * sigma / (delta * delta);
    let rel = (q / mf - predicted).abs() / predicted;
    Ok((
        mean_ok && rel <= 0.05,
        format!("worst mean error / (5 sd/sqrt M) = {worst:.3}, second moment off by {:.3}%", 100.0 * rel),
    ))
}

fn quadratic_rate(h: &mut Harness) -> (Check, Check) {
    let report = match h.execute("sc-quadratic", Command::ScQuadratic, config("seed=1")) {
        Ok(r) => r,
        Err(e) => return (Err(e.clone()), Err(e)),
    };
    let s = &report.summary;
    let rate = (|| {
        let slope = num(s, &["arms", "cs", "slope"])?;
        Ok(((-1.15..=-0.80).contains(&slope), format!("median slope {slope:.3}, target [-1.15, -0.80]")))
    })();
    let gap = (|| {
        let ratio = num(s, &["beta_over_cs_median_at_K"])?;
        Ok((ratio >= 1e3, format!("baseline / complex-step median at K=1e5 = {ratio:.3e}, target >= 1e3")))
    })();
    (rate, gap)
}

/// Median over runs of `f_uniform_avg - f*` at each decade from 1e2 to `k`.
fn median_decay(csv: &str, f_star: f64, k: usize) -> Result<(Vec<f64>, Vec<f64>), String> {
    let rows = read_records(csv).map_err(|e| e.to_string())?;
    let (mut ks, mut meds) = (Vec::new(), Vec::new());
    let mut d = 100;
    while d <= k {
        let gaps: Vec<f64> = rows.iter().filter(|r| r.k == d).map(|r| r.f_uniform_avg - f_star).collect();
        if gaps.is_empty() {
            return Err(format!("no rows at k={d}"));
        }
        ks.push(d as f64);
        meds.push(median(&gaps));
        d *= 10;
    }
    Ok((ks, meds))
}

fn general_rate(h: &mut Harness) -> Check {
    let base =
        "seed=1\nfunction=regularized_ls\nn=10\nparam.m=20\nparam.lambda=0.1\nparam.quartic=0.01\nparam.data_seed=7\n\
                schedule=sc_constrained\ndelta=3e-5\nsigma_xi=1e-8\nK=100000\nrepeats=25";
    // a ball around the origin that contains the minimizer with room to spare
    let f = build_function(&config(base)).map_err(|e| e.to_string())?;
    let xs = f.metadata().minimizer.clone().ok_or("no minimizer")?;
    let radius = 2.0 * norm2(&xs) + 1.0;
    let c = config(&format!("{base}\nset=ball:{radius:e}"));
    let report = h.execute("run:sc_constrained", Command::Run, c)?;
    let fs = num(&report.summary, &["f_star"])?;
    let (ks, meds) = median_decay(&report.csv, fs, 100_000)?;
    let slope = loglog_slope(&ks, &meds);
    Ok(((-1.05..=-0.55).contains(&slope), format!("median slope {slope:.3}, target [-1.05, -0.55]")))
}

fn warm_up(h: &mut Harness) -> Check {
    let base = "seed=1\nfunction=quadratic\nn=5\nparam.quartic=0.01\nparam.l1_radius=2\nschedule=sc_unconstrained\n\
                delta=0.1\nsigma_xi=1e-8\nset=none\nrepeats=5";
    let probe = config(base);
    let f = build_function(&probe).map_err(|e| e.to_string())?;
    let tau = f.metadata().tau.ok_or("no tau")?;
    let l1 = gradient_bound(&probe, &f).map_err(|e| e.to_string())?.ok_or("no L1")?;
    let k0 = (8.0 * 25.0 * l1 * l1 / (tau * tau)).floor() as usize;
    let mut finite = true;
    for mult in [2, 5] {
        let r = Command::Run.execute(&config(&format!("{base}\nK={}", mult * k0))).map_err(|e| e.to_string())?;
        finite &= r.summary["runs"].as_array().into_iter().flatten().all(|run| {
            run["final_point"].as_array().is_some_and(|p| p.iter().all(|v| v.as_f64().is_some_and(f64::is_finite)))
        });
    }
    let report = h.execute("run:sc_unconstrained", Command::Run, config(&format!("{base}\nK={}", 10 * k0)))?;
    let reported = num(&report.summary, &["K0"])? as usize;
    if reported != k0 {
        return Ok((false, format!("run used K0 = {reported}, floor(8 n^2 L1^2 / tau^2) = {k0}")));
    }
    let runs = report.summary["runs"].as_array().ok_or("no runs")?;
    let mut worst = f64::INFINITY;
    for run in runs {
        let at_k0 = num(run, &["subopt_at_K0"])?;
        let tail = num(run, &["tail_subopt"])?;
        worst = worst.min(at_k0 / tail.max(f64::MIN_POSITIVE));
    }
    let ok = finite && worst >= 10.0;
    Ok((ok, format!("K0 = {k0} (L1 {l1}, tau {tau}), finite iterates at 2K0 and 5K0: {finite}, smallest gain at 10K0 = {worst:.1}x")))
}

/// Exact Hessian of a quadratic from values at 0, e_i and e_i + e_j
/// (the diagonal uses 2 e_i).
fn quadratic_hessian(f: &dyn AnalyticFunction) -> Result<Matrix, String> {
    let n = f.dim();
    let at = |i: Option<usize>, j: Option<usize>| -> Result<f64, String> {
        let mut x = vec![0.0; n];
        for k in [i, j].into_iter().flatten() {
            x[k] += 1.0;
        }
        f.value(&x).map_err(|e| e.to_string())
    };
    let f0 = at(None, None)?;
    let fi: Vec<f64> = (0..n).map(|i| at(Some(i), None)).collect::<Result<_, _>>()?;
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = at(Some(i), Some(j))? - fi[i] - fi[j] + f0;
        }
    }
    h.symmetrize();
    Ok(h)
}

fn tau_estimation(h: &mut Harness) -> Check {
    let report = h.execute("tau-demo", Command::TauDemo, config("seed=1"))?;
    let lambda = 1e-4;
    let seeds = report.summary["seeds"].as_array().ok_or("no seeds")?;
    let mut bracket_ok = true;
    let mut worst_excess = f64::NEG_INFINITY;
    for s in seeds {
        let seed = num(s, &["seed"])?;
        let tau_hat = num(s, &["tau_hat"])?;
        let f = build_function(&config(&format!(
            "seed=1\nfunction=regularized_ls\nn=10\nparam.m=20\nparam.lambda=1e-4\nparam.data_seed={seed}"
        )))
        .map_err(|e| e.to_string())?;
        // the Hessian of the regularized least-squares objective is A^T A + lambda I
        let lam_min = min_eigenvalue(&quadratic_hessian(f.as_ref())?).map_err(|e| e.to_string())?;
        worst_excess = worst_excess.max(tau_hat - lam_min);
        bracket_ok &= tau_hat >= lambda && tau_hat <= lam_min + 1e-3;
    }
    let fraction = num(&report.summary, &["tauhat_faster_fraction"])?;
    let ok = bracket_ok && fraction >= 0.8;
    Ok((ok, format!("tau_hat bracketed for all {} seeds: {bracket_ok} (max tau_hat - lambda_min {worst_excess:.1e}), estimated schedule faster in {:.0}% of seeds", seeds.len(), 100.0 * fraction)))
}

fn basis_pursuit(h: &mut Harness) -> Check {
    let report = h.execute("ddp-demo", Command::DdpDemo, config("seed=1"))?;
    let s = &report.summary;
    let runs = s["runs"].as_array().map_or(0, Vec::len);
    let monotone = s["all_objectives_nonincreasing"].as_bool() == Some(true);
    let certified = s["all_certificates_hold"].as_bool() == Some(true);
    Ok((
        runs == 100 && monotone && certified,
        format!("{runs} runs, objectives nonincreasing: {monotone}, dd certificates hold: {certified}"),
    ))
}

fn nonconvex(h: &mut Harness) -> Check {
    let report = h.execute("nonconvex", Command::Nonconvex, config("seed=1"))?;
    let runs: Vec<&Value> =
        report.summary["runs"].as_array().ok_or("no runs")?.iter().filter(|r| r["arm"] == "adapted").collect();
    let mut below = 0;
    let mut values = Vec::new();
    let mut finite = true;
    for r in &runs {
        let g = num(r, &["min_grad_norm_sq"])?;
        values.push(format!("{g:.1e}"));
        below += (g < 1e-2) as usize;
        finite &= r["final_point"].as_array().is_some_and(|p| p.iter().all(|v| v.as_f64().is_some_and(f64::is_finite)));
    }
    let ok = finite && below >= 6 && runs.len() == 8;
    Ok((ok, format!("{below}/{} inits with min |grad|^2 < 1e-2 [{}], finite: {finite}", runs.len(), values.join(", "))))
}

fn pde(h: &mut Harness) -> Check {
    let flow = PdeVelocityNorm::new(1.0).map_err(|e| e.to_string())?;
    let residual = [1.0, 1.25, 1.5, 1.75, 2.0].iter().map(|&r| flow.validate(r).max()).fold(0.0, f64::max);
    let report = h.execute("pde", Command::Pde, config("seed=1"))?;
    let spread = num(&report.summary, &["r_last_spread"])?;
    let runs = report.summary["runs"].as_array().map_or(0, Vec::len);
    let ok = residual < 1e-8 && spread <= 1e-2 && runs == 8;
    Ok((
        ok,
        format!(
            "max div/curl/slip residual {residual:.1e}, spread of r_K over {runs} runs {spread:.3e}, target <= 1e-2"
        ),
    ))
}

fn determinism(h: &mut Harness) -> Check {
    let mut differing = Vec::new();
    for (label, (command, config, csv)) in &h.reports {
        let again = command.execute(config).map_err(|e| e.to_string())?;
        if &again.csv != csv {
            differing.push(label.clone());
        }
    }
    let ok = differing.is_empty() && !h.reports.is_empty();
    let detail = if ok {
        format!("{} commands rerun, CSV byte-identical", h.reports.len())
    } else {
        format!("CSV differs on rerun: {}", differing.join(", "))
    };
    Ok((ok, detail))
}

fn main() {
    // `cargo test -- --list` and similar probes expect no work to be done
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut h = Harness { passed: 0, total: 0, reports: BTreeMap::new() };
    let secs = Duration::from_secs;

    let (out, t) = timed(|| estimator_stability(&mut h));
    h.record(1, Some(secs(1)), t, out);
    let (out, t) = timed(sphere_identity);
    h.record(2, Some(secs(10)), t, out);
    let (out, t) = timed(quadratic_moments);
    h.record(3, Some(secs(30)), t, out);
    let ((rate, gap), t) = timed(|| quadratic_rate(&mut h));
    h.record(4, Some(secs(300)), t, rate);
    h.record(5, Some(secs(300)), t, gap);
    let (out, t) = timed(|| general_rate(&mut h));
    h.record(6, Some(secs(120)), t, out);
    let (out, t) = timed(|| warm_up(&mut h));
    h.record(7, Some(secs(120)), t, out);
    let (out, t) = timed(|| tau_estimation(&mut h));
    h.record(8, Some(secs(300)), t, out);
    let (out, t) = timed(|| basis_pursuit(&mut h));
    h.record(9, Some(secs(300)), t, out);
    let (out, t) = timed(|| nonconvex(&mut h));
    h.record(10, Some(secs(120)), t, out);
    let (out, t) = timed(|| pde(&mut h));
    h.record(11, Some(secs(120)), t, out);
    let (out, t) = timed(|| determinism(&mut h));
    h.record(12, None, t, out);

    println!("acceptance: {}/{} criteria pass", h.passed, h.total);
}
