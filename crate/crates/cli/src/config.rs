//! Experiment configuration: flat `key=value` text or JSON.
//!
//! Function parameters live under `param.<name>` in the text form and in the
//! `params` object in JSON. Every field is optional so that a file, the
//! command defaults and command-line flags can be layered.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use izo_core::FeasibleSet;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<String>,
    /// Log every `log_stride` iterations instead of geometrically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn bad(key: &str, value: &str) -> CliError {
    CliError::Config(format!("invalid value for {key}: {value:?}"))
}

fn parse<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.trim().parse().map_err(|_| bad(key, value))
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

impl ExperimentConfig {
    /// Parses `key=value` lines. Blank lines and lines starting with `#`
    /// are ignored.
    pub fn from_kv_text(text: &str) -> CliResult<Self> {
        let mut c = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got {line:?}", lineno + 1)))?;
            c.set_key(key.trim(), value.trim())?;
        }
        Ok(c)
    }

    pub fn set_key(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "experiment" => self.experiment = Some(value.to_string()),
            "function" => self.function = Some(value.to_string()),
            "n" => self.n = Some(parse(key, value)?),
            "K" | "k" => self.k = Some(parse(key, value)?),
            "repeats" => self.repeats = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "schedule" => self.schedule = Some(value.to_string()),
            "delta" => self.delta = Some(parse(key, value)?),
            "sigma_xi" | "sigma-xi" => self.sigma_xi = Some(parse(key, value)?),
            "set" => {
                parse_set_spec(value, 1)?;
                self.set = Some(value.to_string())
            }
            "log_stride" | "log-stride" => self.log_stride = Some(parse(key, value)?),
            "out" => self.out = Some(value.to_string()),
            _ => match key.strip_prefix("param.") {
                Some(name) if !name.is_empty() => {
                    self.params.insert(name.to_string(), parse(key, value)?);
                }
                _ => return Err(CliError::Config(format!("unknown configuration key {key:?}"))),
            },
        }
        Ok(())
    }

    pub fn to_kv_text(&self) -> String {
        self.kv_lines(true).join("\n") + "\n"
    }

    /// `key=value` lines; `out` is omitted when `with_out` is false.
    pub fn kv_lines(&self, with_out: bool) -> Vec<String> {
        let mut lines = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                lines.push(format!("{k}={v}"));
            }
        };
        push("experiment", self.experiment.clone());
        push("function", self.function.clone());
        push("n", self.n.map(|v| v.to_string()));
        push("K", self.k.map(|v| v.to_string()));
        push("repeats", self.repeats.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("schedule", self.schedule.clone());
        push("delta", self.delta.map(fmt_f64));
        push("sigma_xi", self.sigma_xi.map(fmt_f64));
        push("set", self.set.clone());
        push("log_stride", self.log_stride.map(|v| v.to_string()));
        if with_out {
            push("out", self.out.clone());
        }
        for (k, v) in &self.params {
            lines.push(format!("param.{k}={}", fmt_f64(*v)));
        }
        lines
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad JSON config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// JSON when the first non-blank character is `{`, key=value otherwise.
    pub fn from_text(text: &str) -> CliResult<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_kv_text(text)
        }
    }

    /// Fields set in `top` win; params are merged key by key.
    pub fn overlay(&self, top: &Self) -> Self {
        let mut params = self.params.clone();
        params.extend(top.params.iter().map(|(k, v)| (k.clone(), *v)));
        Self {
            experiment: top.experiment.clone().or_else(|| self.experiment.clone()),
            function: top.function.clone().or_else(|| self.function.clone()),
            params,
            n: top.n.or(self.n),
            k: top.k.or(self.k),
            repeats: top.repeats.or(self.repeats),
            seed: top.seed.or(self.seed),
            schedule: top.schedule.clone().or_else(|| self.schedule.clone()),
            delta: top.delta.or(self.delta),
            sigma_xi: top.sigma_xi.or(self.sigma_xi),
            set: top.set.clone().or_else(|| self.set.clone()),
            log_stride: top.log_stride.or(self.log_stride),
            out: top.out.clone().or_else(|| self.out.clone()),
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn param_or(&self, name: &str, default: f64) -> f64 {
        self.param(name).unwrap_or(default)
    }

    /// A parameter that must be a nonnegative integer.
    pub fn param_usize(&self, name: &str, default: usize) -> CliResult<usize> {
        match self.param(name) {
            None => Ok(default),
            Some(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Ok(v as usize),
            Some(v) => Err(CliError::Config(format!("param.{name} must be a nonnegative integer, got {v}"))),
        }
    }

    pub fn require_seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| CliError::Config("--seed is required".into()))
    }

    pub fn feasible_set(&self, n: usize) -> CliResult<FeasibleSet> {
        parse_set_spec(self.set.as_deref().unwrap_or("none"), n)
    }
}

/// `none`, `ball:RADIUS` (centered at the origin) or `box:LO,HI` (the same
/// interval in every coordinate).
pub fn parse_set_spec(spec: &str, n: usize) -> CliResult<FeasibleSet> {
    let spec = spec.trim();
    let err = |e: izo_core::IzoError| CliError::Config(format!("set {spec:?}: {e}"));
    if spec == "none" {
        return Ok(FeasibleSet::WholeSpace);
    }
    if let Some(r) = spec.strip_prefix("ball:") {
        let r: f64 = parse("set", r)?;
        return FeasibleSet::centered_ball(n, r).map_err(err);
    }
    if let Some(rest) = spec.strip_prefix("box:") {
        let (lo, hi) = rest.split_once(',').ok_or_else(|| bad("set", spec))?;
        let (lo, hi): (f64, f64) = (parse("set", lo)?, parse("set", hi)?);
        return FeasibleSet::boxed(vec![lo; n], vec![hi; n]).map_err(err);
    }
    Err(bad("set", spec))
}

/// Header lines echoing a resolved configuration, each starting with `# `.
pub fn preamble(command: &str, config: &ExperimentConfig, extra: &[(String, String)]) -> String {
    let mut s = format!("# izo {command}\n");
    for line in config.kv_lines(false) {
        let _ = writeln!(s, "# {line}");
    }
    for (k, v) in extra {
        let _ = writeln!(s, "# {k}={v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        let mut c = ExperimentConfig {
            experiment: Some("run".into()),
            function: Some("regularized_ls".into()),
            n: Some(10),
            k: Some(100_000),
            repeats: Some(25),
            seed: Some(42),
            schedule: Some("sc_constrained".into()),
            delta: Some(1e-100),
            sigma_xi: Some(f64::EPSILON.powi(4)),
            set: Some("ball:2.5".into()),
            log_stride: Some(10),
            out: Some("/tmp/x.csv".into()),
            ..Default::default()
        };
        c.params.insert("lambda".into(), 0.1);
        c.params.insert("quartic".into(), 1.0 / 3.0);
        c
    }

    #[test]
    fn kv_round_trip() {
        let c = sample();
        assert_eq!(ExperimentConfig::from_kv_text(&c.to_kv_text()).unwrap(), c);
        assert_eq!(ExperimentConfig::from_text(&c.to_kv_text()).unwrap(), c);
    }

    #[test]
    fn json_round_trip() {
        let c = sample();
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(ExperimentConfig::from_text(&c.to_json()).unwrap(), c);
        let empty = ExperimentConfig::default();
        assert_eq!(empty.to_json(), "{}");
    }

    #[test]
    fn overlay_prefers_top() {
        let base = sample();
        let mut top = ExperimentConfig { n: Some(3), ..Default::default() };
        top.params.insert("lambda".into(), 2.0);
        let merged = base.overlay(&top);
        assert_eq!(merged.n, Some(3));
        assert_eq!(merged.k, Some(100_000));
        assert_eq!(merged.param("lambda"), Some(2.0));
        assert_eq!(merged.param("quartic"), Some(1.0 / 3.0));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_kv_text("n=abc").is_err());
        assert!(ExperimentConfig::from_kv_text("colour=red").is_err());
        assert!(ExperimentConfig::from_kv_text("just text").is_err());
        assert!(ExperimentConfig::from_kv_text("set=sphere:1").is_err());
        assert!(ExperimentConfig::from_json("{\"colour\": 1}").is_err());
        assert!(ExperimentConfig::default().require_seed().is_err());
    }

    #[test]
    fn set_specs() {
        assert!(matches!(parse_set_spec("none", 2).unwrap(), FeasibleSet::WholeSpace));
        let b = parse_set_spec("ball:6", 2).unwrap();
        assert_eq!(b.project(&[12.0, 0.0]).unwrap(), vec![6.0, 0.0]);
        let bx = parse_set_spec("box:1,2", 1).unwrap();
        assert_eq!(bx.project(&[8.0]).unwrap(), vec![2.0]);
        assert!(parse_set_spec("box:2,1", 1).is_err());
        assert!(parse_set_spec("ball:-1", 1).is_err());
    }
}
