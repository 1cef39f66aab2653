use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use izo_cli::{CliError, CliResult, Command, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "izo", version, about = "Seeded zeroth-order optimization experiments with CSV output")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Forward, central and complex-step derivative errors over a decade grid of steps
    EstimatorSweep(Flags),
    /// Im f(x+iy)/y for f = x^p on an (x, y) grid
    ImliftSurface(Flags),
    /// Complex-step descent against the real two-point baseline on a ball
    ScQuadratic(Flags),
    /// Descent with and without an estimated strong-convexity modulus
    TauDemo(Flags),
    /// Nonconvex descent from starting points on a circle
    Nonconvex(Flags),
    /// Descent on the radius of a disk in potential flow
    Pde(Flags),
    /// Modulus estimation with basis pursuit from many starting points
    DdpDemo(Flags),
    /// Descent on any built-in function with a named schedule
    Run(Flags),
}

#[derive(Debug, clap::Args)]
struct Flags {
    /// Configuration file, key=value lines or JSON
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "sigma-xi")]
    sigma_xi: Option<f64>,
    #[arg(long)]
    schedule: Option<String>,
    /// ball:RADIUS, box:LO,HI or none
    #[arg(long)]
    set: Option<String>,
    #[arg(long = "log-stride")]
    log_stride: Option<usize>,
    /// Function or command parameter, NAME=VALUE (repeatable)
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// CSV destination; the summary goes to PATH.summary.json
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Cmd {
    fn split(self) -> (Command, Flags) {
        match self {
            Cmd::EstimatorSweep(f) => (Command::EstimatorSweep, f),
            Cmd::ImliftSurface(f) => (Command::ImliftSurface, f),
            Cmd::ScQuadratic(f) => (Command::ScQuadratic, f),
            Cmd::TauDemo(f) => (Command::TauDemo, f),
            Cmd::Nonconvex(f) => (Command::Nonconvex, f),
            Cmd::Pde(f) => (Command::Pde, f),
            Cmd::DdpDemo(f) => (Command::DdpDemo, f),
            Cmd::Run(f) => (Command::Run, f),
        }
    }
}

fn flags_config(f: &Flags) -> CliResult<ExperimentConfig> {
    let mut c = ExperimentConfig {
        function: f.function.clone(),
        n: f.n,
        k: f.k,
        repeats: f.repeats,
        seed: f.seed,
        schedule: f.schedule.clone(),
        delta: f.delta,
        sigma_xi: f.sigma_xi,
        log_stride: f.log_stride,
        ..Default::default()
    };
    if let Some(set) = &f.set {
        c.set_key("set", set)?;
    }
    for p in &f.params {
        let (k, v) =
            p.split_once('=').ok_or_else(|| CliError::Config(format!("--param expects NAME=VALUE, got {p:?}")))?;
        c.set_key(&format!("param.{}", k.trim()), v.trim())?;
    }
    Ok(c)
}

fn execute(command: Command, flags: Flags) -> CliResult<()> {
    let file = match &flags.config {
        Some(path) => ExperimentConfig::from_text(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    let config = file.overlay(&flags_config(&flags)?);
    let out = flags.out.clone().or_else(|| config.out.as_ref().map(PathBuf::from));
    let report = command.execute(&config)?;
    match out {
        Some(path) => {
            let summary = report.write(&path)?;
            eprintln!("wrote {} and {}", path.display(), summary.display());
            print!("{}", report.summary_text());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(report.csv.as_bytes())?;
            eprint!("{}", report.summary_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, flags) = cli.command.split();
    match execute(command, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("izo {command}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
