//! `saddlekit` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 budget
//! exhausted.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_report, cmd_run, cmd_sweep, cmd_verify, EXIT_CONFIG};
use settings::{parse_config, ConfigError, Layer, Settings};

#[derive(Parser)]
#[command(name = "saddlekit", version, about = "Oracle-based min-max saddle-point optimization")]
struct Cli {
    /// Flat `key = value` file; keys are the long flag names. Flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and write its trace.
    Run(Opts),
    /// Run a standard experiment or a custom sweep.
    Sweep(Opts),
    /// Print the theory constants of a problem.
    Verify(Opts),
    /// Aggregate summary CSVs into a report CSV.
    Report(ReportArgs),
}

#[derive(Args, Default)]
struct Opts {
    /// f1, f2 or f3.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// Defaults to m.
    #[arg(long)]
    n: Option<String>,
    /// Coupling strength.
    #[arg(long)]
    b: Option<String>,
    /// exact, es or gd.
    #[arg(long)]
    oracle: Option<String>,
    /// Inner iterations per oracle call (ES: successes per dimension).
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    gd_step: Option<String>,
    #[arg(long)]
    sigma_init: Option<String>,
    #[arg(long)]
    sigma_max: Option<String>,
    /// A value in (0, 1], `adapt`, or `grid` (sweeps only).
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    a_eta: Option<String>,
    #[arg(long)]
    b_eta: Option<String>,
    #[arg(long)]
    c_eta: Option<String>,
    #[arg(long)]
    target: Option<String>,
    /// Maximum f-calls per trial.
    #[arg(long)]
    budget: Option<String>,
    /// g, gtilde or f.
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// desk or paper.
    #[arg(long)]
    scale: Option<String>,
    #[arg(long, env = "SADDLEKIT_WORKERS")]
    workers: Option<String>,
    /// 1, 2, 3 or custom.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    /// Trace file of a single run.
    #[arg(long)]
    trace: Option<String>,
    /// Write one trace per sweep trial under `<out-dir>/traces`.
    #[arg(long)]
    traces: bool,
    /// Oracle accuracy assumed by `verify`.
    #[arg(long)]
    eps: Option<String>,
    /// CSV output file of `verify`.
    #[arg(long)]
    out: Option<String>,
}

impl Opts {
    fn layer(&self) -> Layer {
        let pairs = [
            ("problem", &self.problem),
            ("m", &self.m),
            ("n", &self.n),
            ("b", &self.b),
            ("oracle", &self.oracle),
            ("tau", &self.tau),
            ("gd-step", &self.gd_step),
            ("sigma-init", &self.sigma_init),
            ("sigma-max", &self.sigma_max),
            ("eta", &self.eta),
            ("a-eta", &self.a_eta),
            ("b-eta", &self.b_eta),
            ("c-eta", &self.c_eta),
            ("target", &self.target),
            ("budget", &self.budget),
            ("metric", &self.metric),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("scale", &self.scale),
            ("workers", &self.workers),
            ("experiment", &self.experiment),
            ("out-dir", &self.out_dir),
            ("trace", &self.trace),
            ("eps", &self.eps),
            ("out", &self.out),
        ];
        let mut layer: Layer =
            pairs.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_owned(), v.clone()))).collect();
        if self.traces {
            layer.insert("traces".into(), "true".into());
        }
        layer
    }
}

#[derive(Args)]
struct ReportArgs {
    /// Summary CSV files, or directories containing `summary*.csv`.
    paths: Vec<PathBuf>,
    /// Report CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dispatch(cli: Cli) -> Result<i32, ConfigError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => Layer::new(),
    };
    match cli.command {
        Command::Run(o) => cmd_run(&Settings::resolve(&file, &o.layer())?),
        Command::Sweep(o) => cmd_sweep(&Settings::resolve(&file, &o.layer())?),
        Command::Verify(o) => cmd_verify(&Settings::resolve(&file, &o.layer())?),
        Command::Report(r) => cmd_report(&r.paths, r.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}
