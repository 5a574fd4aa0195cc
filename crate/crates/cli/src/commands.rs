use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use saddlekit::experiments::{
    aggregate, estimate_delta, eta_anchor, k_grid, read_summary_csv, run_experiment, run_summary,
    standard_normal_point, write_report_csv, EtaPolicy, ExperimentOptions, InitPolicy, RunOptions, SweepSpec,
    SweepSummary,
};
use saddlekit::optimizer::{adapt_run, run_fixed, Termination};
use saddlekit::theory::{linalg::spd_eigen, TheoryConstants};

use crate::settings::{render, ConfigError, EtaSetting, Settings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;

type CmdResult = Result<i32, ConfigError>;

fn echo(command: &str, s: &Settings) {
    println!("# saddlekit {command}");
    print!("{}", render(&s.effective, "# "));
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ConfigError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// A single trial with a fixed or adaptive learning rate.
pub fn cmd_run(s: &Settings) -> CmdResult {
    echo("run", s);
    let problem = s.problem.build()?;
    let init = standard_normal_point(s.problem.m, s.problem.n, s.seed);
    let out = match s.eta {
        EtaSetting::Fixed(eta) => run_fixed(&problem, &s.oracle, eta, init, &s.stop, s.seed)?,
        EtaSetting::Adapt => adapt_run(&problem, &s.oracle, init, &s.adapt, &s.stop, s.seed)?,
        EtaSetting::Grid => return Err(ConfigError("eta = grid is only valid for sweeps".into())),
    };
    if let Some(path) = &s.trace {
        write_file(path, out.trace.to_jsonl().as_bytes())?;
    }
    let metric = out.trace.last().map_or(f64::NAN, |r| r.metric);
    let status = match out.termination {
        Termination::Converged => "converged",
        Termination::Budget => "budget",
        Termination::Diverged => "diverged",
    };
    println!("status={status} success={} fcalls={} steps={} metric={metric:e}", out.success, out.f_calls, out.state.t);
    Ok(if out.success { EXIT_OK } else { EXIT_BUDGET })
}

fn custom_sweep(s: &Settings, run: RunOptions) -> Result<SweepSummary, ConfigError> {
    let eta_policy = match s.eta {
        EtaSetting::Fixed(eta) => EtaPolicy::Fixed(eta),
        EtaSetting::Adapt => EtaPolicy::Adaptive(s.adapt),
        EtaSetting::Grid => EtaPolicy::FixedGrid { anchor: eta_anchor(&s.problem)?, ks: k_grid() },
    };
    let spec = SweepSpec {
        problem: s.problem,
        oracle: s.oracle,
        eta_policy,
        trials: s.trials.unwrap_or(10),
        seed_base: s.seed,
        target: s.stop.target,
        max_f_calls: s.stop.max_f_calls,
        metric: s.stop.metric,
        init: InitPolicy::StandardNormal,
    };
    Ok(run_summary(&[spec], &run)?.0)
}

/// A standard experiment (`experiment = 1, 2, 3`) or a custom sweep over
/// the configured problem, oracle and learning rate.
pub fn cmd_sweep(s: &Settings) -> CmdResult {
    echo("sweep", s);
    let run = RunOptions { workers: s.workers, trace_dir: s.traces.then(|| s.out_dir.join("traces")) };
    let summary = match s.experiment.as_str() {
        "custom" => custom_sweep(s, run)?,
        n => {
            let which: u32 = n
                .parse()
                .map_err(|_| ConfigError(format!("experiment must be 1, 2, 3 or custom, got `{n}`")))?;
            let opts = ExperimentOptions {
                scale: s.scale,
                seed_base: s.seed,
                trials: s.trials,
                max_f_calls: s.stop.max_f_calls,
                target: s.stop.target,
                adapt: s.adapt,
                run,
            };
            run_experiment(which, &opts)?
        }
    };

    let mut summary_csv = Vec::new();
    summary.write_summary_csv(&mut summary_csv)?;
    let mut report_csv = Vec::new();
    summary.write_report_csv(&mut report_csv)?;
    let notes: String = summary.notes.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    write_file(&s.out_dir.join("summary.csv"), &summary_csv)?;
    write_file(&s.out_dir.join("report.csv"), &report_csv)?;
    write_file(&s.out_dir.join("config.txt"), render(&s.effective, "").as_bytes())?;
    if !notes.is_empty() {
        write_file(&s.out_dir.join("notes.txt"), notes.as_bytes())?;
        print!("{}", notes.lines().map(|l| format!("# note: {l}\n")).collect::<String>());
    }
    io::stdout().write_all(&report_csv).map_err(|e| ConfigError(e.to_string()))?;
    Ok(EXIT_OK)
}

const VERIFY_HEADER: &str = "problem,b,m,n,eps,sigma_bar,delta_estimate,eta_bar_global,eta_bar_local,eta_star,gamma_bar_star,gxx_min,gxx_max,gyy_min,gyy_max";

/// Theory constants at the problem's saddle, as a table and as CSV.
pub fn cmd_verify(s: &Settings) -> CmdResult {
    echo("verify", s);
    let problem = s.problem.build()?;
    let delta = estimate_delta(&s.problem, 3.0, 21)?;
    let c = TheoryConstants::at_saddle(&problem, s.eps, delta)?;
    let gx = spd_eigen(&c.gxx_star, "G*_xx")?.eigenvalues;
    let gy = spd_eigen(&c.gyy_star, "G*_yy")?.eigenvalues;
    let global = c.eta_bar_global.map_or_else(|| "none".to_owned(), |v| format!("{v:.6}"));
    let precondition = if s.eps + delta < 1.0 { "holds on samples" } else { "violated" };

    let rows = [
        ("problem", format!("{} (b = {}, m = {}, n = {})", s.problem.name, s.problem.b, s.problem.m, s.problem.n)),
        ("eps_bar", format!("{}", s.eps)),
        ("sigma_bar", format!("{:.6}", c.sigma_bar)),
        ("delta (sampled)", format!("{delta:.6}")),
        ("global precondition", precondition.to_owned()),
        ("eta_bar (global)", global.clone()),
        ("eta_bar (local)", format!("{:.6}", c.eta_bar_local)),
        ("eta*", format!("{:.6}", c.eta_star)),
        ("gamma_bar*", format!("{:.6}", c.gamma_bar_star)),
        ("G*_xx eigenvalues", format!("[{:.4}, {:.4}]", gx.min(), gx.max())),
        ("G*_yy eigenvalues", format!("[{:.4}, {:.4}]", gy.min(), gy.max())),
    ];
    for (k, v) in rows {
        println!("{k:<20} {v}");
    }
    let csv = format!(
        "{VERIFY_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        s.problem.name,
        s.problem.b,
        s.problem.m,
        s.problem.n,
        s.eps,
        c.sigma_bar,
        delta,
        c.eta_bar_global.map_or_else(String::new, |v| v.to_string()),
        c.eta_bar_local,
        c.eta_star,
        c.gamma_bar_star,
        gx.min(),
        gx.max(),
        gy.min(),
        gy.max()
    );
    println!();
    print!("{csv}");
    if let Some(out) = &s.out {
        write_file(out, csv.as_bytes())?;
    }
    Ok(EXIT_OK)
}

fn summary_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, ConfigError> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| io_err(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    let name = f.file_name().and_then(|n| n.to_str()).unwrap_or("");
                    f.is_file() && name.starts_with("summary") && name.ends_with(".csv")
                })
                .collect();
            found.sort();
            files.extend(found);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(io_err(p, "no such file or directory"));
        }
    }
    Ok(files)
}

/// Aggregates summary CSVs (files, or directories holding `summary*.csv`)
/// into the report CSV.
pub fn cmd_report(paths: &[PathBuf], out: Option<&Path>) -> CmdResult {
    let files = summary_files(paths)?;
    if files.is_empty() {
        return Err(ConfigError("no summary files found".into()));
    }
    let mut rows = Vec::new();
    for f in &files {
        let file = fs::File::open(f).map_err(|e| io_err(f, e))?;
        rows.extend(read_summary_csv(file).map_err(|e| io_err(f, e))?);
    }
    let mut csv = Vec::new();
    write_report_csv(&aggregate(&rows)?, &mut csv)?;
    match out {
        Some(path) => write_file(path, &csv)?,
        None => io::stdout().write_all(&csv).map_err(|e| ConfigError(e.to_string()))?,
    }
    Ok(EXIT_OK)
}
