//! Seeded multi-trial sweeps, aggregation and CSV persistence.
//!
//! A [`SweepSpec`] fixes a problem, an oracle and a learning-rate policy; each
//! of its configurations is run for a number of trials with seeds
//! `seed_base + trial`. [`run_sweeps`] executes trials in parallel and
//! returns rows ordered by (spec, configuration, seed), so the CSV output is
//! identical across runs and worker counts.
//!
//! [`run_ex1`], [`run_ex2`] and [`run_ex3`] build the standard experiments on
//! the three benchmark problems.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optimizer::{adapt_run, run_fixed, streams, trial_rng, AdaptConfig, Metric, RunOutcome, StopConfig};
use crate::oracles::OracleSpec;
use crate::problems::{f3_saddle, ProblemSpec, Vector};
use crate::theory::{axis_grid_samples, delta_bound, TheoryConstants};

/// Header of the per-trial summary CSV.
pub const SUMMARY_HEADER: &str = "problem,b,m,n,oracle,eta_policy,k,seed,success,fcalls";
/// Header of the aggregate report CSV.
pub const REPORT_HEADER: &str = "problem,b,m,n,oracle,eta_policy,k,success_rate,q1,median,q3";

/// Experiment size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 10 trials, dimensions up to 20, 11×11 grids.
    Desk,
    /// 50 trials, dimensions up to 80, 51×51 grids.
    Paper,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Desk => "desk",
            Scale::Paper => "paper",
        })
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(invalid("scale", format!("expected desk or paper, got `{other}`"))),
        }
    }
}

/// How the learning rate is chosen across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EtaPolicy {
    /// One fixed value.
    Fixed(f64),
    /// `η = anchor · 10^(-k/10)` for each `k`.
    FixedGrid { anchor: f64, ks: Vec<u32> },
    Adaptive(AdaptConfig),
}

/// Where trials start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitPolicy {
    /// Every coordinate drawn from N(0, 1).
    StandardNormal,
    /// Uniform in the box, per coordinate.
    UniformBox { lo: f64, hi: f64 },
    /// A `resolution × resolution` grid over `[x_lo, x_hi] × [y_lo, y_hi]`
    /// on the first coordinates. One trial per grid point.
    Grid { x: (f64, f64), y: (f64, f64), resolution: usize },
}

/// One sweep over a problem, an oracle and a learning-rate policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub problem: ProblemSpec,
    pub oracle: OracleSpec,
    pub eta_policy: EtaPolicy,
    /// Ignored for grid initialization, which runs one trial per point.
    pub trials: usize,
    pub seed_base: u64,
    pub target: f64,
    pub max_f_calls: u64,
    pub metric: Metric,
    pub init: InitPolicy,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 && !matches!(self.init, InitPolicy::Grid { .. }) {
            return Err(invalid("trials", "must be at least 1"));
        }
        self.stop().validate()?;
        self.oracle.validate()?;
        match &self.eta_policy {
            EtaPolicy::Fixed(eta) => crate::optimizer::check_eta(*eta)?,
            EtaPolicy::FixedGrid { anchor, ks } => {
                if ks.is_empty() {
                    return Err(invalid("k", "the k grid is empty"));
                }
                crate::optimizer::check_eta(*anchor)?;
            }
            EtaPolicy::Adaptive(a) => a.validate()?,
        }
        match self.init {
            InitPolicy::Grid { x, y, resolution } => {
                if resolution == 0 || x.0 > x.1 || y.0 > y.1 {
                    return Err(invalid("grid", "need resolution ≥ 1 and lo ≤ hi"));
                }
            }
            InitPolicy::UniformBox { lo, hi } => {
                if !(lo < hi) {
                    return Err(invalid("init", format!("uniform box needs lo < hi, got [{lo}, {hi}]")));
                }
            }
            InitPolicy::StandardNormal => {}
        }
        Ok(())
    }

    pub fn stop(&self) -> StopConfig {
        StopConfig { max_f_calls: self.max_f_calls, target: self.target, metric: self.metric }
    }

    fn trial_count(&self) -> usize {
        match self.init {
            InitPolicy::Grid { resolution, .. } => resolution * resolution,
            _ => self.trials,
        }
    }

    /// The individual configurations, in sweep order.
    fn configurations(&self) -> Vec<(Option<f64>, Option<u32>)> {
        match &self.eta_policy {
            EtaPolicy::Fixed(eta) => vec![(Some(*eta), None)],
            EtaPolicy::FixedGrid { anchor, ks } => {
                ks.iter().map(|&k| (Some(anchor * 10f64.powf(-(k as f64) / 10.0)), Some(k))).collect()
            }
            EtaPolicy::Adaptive(_) => vec![(None, None)],
        }
    }

    fn initial_point(&self, trial: usize, seed: u64) -> (Vector, Vector) {
        let (m, n) = (self.problem.m, self.problem.n);
        match self.init {
            InitPolicy::StandardNormal => standard_normal_point(m, n, seed),
            InitPolicy::UniformBox { lo, hi } => {
                let mut rng = trial_rng(seed, streams::INIT);
                let x = Vector::from_fn(m, |_, _| rng.gen_range(lo..hi));
                let y = Vector::from_fn(n, |_, _| rng.gen_range(lo..hi));
                (x, y)
            }
            InitPolicy::Grid { x, y, resolution } => {
                let at = |(lo, hi): (f64, f64), i: usize| {
                    if resolution == 1 {
                        lo
                    } else {
                        lo + (hi - lo) * i as f64 / (resolution - 1) as f64
                    }
                };
                let mut px = Vector::zeros(m);
                let mut py = Vector::zeros(n);
                px[0] = at(x, trial / resolution);
                py[0] = at(y, trial % resolution);
                (px, py)
            }
        }
    }
}

/// The standard-normal starting point of the trial with seed `seed`.
pub fn standard_normal_point(m: usize, n: usize, seed: u64) -> (Vector, Vector) {
    let mut rng = trial_rng(seed, streams::INIT);
    let x = Vector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
    let y = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    (x, y)
}

/// One trial's result as written to the summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub problem: String,
    pub b: f64,
    pub m: usize,
    pub n: usize,
    pub oracle: String,
    /// The learning rate, or `adapt`.
    pub eta_policy: String,
    pub k: Option<u32>,
    pub seed: u64,
    pub success: bool,
    pub fcalls: u64,
}

impl TrialRow {
    fn key(&self) -> ConfigKey {
        ConfigKey {
            problem: self.problem.clone(),
            b: self.b,
            m: self.m,
            n: self.n,
            oracle: self.oracle.clone(),
            eta_policy: self.eta_policy.clone(),
            k: self.k,
        }
    }
}

/// A trial row together with data that does not go to the CSV.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub row: TrialRow,
    /// Starting point.
    pub init: (Vector, Vector),
    /// Euclidean distance of the final point to the known saddle.
    pub final_distance: f64,
    /// Outer steps taken.
    pub steps: u64,
    pub run: RunOutcome,
}

/// The columns identifying a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigKey {
    pub problem: String,
    pub b: f64,
    pub m: usize,
    pub n: usize,
    pub oracle: String,
    pub eta_policy: String,
    pub k: Option<u32>,
}

/// Success rate and f-call quartiles of the successful trials of one
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub key: ConfigKey,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepSummary {
    pub rows: Vec<TrialRow>,
    pub aggregates: Vec<Aggregate>,
    /// Experiment-level findings, such as the learning-rate anchors or the
    /// estimated `δ`.
    pub notes: BTreeMap<String, String>,
}

impl SweepSummary {
    pub fn from_rows(rows: Vec<TrialRow>) -> Result<Self> {
        let aggregates = aggregate(&rows)?;
        Ok(Self { rows, aggregates, notes: BTreeMap::new() })
    }

    /// The aggregate whose key satisfies `pred`.
    pub fn find(&self, pred: impl Fn(&ConfigKey) -> bool) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| pred(&a.key))
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        write_summary_csv(&self.rows, out)
    }

    pub fn write_report_csv<W: Write>(&self, out: W) -> Result<()> {
        write_report_csv(&self.aggregates, out)
    }
}

/// Quantile `p` of sorted data, interpolating linearly between order
/// statistics at position `p (len - 1)`.
pub fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// Groups rows by configuration, in order of first appearance.
pub fn aggregate(rows: &[TrialRow]) -> Result<Vec<Aggregate>> {
    if rows.is_empty() {
        return Err(Error::Empty("no trial rows to aggregate".into()));
    }
    let mut groups: Vec<(ConfigKey, Vec<&TrialRow>)> = Vec::new();
    for row in rows {
        let key = row.key();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(row),
            None => groups.push((key, vec![row])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(key, group)| {
            let mut calls: Vec<f64> = group.iter().filter(|r| r.success).map(|r| r.fcalls as f64).collect();
            calls.sort_by(f64::total_cmp);
            Aggregate {
                key,
                trials: group.len(),
                successes: calls.len(),
                success_rate: calls.len() as f64 / group.len() as f64,
                q1: quantile(&calls, 0.25),
                median: quantile(&calls, 0.5),
                q3: quantile(&calls, 0.75),
            }
        })
        .collect())
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

pub fn write_summary_csv<W: Write>(rows: &[TrialRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER.split(','))?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.b.to_string(),
            r.m.to_string(),
            r.n.to_string(),
            r.oracle.clone(),
            r.eta_policy.clone(),
            opt(&r.k),
            r.seed.to_string(),
            r.success.to_string(),
            r.fcalls.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_csv<W: Write>(aggregates: &[Aggregate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER.split(','))?;
    for a in aggregates {
        let k = &a.key;
        w.write_record([
            k.problem.clone(),
            k.b.to_string(),
            k.m.to_string(),
            k.n.to_string(),
            k.oracle.clone(),
            k.eta_policy.clone(),
            opt(&k.k),
            a.success_rate.to_string(),
            opt(&a.q1),
            opt(&a.median),
            opt(&a.q3),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn column<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| {
        let name = SUMMARY_HEADER.split(',').nth(i).unwrap_or("?");
        Error::Parse(format!("bad value `{raw}` in column {name}"))
    })
}

/// Parses a summary CSV written by [`write_summary_csv`].
pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<TrialRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != SUMMARY_HEADER {
        return Err(Error::Parse(format!("unexpected summary header `{header}`")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let k = rec.get(6).unwrap_or("");
        rows.push(TrialRow {
            problem: column(&rec, 0)?,
            b: column(&rec, 1)?,
            m: column(&rec, 2)?,
            n: column(&rec, 3)?,
            oracle: column(&rec, 4)?,
            eta_policy: column(&rec, 5)?,
            k: if k.is_empty() { None } else { Some(column(&rec, 6)?) },
            seed: column(&rec, 7)?,
            success: column(&rec, 8)?,
            fcalls: column(&rec, 9)?,
        });
    }
    Ok(rows)
}

/// Execution options shared by all sweeps.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
    /// Directory for one JSON-lines trace per trial.
    pub trace_dir: Option<PathBuf>,
}

struct Task<'a> {
    spec: &'a SweepSpec,
    eta: Option<f64>,
    k: Option<u32>,
    trial: usize,
}

fn run_task(task: &Task<'_>, trace_dir: Option<&Path>) -> Result<TrialOutcome> {
    let spec = task.spec;
    let problem = spec.problem.build()?;
    let seed = spec.seed_base.wrapping_add(task.trial as u64);
    let init = spec.initial_point(task.trial, seed);
    let stop = spec.stop();
    let run = match (task.eta, &spec.eta_policy) {
        (None, EtaPolicy::Adaptive(a)) => adapt_run(&problem, &spec.oracle, init.clone(), a, &stop, seed)?,
        (Some(eta), _) => run_fixed(&problem, &spec.oracle, eta, init.clone(), &stop, seed)?,
        (None, _) => unreachable!("fixed policies always carry a learning rate"),
    };
    let final_distance = match problem.known_saddle() {
        Some((xs, ys)) => ((&run.state.x - xs).norm_squared() + (&run.state.y - ys).norm_squared()).sqrt(),
        None => (run.state.x.norm_squared() + run.state.y.norm_squared()).sqrt(),
    };
    let row = TrialRow {
        problem: spec.problem.name.to_string(),
        b: spec.problem.b,
        m: spec.problem.m,
        n: spec.problem.n,
        oracle: spec.oracle.label(),
        eta_policy: task.eta.map_or_else(|| "adapt".to_owned(), |e| e.to_string()),
        k: task.k,
        seed,
        success: run.success,
        fcalls: run.f_calls,
    };
    if let Some(dir) = trace_dir {
        let name = format!(
            "{}-b{}-m{}-n{}-{}-{}-seed{}.jsonl",
            row.problem,
            row.b,
            row.m,
            row.n,
            row.oracle,
            row.k.map_or_else(|| row.eta_policy.clone(), |k| format!("k{k}")),
            seed
        );
        let file = fs::File::create(dir.join(name))?;
        run.trace.write_jsonl(std::io::BufWriter::new(file))?;
    }
    Ok(TrialOutcome { row, init, final_distance, steps: run.state.t, run })
}

/// Runs every trial of every spec. Outcomes are ordered by (spec,
/// configuration, seed) regardless of scheduling.
pub fn run_sweeps(specs: &[SweepSpec], options: &RunOptions) -> Result<Vec<TrialOutcome>> {
    for s in specs {
        s.validate()?;
    }
    if let Some(dir) = &options.trace_dir {
        fs::create_dir_all(dir)?;
    }
    let tasks: Vec<Task<'_>> = specs
        .iter()
        .flat_map(|spec| {
            spec.configurations().into_iter().flat_map(move |(eta, k)| {
                (0..spec.trial_count()).map(move |trial| Task { spec, eta, k, trial })
            })
        })
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = options.workers {
        if w == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| invalid("workers", e.to_string()))?;
    let trace_dir = options.trace_dir.as_deref();
    pool.install(|| tasks.par_iter().map(|t| run_task(t, trace_dir)).collect())
}

/// [`run_sweeps`] followed by aggregation.
pub fn run_summary(specs: &[SweepSpec], options: &RunOptions) -> Result<(SweepSummary, Vec<TrialOutcome>)> {
    let outcomes = run_sweeps(specs, options)?;
    let rows = outcomes.iter().map(|o| o.row.clone()).collect();
    Ok((SweepSummary::from_rows(rows)?, outcomes))
}

/// Default seed base of the standard experiments.
pub const DEFAULT_SEED: u64 = 20_240_101;
pub const DEFAULT_BUDGET: u64 = 500_000;
pub const DEFAULT_TARGET: f64 = 1e-5;

/// Options of the standard experiments.
#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    pub scale: Scale,
    pub seed_base: u64,
    /// Overrides the scale's trial count.
    pub trials: Option<usize>,
    pub max_f_calls: u64,
    pub target: f64,
    pub adapt: AdaptConfig,
    pub run: RunOptions,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            scale: Scale::Desk,
            seed_base: DEFAULT_SEED,
            trials: None,
            max_f_calls: DEFAULT_BUDGET,
            target: DEFAULT_TARGET,
            adapt: AdaptConfig::default(),
            run: RunOptions::default(),
        }
    }
}

impl ExperimentOptions {
    pub fn desk() -> Self {
        Self::default()
    }

    fn trials(&self) -> usize {
        self.trials.unwrap_or(match self.scale {
            Scale::Desk => 10,
            Scale::Paper => 50,
        })
    }
}

/// The oracles compared in the learning-rate sweeps.
pub fn sweep_oracles() -> [OracleSpec; 2] {
    [OracleSpec::es(5, 2.0, 2.0), OracleSpec::gd(5, 1.0)]
}

/// The `k = 0..15` grid.
pub fn k_grid() -> Vec<u32> {
    (0..=15).collect()
}

/// Fixed-grid and adaptive sweeps on one problem.
pub fn eta_sweeps(
    problem: ProblemSpec,
    oracle: OracleSpec,
    anchor: f64,
    metric: Metric,
    opts: &ExperimentOptions,
) -> [SweepSpec; 2] {
    let fixed = SweepSpec {
        problem,
        oracle,
        eta_policy: EtaPolicy::FixedGrid { anchor, ks: k_grid() },
        trials: opts.trials(),
        seed_base: opts.seed_base,
        target: opts.target,
        max_f_calls: opts.max_f_calls,
        metric,
        init: InitPolicy::StandardNormal,
    };
    let adaptive = SweepSpec { eta_policy: EtaPolicy::Adaptive(opts.adapt), ..fixed.clone() };
    [fixed, adaptive]
}

/// The problem instances of the first experiment.
pub fn ex1_problems(scale: Scale) -> Vec<ProblemSpec> {
    let (bs, dims): (&[f64], &[usize]) = match scale {
        Scale::Desk => (&[1.0, 2.0, 8.0], &[5, 10, 20]),
        Scale::Paper => (&[0.5, 1.0, 2.0, 4.0, 8.0, 16.0], &[5, 10, 20, 40, 80]),
    };
    let mut out: Vec<ProblemSpec> = bs.iter().map(|&b| ProblemSpec::f1(10, b)).collect();
    out.extend(dims.iter().filter(|&&d| d != 10).map(|&d| ProblemSpec::f1(d, 1.0)));
    out
}

/// Learning-rate anchor `η̄` at the saddle, for exact inner solutions.
pub fn eta_anchor(problem: &ProblemSpec) -> Result<f64> {
    Ok(TheoryConstants::at_saddle(&problem.build()?, 0.0, 0.0)?.eta_bar_local)
}

/// First experiment: learning-rate sweeps on `f1` with the exact, ES and
/// gradient oracles, over the coupling `b` and the dimension.
pub fn run_ex1(opts: &ExperimentOptions) -> Result<SweepSummary> {
    let mut specs = Vec::new();
    for problem in ex1_problems(opts.scale) {
        let anchor = eta_anchor(&problem)?;
        let oracles = std::iter::once(OracleSpec::exact()).chain(sweep_oracles());
        for oracle in oracles {
            specs.extend(eta_sweeps(problem, oracle, anchor, Metric::Gap, opts));
        }
    }
    let (mut summary, _) = run_summary(&specs, &opts.run)?;
    summary.notes.insert("experiment".into(), "ex1".into());
    summary.notes.insert("scale".into(), opts.scale.to_string());
    Ok(summary)
}

/// `δ` estimated on the `(x₁, y₁)` plane through the saddle.
pub fn estimate_delta(problem: &ProblemSpec, half_width: f64, resolution: usize) -> Result<f64> {
    let p = problem.build()?;
    delta_bound(&p, &axis_grid_samples(&p, half_width, resolution)?)
}

/// The `f2` instance of the second experiment.
pub fn ex2_problem() -> ProblemSpec {
    ProblemSpec::f2(10, 10.0)
}

/// Second experiment: `f2` at `b = 10`, where the global precondition
/// `ε̄ + δ < 1` fails. The grid is anchored at `η̄ = 8/(4 + b²)`.
pub fn run_ex2(opts: &ExperimentOptions) -> Result<SweepSummary> {
    let problem = ex2_problem();
    let anchor = eta_anchor(&problem)?;
    let mut specs = Vec::new();
    for oracle in sweep_oracles() {
        specs.extend(eta_sweeps(problem, oracle, anchor, Metric::ApproxGap, opts));
    }
    let (mut summary, _) = run_summary(&specs, &opts.run)?;
    let delta = estimate_delta(&problem, 3.0, 21)?;
    let b = problem.b;
    summary.notes.insert("experiment".into(), "ex2".into());
    summary.notes.insert("scale".into(), opts.scale.to_string());
    summary.notes.insert("eta_bar_formula".into(), anchor.to_string());
    summary.notes.insert("eta_bar_alternative".into(), (4.0 / (4.0 + b * b)).to_string());
    summary.notes.insert("delta_estimate".into(), delta.to_string());
    summary.notes.insert(
        "global_precondition".into(),
        if delta < 1.0 { "holds on samples" } else { "violated" }.into(),
    );
    Ok(summary)
}

/// Final points closer than this to `z1` count as converged to it.
pub const EX3_CAPTURE_RADIUS: f64 = 1e-2;

/// The sweeps of the third experiment.
pub fn ex3_specs(opts: &ExperimentOptions) -> Vec<SweepSpec> {
    let resolution = match opts.scale {
        Scale::Desk => 11,
        Scale::Paper => 51,
    };
    [1, 5]
        .into_iter()
        .map(|tau| SweepSpec {
            problem: ProblemSpec::f3(),
            oracle: OracleSpec::gd(tau, 1.0),
            eta_policy: EtaPolicy::Fixed(0.1),
            trials: resolution * resolution,
            seed_base: opts.seed_base,
            target: opts.target,
            max_f_calls: opts.max_f_calls,
            metric: Metric::ApproxGap,
            init: InitPolicy::Grid { x: (-5.0, 3.0), y: (-3.0, 5.0), resolution },
        })
        .collect()
}

/// Third experiment: `f3` from a grid of starting points with the gradient
/// oracle at `τ ∈ {1, 5}`. Notes record, per `τ`, the fraction of runs whose
/// final point lies within [`EX3_CAPTURE_RADIUS`] of `z1`.
pub fn run_ex3(opts: &ExperimentOptions) -> Result<SweepSummary> {
    let specs = ex3_specs(opts);
    let (mut summary, outcomes) = run_summary(&specs, &opts.run)?;
    summary.notes.insert("experiment".into(), "ex3".into());
    summary.notes.insert("scale".into(), opts.scale.to_string());
    let (sx, sy) = f3_saddle();
    summary.notes.insert("z1".into(), format!("({sx}, {sy})"));
    for spec in &specs {
        let label = spec.oracle.label();
        let mine: Vec<&TrialOutcome> = outcomes.iter().filter(|o| o.row.oracle == label).collect();
        let near = mine.iter().filter(|o| o.final_distance < EX3_CAPTURE_RADIUS).count();
        let frac = near as f64 / mine.len() as f64;
        summary.notes.insert(format!("{label}_fraction_at_z1"), frac.to_string());
        summary.notes.insert(format!("{label}_fraction_elsewhere"), (1.0 - frac).to_string());
    }
    Ok(summary)
}

/// Runs one of the standard experiments by number.
pub fn run_experiment(which: u32, opts: &ExperimentOptions) -> Result<SweepSummary> {
    match which {
        1 => run_ex1(opts),
        2 => run_ex2(opts),
        3 => run_ex3(opts),
        other => Err(invalid("experiment", format!("expected 1, 2 or 3, got {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row(success: bool, fcalls: u64, seed: u64) -> TrialRow {
        TrialRow {
            problem: "f1".into(),
            b: 1.0,
            m: 2,
            n: 2,
            oracle: "exact".into(),
            eta_policy: "0.5".into(),
            k: Some(3),
            seed,
            success,
            fcalls,
        }
    }

    #[test]
    fn aggregate_examples() {
        let a = aggregate(&[row(false, 500, 0), row(false, 500, 1)]).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].success_rate, 0.0);
        assert_eq!((a[0].q1, a[0].median, a[0].q3), (None, None, None));

        let a = aggregate(&[row(true, 100, 0)]).unwrap();
        assert_eq!((a[0].q1, a[0].median, a[0].q3), (Some(100.0), Some(100.0), Some(100.0)));

        let rows: Vec<_> = [10, 20, 30, 40].iter().enumerate().map(|(i, &c)| row(true, c, i as u64)).collect();
        let a = aggregate(&rows).unwrap();
        assert_eq!(a[0].median, Some(25.0));
        assert_eq!(a[0].q1, Some(17.5));
        assert_eq!(a[0].q3, Some(32.5));

        assert!(matches!(aggregate(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn aggregate_counts_match_trials() {
        let mut rows: Vec<_> = (0..7).map(|s| row(s % 3 != 0, 100 + s, s)).collect();
        rows.push(TrialRow { k: Some(4), ..row(true, 5, 0) });
        let a = aggregate(&rows).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a.iter().map(|x| x.trials).sum::<usize>(), rows.len());
        assert_eq!(a[0].successes, 4);
        assert_relative_eq!(a[0].success_rate, 4.0 / 7.0);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![row(true, 10, 0), TrialRow { k: None, eta_policy: "adapt".into(), ..row(false, 20, 1) }];
        let mut buf = Vec::new();
        write_summary_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(SUMMARY_HEADER));
        assert!(text.contains("f1,1,2,2,exact,adapt,,1,false,20"));
        assert_eq!(read_summary_csv(&buf[..]).unwrap(), rows);
        assert!(read_summary_csv(&b"a,b\n1,2\n"[..]).is_err());
    }

    #[test]
    fn report_csv_leaves_missing_quartiles_empty() {
        let a = aggregate(&[row(false, 5, 0)]).unwrap();
        let mut buf = Vec::new();
        write_report_csv(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("{REPORT_HEADER}\nf1,1,2,2,exact,0.5,3,0,,,\n"));
    }

    fn small_spec() -> SweepSpec {
        SweepSpec {
            problem: ProblemSpec::f1(3, 1.0),
            oracle: OracleSpec::es(5, 2.0, 2.0),
            eta_policy: EtaPolicy::FixedGrid { anchor: 1.0, ks: vec![0, 3] },
            trials: 4,
            seed_base: 7,
            target: 1e-5,
            max_f_calls: 20_000,
            metric: Metric::Gap,
            init: InitPolicy::StandardNormal,
        }
    }

    #[test]
    fn sweep_rows_are_ordered_and_reproducible() {
        let specs = [small_spec()];
        let csv_with = |workers| {
            let (s, _) = run_summary(&specs, &RunOptions { workers: Some(workers), trace_dir: None }).unwrap();
            let mut buf = Vec::new();
            s.write_summary_csv(&mut buf).unwrap();
            (s, buf)
        };
        let (s1, a) = csv_with(1);
        let (_, b) = csv_with(3);
        assert_eq!(a, b);
        let seeds: Vec<u64> = s1.rows.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![7, 8, 9, 10, 7, 8, 9, 10]);
        assert_eq!(s1.rows[0].k, Some(0));
        assert_eq!(s1.rows[4].k, Some(3));
        assert_eq!(s1.aggregates.len(), 2);
        assert_eq!(s1.aggregates[1].success_rate, 1.0);
        for r in &s1.rows {
            assert!(r.fcalls <= 20_000 + 2 * 100 * 5 + 2);
        }
    }

    #[test]
    fn grid_init_covers_the_region() {
        let spec = SweepSpec {
            problem: ProblemSpec::f3(),
            init: InitPolicy::Grid { x: (-5.0, 3.0), y: (-3.0, 5.0), resolution: 3 },
            ..small_spec()
        };
        let pts: Vec<(f64, f64)> = (0..9)
            .map(|i| {
                let (x, y) = spec.initial_point(i, 0);
                (x[0], y[0])
            })
            .collect();
        assert_eq!(pts[0], (-5.0, -3.0));
        assert_eq!(pts[4], (-1.0, 1.0));
        assert_eq!(pts[8], (3.0, 5.0));
        assert_eq!(spec.trial_count(), 9);
    }

    #[test]
    fn invalid_specs() {
        assert!(SweepSpec { trials: 0, ..small_spec() }.validate().is_err());
        assert!(SweepSpec { target: 0.0, ..small_spec() }.validate().is_err());
        assert!(SweepSpec { eta_policy: EtaPolicy::Fixed(0.0), ..small_spec() }.validate().is_err());
        assert!(run_experiment(4, &ExperimentOptions::desk()).is_err());
    }

    #[test]
    fn traces_are_written_per_trial() {
        let dir = std::env::temp_dir().join(format!("saddlekit-traces-{}", std::process::id()));
        let spec = SweepSpec { trials: 2, eta_policy: EtaPolicy::Fixed(0.5), ..small_spec() };
        run_sweeps(&[spec], &RunOptions { workers: Some(2), trace_dir: Some(dir.clone()) }).unwrap();
        let files = fs::read_dir(&dir).unwrap().count();
        assert_eq!(files, 2);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn ex1_desk_instances() {
        let ps = ex1_problems(Scale::Desk);
        let pairs: Vec<(usize, f64)> = ps.iter().map(|p| (p.m, p.b)).collect();
        assert_eq!(pairs, vec![(10, 1.0), (10, 2.0), (10, 8.0), (5, 1.0), (20, 1.0)]);
        assert_relative_eq!(eta_anchor(&ps[1]).unwrap(), 0.4, epsilon = 1e-12);
        assert_relative_eq!(eta_anchor(&ex2_problem()).unwrap(), 8.0 / 104.0, epsilon = 1e-10);
    }
}
