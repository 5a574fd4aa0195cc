//! Effective configuration: defaults, then the config file, then flags.
//!
//! Every setting is a flat `key = value` pair whose key is the long flag name
//! with dashes. The same keys are accepted in config files, so the echoed
//! effective configuration can be fed back with `--config`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use saddlekit::experiments::{Scale, DEFAULT_BUDGET, DEFAULT_SEED, DEFAULT_TARGET};
use saddlekit::optimizer::{AdaptConfig, Metric, StopConfig};
use saddlekit::oracles::{OracleKind, OracleSpec};
use saddlekit::problems::{ProblemName, ProblemSpec};

/// Settings as raw strings, keyed by flag name.
pub type Layer = BTreeMap<String, String>;

/// All recognized keys.
pub const KEYS: &[&str] = &[
    "problem", "m", "n", "b", "oracle", "tau", "gd-step", "sigma-init", "sigma-max", "eta", "a-eta", "b-eta",
    "c-eta", "target", "budget", "metric", "trials", "seed", "scale", "workers", "experiment", "out-dir", "trace",
    "traces", "eps", "out",
];

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<saddlekit::Error> for ConfigError {
    fn from(e: saddlekit::Error) -> Self {
        ConfigError(e.to_string())
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Layer, ConfigError> {
    let mut out = Layer::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        out.insert(key, v.trim().to_owned());
    }
    Ok(out)
}

/// Renders a layer in config-file syntax, one `key = value` line each,
/// every line starting with `prefix`.
pub fn render(layer: &Layer, prefix: &str) -> String {
    let mut s = String::new();
    for (k, v) in layer {
        let _ = writeln!(s, "{prefix}{k} = {v}");
    }
    s
}

/// How the learning rate is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSetting {
    Fixed(f64),
    Adapt,
    /// `η̄ · 10^(-k/10)` for `k = 0..15`.
    Grid,
}

impl FromStr for EtaSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "adapt" => Ok(EtaSetting::Adapt),
            "grid" => Ok(EtaSetting::Grid),
            _ => s.parse().map(EtaSetting::Fixed).map_err(|_| format!("expected a number, `adapt` or `grid`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub problem: ProblemSpec,
    pub oracle: OracleSpec,
    pub eta: EtaSetting,
    pub adapt: AdaptConfig,
    pub stop: StopConfig,
    /// `None` uses the scale's default.
    pub trials: Option<usize>,
    pub seed: u64,
    pub scale: Scale,
    pub workers: Option<usize>,
    pub experiment: String,
    pub out_dir: PathBuf,
    pub trace: Option<PathBuf>,
    pub traces: bool,
    pub eps: f64,
    pub out: Option<PathBuf>,
    /// The merged key-value view, for echoing.
    pub effective: Layer,
}

fn defaults(problem: ProblemName) -> Layer {
    let dim = if problem == ProblemName::F3 { "1" } else { "10" };
    let metric = if problem == ProblemName::F1 { Metric::Gap } else { Metric::ApproxGap };
    let pairs = [
        ("problem", problem.to_string()),
        ("m", dim.into()),
        ("b", if problem == ProblemName::F3 { "0".into() } else { "1".into() }),
        ("oracle", "es".into()),
        ("tau", "5".into()),
        ("gd-step", "1".into()),
        ("sigma-init", "2".into()),
        ("sigma-max", "2".into()),
        ("eta", "adapt".into()),
        ("a-eta", "1".into()),
        ("b-eta", "5".into()),
        ("c-eta", "1.1".into()),
        ("target", DEFAULT_TARGET.to_string()),
        ("budget", DEFAULT_BUDGET.to_string()),
        ("metric", metric.to_string()),
        ("seed", DEFAULT_SEED.to_string()),
        ("scale", "desk".into()),
        ("experiment", "1".into()),
        ("out-dir", "results".into()),
        ("traces", "false".into()),
        ("eps", "0".into()),
    ];
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

fn field<T: FromStr>(layer: &Layer, key: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    layer
        .get(key)
        .map(|v| v.parse::<T>().map_err(|e| ConfigError(format!("invalid value `{v}` for {key}: {e}"))))
        .transpose()
}

fn required<T: FromStr>(layer: &Layer, key: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    field(layer, key)?.ok_or_else(|| ConfigError(format!("missing {key}")))
}

impl Settings {
    /// Merges `file` over the defaults and `flags` over both, then parses
    /// and validates every field.
    pub fn resolve(file: &Layer, flags: &Layer) -> Result<Self, ConfigError> {
        let mut given = file.clone();
        given.extend(flags.iter().map(|(k, v)| (k.clone(), v.clone())));
        let problem: ProblemName = field(&given, "problem")?.unwrap_or(ProblemName::F1);
        let mut l = defaults(problem);
        l.extend(given);
        if !l.contains_key("n") {
            let m = l["m"].clone();
            l.insert("n".into(), m);
        }

        let problem = ProblemSpec { name: problem, m: required(&l, "m")?, n: required(&l, "n")?, b: required(&l, "b")? };
        let kind: OracleKind = required(&l, "oracle")?;
        let oracle = OracleSpec {
            kind,
            tau: required(&l, "tau")?,
            gd_step: required(&l, "gd-step")?,
            sigma_init: required(&l, "sigma-init")?,
            sigma_max: required(&l, "sigma-max")?,
        };
        let eta: EtaSetting = required(&l, "eta")?;
        if let EtaSetting::Fixed(e) = eta {
            if !(e > 0.0 && e <= 1.0) {
                return Err(ConfigError(format!("eta must be in (0,1], got {e}")));
            }
        }
        let adapt = AdaptConfig { a_eta: required(&l, "a-eta")?, b_eta: required(&l, "b-eta")?, c_eta: required(&l, "c-eta")? };
        let stop = StopConfig { max_f_calls: required(&l, "budget")?, target: required(&l, "target")?, metric: required(&l, "metric")? };
        let workers: Option<usize> = field(&l, "workers")?;
        if workers == Some(0) {
            return Err(ConfigError("workers must be at least 1".into()));
        }
        let trials: Option<usize> = field(&l, "trials")?;
        if trials == Some(0) {
            return Err(ConfigError("trials must be at least 1".into()));
        }
        let eps: f64 = required(&l, "eps")?;
        if !(0.0..1.0).contains(&eps) {
            return Err(ConfigError(format!("eps must be in [0,1), got {eps}")));
        }

        problem.build()?;
        oracle.validate()?;
        adapt.validate()?;
        stop.validate()?;

        Ok(Self {
            problem,
            oracle,
            eta,
            adapt,
            stop,
            trials,
            seed: required(&l, "seed")?,
            scale: required(&l, "scale")?,
            workers,
            experiment: required(&l, "experiment")?,
            out_dir: required(&l, "out-dir")?,
            trace: field(&l, "trace")?,
            traces: required(&l, "traces")?,
            eps,
            out: field(&l, "out")?,
            effective: l,
        })
    }
}
