//! The outer saddle-point iteration.
//!
//! Each step asks both oracles for approximate inner solutions at the current
//! point, `x̂ ≈ argmin f(·, y)` and `ŷ ≈ argmax f(x, ·)`, and moves a fraction
//! `η` of the way towards them:
//!
//! ```text
//! x ← x + η (x̂ - x),    y ← y + η (ŷ - y)
//! ```
//!
//! Both oracle calls see the same incoming `(x, y)`. The oracle gap
//! `F = f(x, ŷ) - f(x̂, y)` is a computable proxy for the suboptimality error
//! and drives the learning-rate adaptation in [`adapt_run`].

mod metric;
mod slope;
mod trace;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::oracles::{call_oracle, OracleSpec, OracleState, Side};
use crate::problems::{ProblemDef, Vector};

pub use metric::{progress_metric, Metric};
pub use slope::slope_fit;
pub use trace::{Event, RunTrace, TraceRecord};

use metric::MetricEval;

/// Floor applied to `F` before taking its logarithm.
pub const LOG_FLOOR: f64 = 1e-300;

/// Independent random streams of one trial, all derived from its seed.
pub mod streams {
    /// Initial point.
    pub const INIT: u64 = 0;
    /// Learning-rate candidate draws.
    pub const ETA: u64 = 1;
    pub const ORACLE_X: u64 = 2;
    pub const ORACLE_Y: u64 = 3;
}

/// The ChaCha stream `stream` of the trial with seed `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Iterate, learning-rate state and oracle states of one run.
#[derive(Debug, Clone)]
pub struct SaddleState {
    pub x: Vector,
    pub y: Vector,
    pub eta: f64,
    /// Current estimate of the log convergence rate of `F` per step.
    pub gamma_tilde: f64,
    pub oracle_x: OracleState,
    pub oracle_y: OracleState,
    /// Number of outer steps taken.
    pub t: u64,
    pub f_calls_total: u64,
}

impl SaddleState {
    /// Fresh state at `(x, y)` with `η = 1`, `γ̃ = 0` and oracle states drawn
    /// from the trial's streams.
    pub fn new(problem: &ProblemDef, x: Vector, y: Vector, oracle: &OracleSpec, seed: u64) -> Result<Self> {
        problem.check_dims(&x, &y)?;
        oracle.validate()?;
        Ok(Self {
            x,
            y,
            eta: 1.0,
            gamma_tilde: 0.0,
            oracle_x: OracleState::from_spec(oracle, trial_rng(seed, streams::ORACLE_X))?,
            oracle_y: OracleState::from_spec(oracle, trial_rng(seed, streams::ORACLE_Y))?,
            t: 0,
            f_calls_total: 0,
        })
    }
}

/// What one [`fixed_eta_step`] produced.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub x_hat: Vector,
    pub y_hat: Vector,
    /// `F = f(x, ŷ) - f(x̂, y)` at the incoming point.
    pub f_gap: f64,
    pub f_calls_used: u64,
    /// Either ES call hit its proposal cap.
    pub oracle_aborted: bool,
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid("eta", format!("eta must be in (0,1], got {eta}")));
    }
    Ok(())
}

/// One averaged update with learning rate `eta`.
///
/// Charges both oracle calls plus two evaluations for the gap `F`.
pub fn fixed_eta_step(state: &mut SaddleState, problem: &ProblemDef, oracle: &OracleSpec, eta: f64) -> Result<StepReport> {
    check_eta(eta)?;
    // The opponent moved since the previous call, so the incumbent value is
    // re-evaluated inside the oracle.
    let rx = call_oracle(oracle, problem, Side::X, &state.x, &state.y, None, &mut state.oracle_x)?;
    let ry = call_oracle(oracle, problem, Side::Y, &state.y, &state.x, None, &mut state.oracle_y)?;
    let f_gap = problem.eval(&state.x, &ry.z_out) - problem.eval(&rx.z_out, &state.y);
    let used = rx.f_calls_used + ry.f_calls_used + 2;

    state.x += (&rx.z_out - &state.x) * eta;
    state.y += (&ry.z_out - &state.y) * eta;
    state.t += 1;
    state.f_calls_total += used;
    Ok(StepReport { x_hat: rx.z_out, y_hat: ry.z_out, f_gap, f_calls_used: used, oracle_aborted: rx.aborted || ry.aborted })
}

/// Stopping rule shared by fixed and adaptive runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopConfig {
    /// The run fails once the total f-call count exceeds this.
    pub max_f_calls: u64,
    /// The run succeeds once the metric is at or below this.
    pub target: f64,
    pub metric: Metric,
}

impl StopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target > 0.0) || !self.target.is_finite() {
            return Err(invalid("target", format!("must be positive, got {}", self.target)));
        }
        if self.max_f_calls == 0 {
            return Err(invalid("budget", "must be at least 1"));
        }
        Ok(())
    }
}

/// Hyperparameters of the learning-rate adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptConfig {
    /// Scales the steps per round, `⌊b_η + a_η/η_c⌋`.
    pub a_eta: f64,
    /// Minimum steps per round, and the length of the strictly increasing
    /// run of `F` values that ends a round early.
    pub b_eta: u32,
    /// Multiplicative granularity of the learning-rate search.
    pub c_eta: f64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self { a_eta: 1.0, b_eta: 5, c_eta: 1.1 }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_eta > 0.0) || !self.a_eta.is_finite() {
            return Err(invalid("a_eta", format!("must be positive, got {}", self.a_eta)));
        }
        if !(self.c_eta > 1.0) || !self.c_eta.is_finite() {
            return Err(invalid("c_eta", format!("must exceed 1, got {}", self.c_eta)));
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    Budget,
    Diverged,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: RunTrace,
    pub success: bool,
    pub termination: Termination,
    /// Total f-calls when the run stopped.
    pub f_calls: u64,
    pub state: SaddleState,
}

fn finite_point(state: &SaddleState) -> bool {
    state.x.iter().chain(state.y.iter()).all(|v| v.is_finite())
}

/// Checks the stopping conditions after a step. Returns the termination, if
/// any, and the metric value.
fn check_stop(
    eval: &MetricEval,
    problem: &ProblemDef,
    state: &SaddleState,
    f_gap: f64,
    stop: &StopConfig,
) -> (Option<Termination>, f64) {
    let metric = eval.value(problem, &state.x, &state.y, Some(f_gap)).unwrap_or(f64::INFINITY);
    if metric <= stop.target {
        (Some(Termination::Converged), metric)
    } else if !finite_point(state) || !f_gap.is_finite() || metric.is_nan() {
        (Some(Termination::Diverged), metric)
    } else if state.f_calls_total > stop.max_f_calls {
        (Some(Termination::Budget), metric)
    } else {
        (None, metric)
    }
}

fn termination_event(t: Termination) -> Event {
    match t {
        Termination::Converged => Event::Converged,
        Termination::Budget => Event::Budget,
        Termination::Diverged => Event::Diverged,
    }
}

fn finish(mut trace: RunTrace, state: SaddleState, term: Termination, t: u64, eta: f64, f_gap: f64, metric: f64) -> RunOutcome {
    trace.push(TraceRecord { t, s: 0, eta, f_gap, metric, fcalls: state.f_calls_total, event: termination_event(term) });
    RunOutcome { trace, success: term == Termination::Converged, termination: term, f_calls: state.f_calls_total, state }
}

/// Checks the metric at the starting point. `Some` when the run is already
/// done.
fn initial_check(eval: &MetricEval, problem: &ProblemDef, state: &SaddleState, stop: &StopConfig, eta: f64) -> Option<RunOutcome> {
    let m0 = eval.value(problem, &state.x, &state.y, None)?;
    (m0 <= stop.target).then(|| finish(RunTrace::default(), state.clone(), Termination::Converged, 0, eta, 0.0, m0))
}

/// Repeats [`fixed_eta_step`] until the metric reaches the target or the
/// budget is exhausted.
pub fn run_fixed(
    problem: &ProblemDef,
    oracle: &OracleSpec,
    eta: f64,
    init: (Vector, Vector),
    stop: &StopConfig,
    seed: u64,
) -> Result<RunOutcome> {
    check_eta(eta)?;
    stop.validate()?;
    let eval = MetricEval::new(problem, stop.metric)?;
    let mut state = SaddleState::new(problem, init.0, init.1, oracle, seed)?;
    state.eta = eta;
    if let Some(done) = initial_check(&eval, problem, &state, stop, eta) {
        return Ok(done);
    }
    let mut trace = RunTrace::default();
    loop {
        let step = fixed_eta_step(&mut state, problem, oracle, eta)?;
        let (term, metric) = check_stop(&eval, problem, &state, step.f_gap, stop);
        trace.push(TraceRecord {
            t: state.t,
            s: 0,
            eta,
            f_gap: step.f_gap,
            metric,
            fcalls: state.f_calls_total,
            event: Event::Step,
        });
        if let Some(term) = term {
            let t = state.t;
            return Ok(finish(trace, state, term, t, eta, step.f_gap, metric));
        }
    }
}

/// Outcome of the learning-rate update at the end of an adaptation round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaDecision {
    Shrink,
    Accept,
    Reject,
}

/// The learning-rate update rule. Returns the decision, the new `(η, γ̃)`,
/// and whether the round must be reverted.
///
/// * both the current and candidate rates non-negative: `η ← η / c_η³`;
/// * else if the candidate is no worse, or was the current `η`: adopt it;
/// * revert when `γ̃ - 2σ_c > 0` with the (possibly updated) `γ̃`.
pub fn eta_update(
    eta: f64,
    gamma_tilde: f64,
    eta_candidate: f64,
    gamma_candidate: f64,
    gamma_candidate_stderr: f64,
    c_eta: f64,
) -> (EtaDecision, f64, f64, bool) {
    let (decision, eta, gamma) = if gamma_tilde >= 0.0 && gamma_candidate >= 0.0 {
        (EtaDecision::Shrink, (eta / c_eta.powi(3)).max(f64::MIN_POSITIVE), gamma_tilde)
    } else if gamma_candidate <= gamma_tilde || eta_candidate == eta {
        (EtaDecision::Accept, eta_candidate, gamma_candidate)
    } else {
        (EtaDecision::Reject, eta, gamma_tilde)
    };
    let revert = gamma - 2.0 * gamma_candidate_stderr > 0.0;
    (decision, eta, gamma, revert)
}

/// True when the last `len` values are strictly increasing. Runs shorter
/// than two values never count.
fn strictly_increasing_tail(values: &[f64], len: usize) -> bool {
    len >= 2 && values.len() >= len && values[values.len() - len..].windows(2).all(|w| w[1] > w[0])
}

/// Learning-rate adaptation.
///
/// Starts from `η = 1`, `γ̃ = 0`. Each round draws a candidate `η_c` from
/// `{min(η c_η, 1), η, η / c_η}` with equal probability and runs up to
/// `⌊b_η + a_η/η_c⌋` steps with it, stopping the round early once the last
/// `b_η` gaps are strictly increasing. The slope of `log F` over the round is
/// the candidate's rate `γ̃_c`; [`eta_update`] then decides, and a round
/// whose accepted rate is significantly positive is undone.
///
/// Nonpositive gaps end the round and are floored at [`LOG_FLOOR`] before the
/// logarithm. A round with fewer than two gaps leaves `(η, γ̃)` unchanged.
pub fn adapt_run(
    problem: &ProblemDef,
    oracle: &OracleSpec,
    init: (Vector, Vector),
    adapt: &AdaptConfig,
    stop: &StopConfig,
    seed: u64,
) -> Result<RunOutcome> {
    adapt.validate()?;
    stop.validate()?;
    let eval = MetricEval::new(problem, stop.metric)?;
    let mut state = SaddleState::new(problem, init.0, init.1, oracle, seed)?;
    if let Some(done) = initial_check(&eval, problem, &state, stop, state.eta) {
        return Ok(done);
    }
    let mut rng = trial_rng(seed, streams::ETA);
    let mut trace = RunTrace::default();
    let b_eta = adapt.b_eta as usize;
    let mut round = 0u64;
    loop {
        round += 1;
        let snapshot = (state.x.clone(), state.y.clone(), state.oracle_x.step_size(), state.oracle_y.step_size());
        let eta_c = match rng.gen_range(0..3) {
            0 => (state.eta * adapt.c_eta).min(1.0),
            1 => state.eta,
            _ => state.eta / adapt.c_eta,
        };
        let n_step = ((adapt.b_eta as f64 + adapt.a_eta / eta_c).floor() as u64).max(1);
        let mut gaps = Vec::with_capacity(n_step as usize);
        let mut last = (0.0, 0.0);
        for s in 1..=n_step {
            let step = fixed_eta_step(&mut state, problem, oracle, eta_c)?;
            gaps.push(step.f_gap);
            let (term, metric) = check_stop(&eval, problem, &state, step.f_gap, stop);
            last = (step.f_gap, metric);
            trace.push(TraceRecord {
                t: round,
                s,
                eta: eta_c,
                f_gap: step.f_gap,
                metric,
                fcalls: state.f_calls_total,
                event: Event::Step,
            });
            if let Some(term) = term {
                return Ok(finish(trace, state, term, round, eta_c, step.f_gap, metric));
            }
            if step.f_gap <= 0.0 || strictly_increasing_tail(&gaps, b_eta) {
                break;
            }
        }

        let record = |event| TraceRecord {
            t: round,
            s: 0,
            eta: eta_c,
            f_gap: last.0,
            metric: last.1,
            fcalls: 0,
            event,
        };
        let logs: Vec<f64> = gaps.iter().map(|f| f.max(LOG_FLOOR).ln()).collect();
        let stderr = match slope_fit(&logs) {
            Ok((gamma_c, stderr)) => {
                let (decision, eta, gamma, _) = eta_update(state.eta, state.gamma_tilde, eta_c, gamma_c, stderr, adapt.c_eta);
                state.eta = eta;
                state.gamma_tilde = gamma;
                let event = match decision {
                    EtaDecision::Shrink => Event::ShrinkEta,
                    EtaDecision::Accept => Event::AcceptEta,
                    EtaDecision::Reject => Event::RejectEta,
                };
                trace.push(TraceRecord { fcalls: state.f_calls_total, eta: state.eta, ..record(event) });
                stderr
            }
            Err(_) => {
                trace.push(TraceRecord { fcalls: state.f_calls_total, eta: state.eta, ..record(Event::RejectEta) });
                0.0
            }
        };
        if state.gamma_tilde - 2.0 * stderr > 0.0 {
            let (x, y, sx, sy) = snapshot;
            state.x = x;
            state.y = y;
            state.oracle_x.set_step_size(sx);
            state.oracle_y.set_step_size(sy);
            trace.push(TraceRecord { fcalls: state.f_calls_total, eta: state.eta, ..record(Event::Revert) });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_f1, make_f2};
    use crate::theory::QuadraticGap;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn normal_point(seed: u64, dim: usize) -> (Vector, Vector) {
        let mut rng = trial_rng(seed, streams::INIT);
        let x = Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        let y = Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        (x, y)
    }

    fn gap_stop(target: f64) -> StopConfig {
        StopConfig { max_f_calls: 500_000, target, metric: Metric::Gap }
    }

    #[test]
    fn exact_step_on_f1() {
        let p = make_f1(1, 1, 1.0).unwrap();
        let mut s = SaddleState::new(&p, v(&[1.0]), v(&[1.0]), &OracleSpec::exact(), 0).unwrap();
        let r = fixed_eta_step(&mut s, &p, &OracleSpec::exact(), 0.5).unwrap();
        assert_eq!(r.x_hat, v(&[-1.0]));
        assert_eq!(r.y_hat, v(&[1.0]));
        assert_relative_eq!(r.f_gap, 2.0);
        assert_eq!((s.x[0], s.y[0]), (0.0, 1.0));
        // two oracle calls + two gap evaluations
        assert_eq!(s.f_calls_total, 4);
        assert_eq!(r.f_calls_used, 4);
    }

    #[test]
    fn gap_equals_f_for_exact_oracle() {
        let p = make_f1(3, 3, 1.5).unwrap();
        let (x, y) = normal_point(3, 3);
        let g = p.gap(&x, &y).unwrap();
        let mut s = SaddleState::new(&p, x, y, &OracleSpec::exact(), 0).unwrap();
        let r = fixed_eta_step(&mut s, &p, &OracleSpec::exact(), 0.3).unwrap();
        assert_relative_eq!(r.f_gap, g, max_relative = 1e-14);
    }

    #[test]
    fn unit_eta_preserves_norm_on_f1() {
        let p = make_f1(1, 1, 1.0).unwrap();
        let mut s = SaddleState::new(&p, v(&[1.0]), v(&[1.0]), &OracleSpec::exact(), 0).unwrap();
        fixed_eta_step(&mut s, &p, &OracleSpec::exact(), 1.0).unwrap();
        assert_eq!((s.x[0], s.y[0]), (-1.0, 1.0));
    }

    #[test]
    fn eta_is_validated() {
        let p = make_f1(1, 1, 1.0).unwrap();
        let mut s = SaddleState::new(&p, v(&[1.0]), v(&[1.0]), &OracleSpec::exact(), 0).unwrap();
        let err = fixed_eta_step(&mut s, &p, &OracleSpec::exact(), 0.0).unwrap_err();
        assert!(err.to_string().contains("eta must be in (0,1]"));
        assert!(fixed_eta_step(&mut s, &p, &OracleSpec::exact(), 1.5).is_err());
    }

    #[test]
    fn run_fixed_at_optimal_eta_takes_18_steps() {
        let p = make_f1(1, 1, 1.0).unwrap();
        let out = run_fixed(&p, &OracleSpec::exact(), 0.5, (v(&[1.0]), v(&[1.0])), &gap_stop(1e-5), 0).unwrap();
        assert!(out.success);
        assert_eq!(out.state.t, 18);
        assert_eq!(out.trace.steps().count(), 18);
        assert_eq!(out.trace.last().unwrap().event, Event::Converged);
        assert_eq!(out.f_calls, 18 * 4);
    }

    #[test]
    fn run_fixed_at_threshold_never_converges() {
        let p = make_f1(1, 1, 1.0).unwrap();
        let stop = StopConfig { max_f_calls: 4000, ..gap_stop(1e-5) };
        let out = run_fixed(&p, &OracleSpec::exact(), 1.0, (v(&[1.0]), v(&[1.0])), &stop, 0).unwrap();
        assert!(!out.success);
        assert_eq!(out.termination, Termination::Budget);
        for r in out.trace.steps() {
            assert_relative_eq!(r.metric, 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn run_fixed_already_at_target() {
        let p = make_f1(2, 2, 1.0).unwrap();
        let out = run_fixed(&p, &OracleSpec::exact(), 0.5, (Vector::zeros(2), Vector::zeros(2)), &gap_stop(1e-5), 0).unwrap();
        assert!(out.success);
        assert_eq!(out.state.t, 0);
        assert_eq!(out.f_calls, 0);
        assert_eq!(out.trace.records.len(), 1);
    }

    #[test]
    fn run_fixed_checks_metric_prerequisites() {
        let p = make_f2(2, 2, 1.0).unwrap();
        let r = run_fixed(&p, &OracleSpec::es(5, 2.0, 2.0), 0.5, normal_point(0, 2), &gap_stop(1e-5), 0);
        assert!(r.is_err());
    }

    #[test]
    fn exact_contraction_matches_closed_form() {
        for (b, eta) in [(1.0, 0.3), (2.0, 0.15), (0.5, 0.9)] {
            let p = make_f1(4, 4, b).unwrap();
            let q = QuadraticGap::new(&p).unwrap();
            let (x, y) = normal_point(7, 4);
            let mut s = SaddleState::new(&p, x, y, &OracleSpec::exact(), 0).unwrap();
            let rho = ((1.0f64 - eta).powi(2) + eta * eta * b * b).sqrt();
            let mut g = q.eval(&s.x, &s.y);
            for _ in 0..50 {
                fixed_eta_step(&mut s, &p, &OracleSpec::exact(), eta).unwrap();
                let g1 = q.eval(&s.x, &s.y);
                assert!(((g1 / g).sqrt() - rho).abs() < 1e-12);
                g = g1;
            }
        }
    }

    #[test]
    fn es_steps_obey_the_f_sandwich_and_rate_bound() {
        let b = 1.0;
        let p = make_f1(10, 10, b).unwrap();
        let q = QuadraticGap::new(&p).unwrap();
        let oracle = OracleSpec::es(5, 2.0, 2.0);
        let eta = 0.5;
        let rho = ((1.0f64 - eta).powi(2) + eta * eta * b * b).sqrt();
        let gmat = q.gxx().clone();
        let (x, y) = normal_point(11, 10);
        let mut s = SaddleState::new(&p, x, y, &oracle, 11).unwrap();
        for _ in 0..40 {
            let (x0, y0) = (s.x.clone(), s.y.clone());
            let g_exact = p.gap(&x0, &y0).unwrap();
            let gt0 = q.eval(&x0, &y0);
            let r = fixed_eta_step(&mut s, &p, &oracle, eta).unwrap();
            let xs = p.argmin_x(&y0).unwrap();
            let ys = p.argmax_y(&x0).unwrap();
            let ex = crate::oracles::realized_epsilon(&x0, &r.x_hat, &xs, &gmat).unwrap();
            let ey = crate::oracles::realized_epsilon(&y0, &r.y_hat, &ys, &gmat).unwrap();
            let eps = ex.max(ey);
            assert!(r.f_gap <= g_exact * (1.0 + 1e-12));
            assert!(r.f_gap >= (1.0 - 2.0 * eps) * g_exact - 1e-12 * g_exact);
            let ratio = (q.eval(&s.x, &s.y) / gt0).sqrt();
            assert!(ratio <= rho + eta * eps.sqrt() + 1e-9, "ratio {ratio} > {rho} + {eta} sqrt({eps})");
        }
    }

    #[test]
    fn eta_update_rules() {
        // constant F: both rates zero, shrink fires
        let (d, eta, gamma, revert) = eta_update(1.0, 0.0, 1.0, 0.0, 0.0, 1.1);
        assert_eq!(d, EtaDecision::Shrink);
        assert_relative_eq!(eta, 1.0 / 1.331);
        assert_eq!(gamma, 0.0);
        assert!(!revert);
        // revert when the kept rate is significantly positive
        let (_, _, _, revert) = eta_update(0.5, 0.1, 0.5, -0.2, 0.01, 1.1);
        assert!(!revert, "accepted -0.2 is not positive");
        let (d, _, gamma, revert) = eta_update(0.5, 0.1, 0.55, 0.3, 0.01, 1.1);
        assert_eq!(d, EtaDecision::Shrink);
        assert_eq!(gamma, 0.1);
        assert!(revert);
        // candidate worse than current: reject
        let (d, eta, gamma, _) = eta_update(0.5, -0.3, 0.55, -0.1, 0.0, 1.1);
        assert_eq!((d, eta, gamma), (EtaDecision::Reject, 0.5, -0.3));
        // same eta is always adopted
        let (d, _, gamma, _) = eta_update(0.5, -0.3, 0.5, -0.1, 0.0, 1.1);
        assert_eq!((d, gamma), (EtaDecision::Accept, -0.1));
    }

    #[test]
    fn increasing_tail_detection() {
        assert!(strictly_increasing_tail(&[5.0, 1.0, 2.0, 3.0], 3));
        assert!(!strictly_increasing_tail(&[5.0, 1.0, 2.0, 2.0], 3));
        assert!(!strictly_increasing_tail(&[1.0, 2.0], 3));
        assert!(!strictly_increasing_tail(&[1.0, 2.0], 1));
    }

    #[test]
    fn adapt_run_solves_f1_with_exact_oracle() {
        let p = make_f1(5, 5, 2.0).unwrap();
        let out = run_adapt_default(&p, &OracleSpec::exact(), 4);
        assert!(out.success, "{:?}", out.termination);
        assert!(out.trace.count(Event::ShrinkEta) > 0);
        let etas: Vec<f64> = out.trace.records.iter().map(|r| r.eta).collect();
        assert!(etas.iter().all(|&e| e > 0.0 && e <= 1.0));
    }

    fn run_adapt_default(p: &ProblemDef, oracle: &OracleSpec, seed: u64) -> RunOutcome {
        let dim = p.m();
        adapt_run(p, oracle, normal_point(seed, dim), &AdaptConfig::default(), &gap_stop(1e-5), seed).unwrap()
    }

    #[test]
    fn adapt_run_is_reproducible_and_ordered() {
        let p = make_f1(4, 4, 1.0).unwrap();
        let oracle = OracleSpec::es(5, 2.0, 2.0);
        let a = run_adapt_default(&p, &oracle, 21);
        let b = run_adapt_default(&p, &oracle, 21);
        assert_eq!(a.trace, b.trace);
        assert!(a.success);
        assert!(a.trace.records.windows(2).all(|w| w[0].fcalls <= w[1].fcalls));
        let steps: Vec<u64> = a.trace.steps().map(|r| r.fcalls).collect();
        assert!(steps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn revert_restores_the_round_start() {
        // Replays an adaptive run step by step and checks every revert event
        // against the position recorded at the start of its round.
        let p = make_f1(3, 3, 4.0).unwrap();
        let oracle = OracleSpec::es(2, 2.0, 2.0);
        let init = normal_point(5, 3);
        let stop = StopConfig { max_f_calls: 60_000, target: 1e-8, metric: Metric::Gap };
        let out = adapt_run(&p, &oracle, init.clone(), &AdaptConfig::default(), &stop, 5).unwrap();
        let reverts = out.trace.count(Event::Revert);
        assert!(reverts > 0, "scenario should exercise at least one revert");

        let mut s = SaddleState::new(&p, init.0, init.1, &oracle, 5).unwrap();
        let mut round_start = (s.x.clone(), s.y.clone(), s.oracle_x.step_size(), s.oracle_y.step_size());
        let mut round = 1;
        for rec in &out.trace.records {
            if rec.t != round {
                round = rec.t;
                round_start = (s.x.clone(), s.y.clone(), s.oracle_x.step_size(), s.oracle_y.step_size());
            }
            match rec.event {
                Event::Step => {
                    fixed_eta_step(&mut s, &p, &oracle, rec.eta).unwrap();
                    assert_eq!(s.f_calls_total, rec.fcalls);
                }
                Event::Revert => {
                    let before_calls = s.f_calls_total;
                    s.x = round_start.0.clone();
                    s.y = round_start.1.clone();
                    s.oracle_x.set_step_size(round_start.2);
                    s.oracle_y.set_step_size(round_start.3);
                    assert_eq!(before_calls, rec.fcalls);
                }
                _ => {}
            }
        }
        // the replay reproduces the final state bit-for-bit
        assert_eq!(s.x, out.state.x);
        assert_eq!(s.y, out.state.y);
        assert_eq!(s.oracle_x.step_size().to_bits(), out.state.oracle_x.step_size().to_bits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exact_step_is_a_scaled_rotation(b in 0.1f64..4.0, frac in 0.01f64..0.99, seed in any::<u64>()) {
            let p = make_f1(3, 3, b).unwrap();
            let q = QuadraticGap::new(&p).unwrap();
            let eta = (2.0 / (1.0 + b * b)).min(1.0) * frac;
            let rho = ((1.0 - eta).powi(2) + eta * eta * b * b).sqrt();
            let (x, y) = normal_point(seed, 3);
            let mut s = SaddleState::new(&p, x, y, &OracleSpec::exact(), 0).unwrap();
            for _ in 0..20 {
                let g = q.eval(&s.x, &s.y);
                let exact_gap = p.gap(&s.x, &s.y).unwrap();
                let r = fixed_eta_step(&mut s, &p, &OracleSpec::exact(), eta).unwrap();
                prop_assert!((r.f_gap - exact_gap).abs() <= 1e-12 * exact_gap);
                prop_assert!(((q.eval(&s.x, &s.y) / g).sqrt() - rho).abs() <= 1e-12);
            }
        }

        #[test]
        fn adaptive_eta_stays_in_range(seed in any::<u64>(), b in 0.5f64..3.0) {
            let p = make_f1(3, 3, b).unwrap();
            let stop = StopConfig { max_f_calls: 20_000, target: 1e-5, metric: Metric::Gap };
            let oracle = OracleSpec::es(5, 2.0, 2.0);
            let a = adapt_run(&p, &oracle, normal_point(seed, 3), &AdaptConfig::default(), &stop, seed).unwrap();
            prop_assert!(a.state.eta > 0.0 && a.state.eta <= 1.0);
            prop_assert!(a.trace.records.iter().all(|r| r.eta > 0.0 && r.eta <= 1.0));
            let again = adapt_run(&p, &oracle, normal_point(seed, 3), &AdaptConfig::default(), &stop, seed).unwrap();
            prop_assert_eq!(&a.trace, &again.trace);
        }
    }
}
