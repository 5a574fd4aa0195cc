//! Approximate minimization oracles.
//!
//! An oracle takes a function `h` and a starting point `z` and returns a
//! point closer to the minimizer `z*` of `h`: `|z' - z*|²_A ≤ ε |z - z*|²_A`.
//! Three interchangeable implementations are provided:
//!
//! * [`exact_oracle`] uses the problem's closed-form inner optimizer (`ε = 0`);
//! * [`es_minimize`] is the elitist (1+1)-ES with the 1/5 success rule whose
//!   step size persists across calls;
//! * [`gd_minimize`] runs a bounded number of Armijo backtracking gradient
//!   steps.
//!
//! The x-side subproblem is `h(x) = f(x, y)`, the y-side one is
//! `h(y) = -f(x, y)`; [`call_oracle`] builds both from a [`ProblemDef`].

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::problems::{BoxBounds, Matrix, ProblemDef, Vector};

/// Sufficient-decrease constant of the Armijo condition.
pub const ARMIJO_C1: f64 = 1e-4;
/// Maximum number of step halvings per gradient step.
pub const MAX_HALVINGS: u32 = 60;
/// The ES gives up after this many times the expected number of proposals
/// (`τ·ℓ` successes at a 1/5 success rate).
pub const ES_CAP_FACTOR: f64 = 10.0;

/// Which half of the saddle problem an oracle call solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// `min_x f(x, y)` for fixed `y`.
    X,
    /// `min_y -f(x, y)` for fixed `x`.
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Exact,
    Es,
    Gd,
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OracleKind::Exact => "exact",
            OracleKind::Es => "es",
            OracleKind::Gd => "gd",
        })
    }
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(OracleKind::Exact),
            "es" | "aes" => Ok(OracleKind::Es),
            "gd" => Ok(OracleKind::Gd),
            other => Err(invalid("oracle", format!("unknown oracle `{other}` (expected exact, es or gd)"))),
        }
    }
}

/// Oracle choice and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub kind: OracleKind,
    /// `τ`: the ES stops after `τ·ℓ` successes; gradient descent takes at
    /// most `τ` steps.
    pub tau: u32,
    /// Initial trial step of each backtracking line search.
    pub gd_step: f64,
    /// Initial ES step size.
    pub sigma_init: f64,
    pub sigma_max: f64,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self { kind: OracleKind::Es, tau: 5, gd_step: 1.0, sigma_init: 2.0, sigma_max: 2.0 }
    }
}

impl OracleSpec {
    pub fn exact() -> Self {
        Self { kind: OracleKind::Exact, ..Self::default() }
    }

    pub fn es(tau: u32, sigma_init: f64, sigma_max: f64) -> Self {
        Self { kind: OracleKind::Es, tau, sigma_init, sigma_max, ..Self::default() }
    }

    pub fn gd(tau: u32, gd_step: f64) -> Self {
        Self { kind: OracleKind::Gd, tau, gd_step, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau < 1 {
            return Err(invalid("tau", "must be at least 1"));
        }
        if !(self.gd_step > 0.0) || !self.gd_step.is_finite() {
            return Err(invalid("gd_step", format!("must be positive, got {}", self.gd_step)));
        }
        if !(self.sigma_max > 0.0) || !self.sigma_max.is_finite() {
            return Err(invalid("sigma_max", format!("must be positive, got {}", self.sigma_max)));
        }
        if !(self.sigma_init > 0.0 && self.sigma_init <= self.sigma_max) {
            return Err(invalid(
                "sigma_init",
                format!("must lie in (0, sigma_max = {}], got {}", self.sigma_max, self.sigma_init),
            ));
        }
        Ok(())
    }

    /// Short label used in summary tables, e.g. `es-t5`.
    pub fn label(&self) -> String {
        match self.kind {
            OracleKind::Exact => "exact".to_string(),
            kind => format!("{kind}-t{}", self.tau),
        }
    }
}

/// Mutable per-side oracle state. The ES step size is carried from one call
/// to the next; the random stream belongs to this state alone.
#[derive(Debug, Clone)]
pub struct OracleState {
    step_size: f64,
    step_size_max: f64,
    f_calls: u64,
    grad_calls: u64,
    rng: ChaCha8Rng,
}

impl OracleState {
    pub fn new(step_size: f64, step_size_max: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(step_size > 0.0 && step_size <= step_size_max) || !step_size_max.is_finite() {
            return Err(invalid("sigma", format!("need 0 < sigma = {step_size} <= sigma_max = {step_size_max}")));
        }
        Ok(Self { step_size, step_size_max, f_calls: 0, grad_calls: 0, rng })
    }

    pub fn from_spec(spec: &OracleSpec, rng: ChaCha8Rng) -> Result<Self> {
        Self::new(spec.sigma_init, spec.sigma_max, rng)
    }

    /// Convenience constructor seeding a fresh ChaCha stream.
    pub fn seeded(step_size: f64, step_size_max: f64, seed: u64) -> Result<Self> {
        Self::new(step_size, step_size_max, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn step_size_max(&self) -> f64 {
        self.step_size_max
    }

    /// Cumulative `f`-calls charged through this state.
    pub fn f_calls(&self) -> u64 {
        self.f_calls
    }

    pub fn grad_calls(&self) -> u64 {
        self.grad_calls
    }

    pub fn set_step_size(&mut self, s: f64) {
        debug_assert!(s > 0.0 && s <= self.step_size_max);
        self.step_size = s;
    }

    fn charge(&mut self, result: &OracleResult) {
        self.f_calls += result.f_calls_used;
        self.grad_calls += result.grad_calls_used;
    }
}

/// Output of one oracle call.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub z_out: Vector,
    /// `h(z_out)`.
    pub f_value: f64,
    pub f_calls_used: u64,
    pub grad_calls_used: u64,
    /// Candidates sampled by the ES (0 for the other oracles).
    pub proposals: u64,
    /// The ES hit its proposal cap before collecting `τ·ℓ` successes.
    pub aborted: bool,
}

/// Exact inner optimizer of the requested side. Charged one `f`-call for the
/// value at the output.
pub fn exact_oracle(problem: &ProblemDef, side: Side, fixed_point: &Vector) -> Result<OracleResult> {
    let (z_out, f_value) = match side {
        Side::X => {
            let x = problem.argmin_x(fixed_point)?;
            let v = problem.eval(&x, fixed_point);
            (x, v)
        }
        Side::Y => {
            let y = problem.argmax_y(fixed_point)?;
            let v = -problem.eval(fixed_point, &y);
            (y, v)
        }
    };
    Ok(OracleResult { z_out, f_value, f_calls_used: 1, grad_calls_used: 0, proposals: 0, aborted: false })
}

/// The (1+1)-ES with the 1/5 success rule.
///
/// Samples `z' = z + σ N(0, I)` and accepts it when `h(z') ≤ h(z)`. On
/// success `σ ← min(σc, σ_max)`, on failure `σ ← σ c^{-1/4}`, with
/// `c = exp(1/√(2ℓ))`. Stops after `τ·ℓ` successes, or after
/// `ES_CAP_FACTOR · τ·ℓ / 0.2` proposals with `aborted` set.
///
/// `h_z` is the value at `z` if the caller already has it; otherwise it is
/// evaluated and charged. Proposals are folded into `bounds` first when
/// given. The step size is read from and written back to `state`.
pub fn es_minimize<H>(
    mut h: H,
    z: &Vector,
    h_z: Option<f64>,
    state: &mut OracleState,
    tau_es: u32,
    bounds: Option<&BoxBounds>,
) -> Result<OracleResult>
where
    H: FnMut(&Vector) -> f64,
{
    if tau_es < 1 {
        return Err(invalid("tau", "must be at least 1"));
    }
    let dim = z.len();
    if dim == 0 {
        return Err(Error::DimensionMismatch("es_minimize on an empty vector".into()));
    }
    if let Some(b) = bounds {
        if b.len() != dim {
            return Err(Error::DimensionMismatch(format!("bounds have {} coordinates, point has {dim}", b.len())));
        }
    }
    let c = (1.0 / (2.0 * dim as f64).sqrt()).exp();
    let shrink = c.powf(-0.25);
    let required = u64::from(tau_es) * dim as u64;
    let cap = (ES_CAP_FACTOR * required as f64 / 0.2).ceil() as u64;

    let mut f_calls = 0u64;
    let mut z = z.clone();
    let mut hz = match h_z {
        Some(v) => v,
        None => {
            f_calls += 1;
            h(&z)
        }
    };
    let mut sigma = state.step_size;
    let mut successes = 0u64;
    let mut proposals = 0u64;
    let mut aborted = false;
    while successes < required {
        if proposals >= cap {
            aborted = true;
            break;
        }
        let noise = Vector::from_fn(dim, |_, _| StandardNormal.sample(&mut state.rng));
        let mut cand = &z + noise * sigma;
        if let Some(b) = bounds {
            cand = b.mirror(&cand);
        }
        let hc = h(&cand);
        proposals += 1;
        f_calls += 1;
        if hc <= hz {
            sigma = (sigma * c).min(state.step_size_max);
            z = cand;
            hz = hc;
            successes += 1;
        } else {
            // keep σ strictly positive even after very long failure runs
            sigma = (sigma * shrink).max(f64::MIN_POSITIVE);
        }
    }
    state.set_step_size(sigma);
    let result = OracleResult { z_out: z, f_value: hz, f_calls_used: f_calls, grad_calls_used: 0, proposals, aborted };
    state.charge(&result);
    Ok(result)
}

/// At most `tau_gd` gradient steps with Armijo backtracking.
///
/// Each step starts from the trial length `gd_step` and halves it until
/// `h(z - α g) ≤ h(z) - c₁ α |g|²`. Stops early at a stationary point or when
/// the line search fails; the last accepted iterate (also the best) is
/// returned. `f`- and gradient evaluations are counted separately.
pub fn gd_minimize<H, G>(mut h: H, mut grad_h: G, z: &Vector, tau_gd: u32, gd_step: f64) -> Result<OracleResult>
where
    H: FnMut(&Vector) -> f64,
    G: FnMut(&Vector) -> Vector,
{
    if tau_gd < 1 {
        return Err(invalid("tau", "must be at least 1"));
    }
    if !(gd_step > 0.0) || !gd_step.is_finite() {
        return Err(invalid("gd_step", format!("must be positive, got {gd_step}")));
    }
    let mut z = z.clone();
    let mut hz = h(&z);
    let mut f_calls = 1u64;
    let mut grad_calls = 0u64;
    'outer: for _ in 0..tau_gd {
        let g = grad_h(&z);
        grad_calls += 1;
        let g2 = g.norm_squared();
        if !(g2 > 0.0) || !g2.is_finite() {
            break;
        }
        let mut alpha = gd_step;
        for _ in 0..=MAX_HALVINGS {
            let cand = &z - &g * alpha;
            let hc = h(&cand);
            f_calls += 1;
            if hc <= hz - ARMIJO_C1 * alpha * g2 {
                z = cand;
                hz = hc;
                continue 'outer;
            }
            alpha *= 0.5;
        }
        break;
    }
    Ok(OracleResult { z_out: z, f_value: hz, f_calls_used: f_calls, grad_calls_used: grad_calls, proposals: 0, aborted: false })
}

/// One oracle call on a side of `problem`.
///
/// `z` is the starting point on that side and `fixed` the opponent's current
/// value. For the ES, `h_z` may carry a known value of the subproblem at `z`.
pub fn call_oracle(
    spec: &OracleSpec,
    problem: &ProblemDef,
    side: Side,
    z: &Vector,
    fixed: &Vector,
    h_z: Option<f64>,
    state: &mut OracleState,
) -> Result<OracleResult> {
    match spec.kind {
        OracleKind::Exact => {
            let r = exact_oracle(problem, side, fixed)?;
            state.charge(&r);
            Ok(r)
        }
        OracleKind::Es => match side {
            Side::X => es_minimize(|x| problem.eval(x, fixed), z, h_z, state, spec.tau, problem.bounds_x()),
            Side::Y => es_minimize(|y| -problem.eval(fixed, y), z, h_z, state, spec.tau, problem.bounds_y()),
        },
        OracleKind::Gd => {
            if !problem.has_grad() {
                return Err(Error::MissingCapability { problem: problem.name().to_string(), what: "an analytic gradient" });
            }
            let r = match side {
                Side::X => gd_minimize(
                    |x| problem.eval(x, fixed),
                    |x| problem.grad(x, fixed).expect("gradient checked above").0,
                    z,
                    spec.tau,
                    spec.gd_step,
                )?,
                Side::Y => gd_minimize(
                    |y| -problem.eval(fixed, y),
                    |y| -problem.grad(fixed, y).expect("gradient checked above").1,
                    z,
                    spec.tau,
                    spec.gd_step,
                )?,
            };
            state.charge(&r);
            Ok(r)
        }
    }
}

/// `|z_out - z*|²_A / |z_in - z*|²_A`, the contraction an oracle call
/// actually achieved.
pub fn realized_epsilon(z_in: &Vector, z_out: &Vector, z_star: &Vector, a: &Matrix) -> Result<f64> {
    let l = z_star.len();
    if z_in.len() != l || z_out.len() != l || a.shape() != (l, l) {
        return Err(Error::DimensionMismatch(format!(
            "realized_epsilon: z_in {}, z_out {}, z* {l}, A {:?}",
            z_in.len(),
            z_out.len(),
            a.shape()
        )));
    }
    let sq = |d: Vector| d.dot(&(a * &d));
    let den = sq(z_in - z_star);
    if !(den > 0.0) {
        return Err(Error::Degenerate("z_in coincides with z* under A".into()));
    }
    Ok(sq(z_out - z_star) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{f3_saddle, make_f1, make_f3};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn exact_oracle_examples() {
        let p = make_f1(1, 1, 1.0).unwrap();
        let r = exact_oracle(&p, Side::Y, &v(&[1.0])).unwrap();
        assert_eq!(r.z_out, v(&[1.0]));
        assert_eq!(r.f_calls_used, 1);
        let p = make_f1(2, 2, 2.0).unwrap();
        assert_eq!(exact_oracle(&p, Side::X, &v(&[1.0, 0.0])).unwrap().z_out, v(&[-2.0, 0.0]));
        let (xs, ys) = f3_saddle();
        let r = exact_oracle(&make_f3(), Side::X, &v(&[ys])).unwrap();
        assert_relative_eq!(r.z_out[0], xs);
    }

    #[test]
    fn exact_oracle_missing_map_is_an_error() {
        assert!(matches!(exact_oracle(&make_f3(), Side::Y, &v(&[0.0])), Err(Error::MissingCapability { .. })));
    }

    #[test]
    fn exact_oracle_has_zero_epsilon() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = make_f1(4, 4, 1.7).unwrap();
        let a = Matrix::identity(4, 4) * (1.0 + 1.7 * 1.7);
        for _ in 0..50 {
            let y = Vector::from_fn(4, |_, _| rng.gen_range(-3.0..3.0));
            let x_in = Vector::from_fn(4, |_, _| rng.gen_range(-3.0..3.0));
            let r = exact_oracle(&p, Side::X, &y).unwrap();
            let x_star = p.argmin_x(&y).unwrap();
            assert!(realized_epsilon(&x_in, &r.z_out, &x_star, &a).unwrap() <= 1e-20);
        }
    }

    #[test]
    fn es_step_factor() {
        let c = (1.0 / (2.0f64 * 2.0).sqrt()).exp();
        assert_relative_eq!(c, 1.6487212707, epsilon = 1e-10);
    }

    fn sphere(z: &Vector) -> f64 {
        z.norm_squared()
    }

    #[test]
    fn es_on_sphere_reaches_small_epsilon() {
        let z0 = Vector::from_element(10, 1.0);
        let mut eps: Vec<f64> = (0..100)
            .map(|seed| {
                let mut st = OracleState::seeded(2.0, 2.0, seed).unwrap();
                let r = es_minimize(sphere, &z0, None, &mut st, 5, None).unwrap();
                assert!(r.f_value <= sphere(&z0));
                r.f_value / sphere(&z0)
            })
            .collect();
        eps.sort_by(f64::total_cmp);
        let median = 0.5 * (eps[49] + eps[50]);
        assert!(median < 5e-3, "median eps = {median}");
    }

    #[test]
    fn es_is_reproducible_and_counts_proposals() {
        let z0 = v(&[1.0, -2.0, 0.5]);
        let run = || {
            let mut st = OracleState::seeded(1.0, 2.0, 99).unwrap();
            let r = es_minimize(sphere, &z0, Some(sphere(&z0)), &mut st, 3, None).unwrap();
            (r, st.step_size(), st.f_calls())
        };
        let (a, sa, fa) = run();
        let (b, sb, fb) = run();
        assert_eq!(a, b);
        assert_eq!(sa.to_bits(), sb.to_bits());
        assert_eq!(fa, fb);
        assert_eq!(a.f_calls_used, a.proposals);
        assert_eq!(fa, a.f_calls_used);

        let mut st = OracleState::seeded(1.0, 2.0, 99).unwrap();
        let r = es_minimize(sphere, &z0, None, &mut st, 3, None).unwrap();
        assert_eq!(r.f_calls_used, r.proposals + 1);
    }

    #[test]
    fn es_accepted_values_never_increase() {
        let z0 = v(&[3.0, 3.0]);
        let mut st = OracleState::seeded(2.0, 2.0, 4).unwrap();
        let mut incumbent = sphere(&z0);
        let mut history = vec![incumbent];
        es_minimize(
            |z| {
                let hz = sphere(z);
                if hz <= incumbent {
                    incumbent = hz;
                    history.push(hz);
                }
                hz
            },
            &z0,
            Some(sphere(&z0)),
            &mut st,
            5,
            None,
        )
        .unwrap();
        assert!(history.windows(2).all(|w| w[1] <= w[0]));
        assert!(history.len() > 5);
    }

    #[test]
    fn es_aborts_when_no_success_is_possible() {
        let mut st = OracleState::seeded(1.0, 1.0, 0).unwrap();
        let z0 = v(&[0.0]);
        let r = es_minimize(|z| if z[0] == 0.0 { 0.0 } else { 1.0 }, &z0, Some(0.0), &mut st, 2, None).unwrap();
        assert!(r.aborted);
        assert_eq!(r.proposals, 100);
        assert_eq!(r.z_out, z0);
        assert!(st.step_size() > 0.0);
    }

    #[test]
    fn es_respects_bounds() {
        let b = BoxBounds::new(v(&[1.0, 1.0]), v(&[2.0, 2.0])).unwrap();
        let mut st = OracleState::seeded(2.0, 2.0, 5).unwrap();
        let mut inside = true;
        let r = es_minimize(
            |z| {
                inside &= z.iter().all(|c| (1.0..=2.0).contains(c));
                sphere(z)
            },
            &v(&[1.5, 1.5]),
            None,
            &mut st,
            5,
            Some(&b),
        )
        .unwrap();
        assert!(inside);
        assert!((r.z_out - v(&[1.0, 1.0])).norm() < 0.1);
    }

    #[test]
    fn gd_examples() {
        let half_sphere = |z: &Vector| 0.5 * z.norm_squared();
        let r = gd_minimize(half_sphere, |z| z.clone(), &v(&[1.5, -3.0]), 1, 1.0).unwrap();
        assert_eq!(r.z_out, v(&[0.0, 0.0]));
        assert_eq!(r.grad_calls_used, 1);
        assert_eq!(r.f_calls_used, 2);

        let r = gd_minimize(|z| 0.5 * (z[0] - 3.0).powi(2), |z| v(&[z[0] - 3.0]), &v(&[0.0]), 1, 0.5).unwrap();
        assert_relative_eq!(r.z_out[0], 1.5);
    }

    #[test]
    fn gd_stops_at_stationary_point() {
        let r = gd_minimize(|z| z[0].powi(2), |z| v(&[2.0 * z[0]]), &v(&[0.0]), 5, 1.0).unwrap();
        assert_eq!(r.grad_calls_used, 1);
        assert_eq!(r.f_calls_used, 1);
    }

    #[test]
    fn gd_on_f1_subproblem_is_accurate() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = make_f1(6, 6, 2.0).unwrap();
        let spec = OracleSpec::gd(5, 1.0);
        let a = Matrix::identity(6, 6) * 5.0;
        let mut st = OracleState::from_spec(&spec, ChaCha8Rng::seed_from_u64(0)).unwrap();
        for _ in 0..20 {
            let x = Vector::from_fn(6, |_, _| rng.gen_range(-3.0..3.0));
            let y = Vector::from_fn(6, |_, _| rng.gen_range(-3.0..3.0));
            let r = call_oracle(&spec, &p, Side::X, &x, &y, None, &mut st).unwrap();
            let eps = realized_epsilon(&x, &r.z_out, &p.argmin_x(&y).unwrap(), &a).unwrap();
            assert!(eps < 1e-6, "eps = {eps}");
            let r = call_oracle(&spec, &p, Side::Y, &y, &x, None, &mut st).unwrap();
            let eps = realized_epsilon(&y, &r.z_out, &p.argmax_y(&x).unwrap(), &a).unwrap();
            assert!(eps < 1e-6, "eps = {eps}");
        }
    }

    #[test]
    fn gd_requires_gradient() {
        let p = ProblemDef::new("nograd", 1, 1, |x, y| x[0] * y[0]).unwrap();
        let spec = OracleSpec::gd(1, 1.0);
        let mut st = OracleState::from_spec(&spec, ChaCha8Rng::seed_from_u64(0)).unwrap();
        let r = call_oracle(&spec, &p, Side::X, &v(&[0.0]), &v(&[0.0]), None, &mut st);
        assert!(matches!(r, Err(Error::MissingCapability { .. })));
    }

    #[test]
    fn realized_epsilon_examples() {
        let i2 = Matrix::identity(2, 2);
        let zs = v(&[0.0, 0.0]);
        assert_eq!(realized_epsilon(&v(&[2.0, 0.0]), &zs, &zs, &i2).unwrap(), 0.0);
        assert_eq!(realized_epsilon(&v(&[2.0, 1.0]), &v(&[2.0, 1.0]), &zs, &i2).unwrap(), 1.0);
        assert_relative_eq!(realized_epsilon(&v(&[2.0, 0.0]), &v(&[1.0, 0.0]), &zs, &i2).unwrap(), 0.25);
        assert!(matches!(realized_epsilon(&zs, &v(&[1.0, 0.0]), &zs, &i2), Err(Error::Degenerate(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(OracleSpec::default().validate().is_ok());
        assert!(OracleSpec { tau: 0, ..OracleSpec::default() }.validate().is_err());
        assert!(OracleSpec::es(5, 3.0, 2.0).validate().is_err());
        assert!(OracleSpec::gd(5, 0.0).validate().is_err());
        assert_eq!(OracleSpec::es(5, 2.0, 2.0).label(), "es-t5");
        assert_eq!("AES".parse::<OracleKind>().unwrap(), OracleKind::Es);
    }

    proptest! {
        #[test]
        fn step_size_never_exceeds_max(seed in any::<u64>(), s0 in 0.01f64..2.0, tau in 1u32..4) {
            let mut st = OracleState::seeded(s0, 2.0, seed).unwrap();
            let mut z = Vector::from_element(3, 1.0);
            for _ in 0..4 {
                let r = es_minimize(|z| z.norm_squared(), &z, None, &mut st, tau, None).unwrap();
                prop_assert!(st.step_size() > 0.0 && st.step_size() <= st.step_size_max());
                z = r.z_out;
            }
        }

        #[test]
        fn gd_never_increases_convex_quadratic(
            diag in prop::collection::vec(0.1f64..20.0, 1..5),
            start in prop::collection::vec(-5.0f64..5.0, 5),
            step in 0.01f64..5.0,
        ) {
            let n = diag.len();
            let d = Vector::from_vec(diag);
            let z0 = Vector::from_iterator(n, start.into_iter().take(n));
            let mut values = Vec::new();
            let h = |z: &Vector| 0.5 * z.dot(&d.component_mul(z));
            let mut z = z0;
            for _ in 0..5 {
                let r = gd_minimize(h, |z| d.component_mul(z), &z, 1, step).unwrap();
                values.push(r.f_value);
                z = r.z_out;
            }
            prop_assert!(values.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
