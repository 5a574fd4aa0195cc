//! Saddle problems: the [`ProblemDef`] record and the built-in benchmarks.
//!
//! A problem is a function `f(x, y)` to be minimized in `x` and maximized in
//! `y`. Everything beyond the evaluator is optional: gradients feed the
//! first-order oracle, Hessian blocks and the known saddle feed the theory
//! constants and the approximate gap, and the closed-form inner solutions
//! `x̂(y)`, `ŷ(x)` feed the exact oracle and the exact gap `G`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

pub type EvalFn = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;
pub type GradFn = Arc<dyn Fn(&Vector, &Vector) -> (Vector, Vector) + Send + Sync>;
pub type HessianFn = Arc<dyn Fn(&Vector, &Vector) -> HessianBlocks + Send + Sync>;
pub type InnerMapFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// The four blocks of the Hessian of `f` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianBlocks {
    pub xx: Matrix,
    pub xy: Matrix,
    pub yx: Matrix,
    pub yy: Matrix,
}

impl HessianBlocks {
    pub fn m(&self) -> usize {
        self.xx.nrows()
    }

    pub fn n(&self) -> usize {
        self.yy.nrows()
    }
}

/// Per-coordinate box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    lo: Vector,
    hi: Vector,
}

impl BoxBounds {
    pub fn new(lo: Vector, hi: Vector) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch(format!(
                "box bounds: lo has {} coordinates, hi has {}",
                lo.len(),
                hi.len()
            )));
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] < hi[i])) {
            return Err(invalid("bounds", format!("lo[{i}] = {} is not below hi[{i}] = {}", lo[i], hi[i])));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> &Vector {
        &self.lo
    }

    pub fn hi(&self) -> &Vector {
        &self.hi
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    /// Maps `z` into the box with [`mirror_to_box`].
    pub fn mirror(&self, z: &Vector) -> Vector {
        mirror_coords(z, &self.lo, &self.hi)
    }
}

/// A min-max problem `min_x max_y f(x, y)`.
///
/// Values are immutable once built and cheap to clone; all callbacks are
/// `Send + Sync` so one problem can be shared by concurrent trials.
#[derive(Clone)]
pub struct ProblemDef {
    name: String,
    m: usize,
    n: usize,
    eval: EvalFn,
    grad: Option<GradFn>,
    hessian: Option<HessianFn>,
    known_saddle: Option<(Vector, Vector)>,
    argmin_x: Option<InnerMapFn>,
    argmax_y: Option<InnerMapFn>,
    bounds_x: Option<BoxBounds>,
    bounds_y: Option<BoxBounds>,
}

impl fmt::Debug for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDef")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("n", &self.n)
            .field("grad", &self.grad.is_some())
            .field("hessian", &self.hessian.is_some())
            .field("known_saddle", &self.known_saddle)
            .field("argmin_x", &self.argmin_x.is_some())
            .field("argmax_y", &self.argmax_y.is_some())
            .field("bounds_x", &self.bounds_x)
            .field("bounds_y", &self.bounds_y)
            .finish()
    }
}

impl ProblemDef {
    /// Starts a custom problem from its evaluator. Optional capabilities are
    /// attached with the `with_*` builders.
    pub fn new<F>(name: impl Into<String>, m: usize, n: usize, eval: F) -> Result<Self>
    where
        F: Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static,
    {
        if m == 0 || n == 0 {
            return Err(invalid("m/n", format!("dimensions must be at least 1, got m = {m}, n = {n}")));
        }
        Ok(Self {
            name: name.into(),
            m,
            n,
            eval: Arc::new(eval),
            grad: None,
            hessian: None,
            known_saddle: None,
            argmin_x: None,
            argmax_y: None,
            bounds_x: None,
            bounds_y: None,
        })
    }

    pub fn with_grad<G>(mut self, grad: G) -> Self
    where
        G: Fn(&Vector, &Vector) -> (Vector, Vector) + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn with_hessian<H>(mut self, hessian: H) -> Self
    where
        H: Fn(&Vector, &Vector) -> HessianBlocks + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn with_known_saddle(mut self, x: Vector, y: Vector) -> Result<Self> {
        self.check_dims(&x, &y)?;
        self.known_saddle = Some((x, y));
        Ok(self)
    }

    pub fn with_argmin_x<M>(mut self, map: M) -> Self
    where
        M: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        self.argmin_x = Some(Arc::new(map));
        self
    }

    pub fn with_argmax_y<M>(mut self, map: M) -> Self
    where
        M: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        self.argmax_y = Some(Arc::new(map));
        self
    }

    pub fn with_bounds(mut self, x: Option<BoxBounds>, y: Option<BoxBounds>) -> Result<Self> {
        if let Some(b) = &x {
            if b.len() != self.m {
                return Err(Error::DimensionMismatch(format!("x bounds have {} coordinates, m = {}", b.len(), self.m)));
            }
        }
        if let Some(b) = &y {
            if b.len() != self.n {
                return Err(Error::DimensionMismatch(format!("y bounds have {} coordinates, n = {}", b.len(), self.n)));
            }
        }
        self.bounds_x = x;
        self.bounds_y = y;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &Vector, y: &Vector) -> f64 {
        (self.eval)(x, y)
    }

    pub fn has_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn grad(&self, x: &Vector, y: &Vector) -> Result<(Vector, Vector)> {
        let g = self.grad.as_ref().ok_or_else(|| self.missing("an analytic gradient"))?;
        Ok(g(x, y))
    }

    /// Analytic Hessian blocks. See `theory::fd_hessian_blocks` for problems
    /// without them.
    pub fn hessian(&self, x: &Vector, y: &Vector) -> Result<HessianBlocks> {
        let h = self.hessian.as_ref().ok_or_else(|| self.missing("analytic Hessian blocks"))?;
        Ok(h(x, y))
    }

    pub fn known_saddle(&self) -> Option<(&Vector, &Vector)> {
        self.known_saddle.as_ref().map(|(x, y)| (x, y))
    }

    pub fn require_saddle(&self) -> Result<(&Vector, &Vector)> {
        self.known_saddle().ok_or_else(|| self.missing("a known saddle point"))
    }

    pub fn has_argmin_x(&self) -> bool {
        self.argmin_x.is_some()
    }

    pub fn has_argmax_y(&self) -> bool {
        self.argmax_y.is_some()
    }

    /// `x̂(y) = argmin_x f(x, y)`.
    pub fn argmin_x(&self, y: &Vector) -> Result<Vector> {
        let map = self.argmin_x.as_ref().ok_or_else(|| self.missing("a closed-form argmin over x"))?;
        Ok(map(y))
    }

    /// `ŷ(x) = argmax_y f(x, y)`.
    pub fn argmax_y(&self, x: &Vector) -> Result<Vector> {
        let map = self.argmax_y.as_ref().ok_or_else(|| self.missing("a closed-form argmax over y"))?;
        Ok(map(x))
    }

    pub fn bounds_x(&self) -> Option<&BoxBounds> {
        self.bounds_x.as_ref()
    }

    pub fn bounds_y(&self) -> Option<&BoxBounds> {
        self.bounds_y.as_ref()
    }

    /// Whether the exact suboptimality error `G` is computable in closed form.
    pub fn has_closed_form_gap(&self) -> bool {
        self.argmin_x.is_some() && self.argmax_y.is_some()
    }

    /// The suboptimality error `G(x, y) = max_y' f(x, y') - min_x' f(x', y)`,
    /// available when both inner optimizers are known in closed form.
    pub fn gap(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let y_best = self.argmax_y(x)?;
        let x_best = self.argmin_x(y)?;
        Ok(self.eval(x, &y_best) - self.eval(&x_best, y))
    }

    pub fn check_dims(&self, x: &Vector, y: &Vector) -> Result<()> {
        if x.len() != self.m || y.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "problem `{}` expects (m, n) = ({}, {}), got ({}, {})",
                self.name,
                self.m,
                self.n,
                x.len(),
                y.len()
            )));
        }
        Ok(())
    }

    fn missing(&self, what: &'static str) -> Error {
        Error::MissingCapability { problem: self.name.clone(), what }
    }
}

/// `f1(x, y) = |x|²/2 + b xᵀy - |y|²/2`, the convex-concave quadratic.
///
/// Its saddle is the origin, the Hessian is constant (`I`, `bI`, `bI`, `-I`)
/// and both inner problems have closed-form solutions `x̂(y) = -b y`,
/// `ŷ(x) = b x`.
pub fn make_f1(m: usize, n: usize, b: f64) -> Result<ProblemDef> {
    check_square("f1", m, n, b)?;
    let p = ProblemDef::new("f1", m, n, move |x, y| 0.5 * x.norm_squared() + b * x.dot(y) - 0.5 * y.norm_squared())?
        .with_grad(move |x, y| (x + y * b, x * b - y))
        .with_hessian(move |_, _| HessianBlocks {
            xx: Matrix::identity(m, m),
            xy: Matrix::identity(m, n) * b,
            yx: Matrix::identity(n, m) * b,
            yy: -Matrix::identity(n, n),
        })
        .with_argmin_x(move |y| -(y * b))
        .with_argmax_y(move |x| x * b)
        .with_known_saddle(Vector::zeros(m), Vector::zeros(n))?;
    Ok(p)
}

/// `f2 = f1 - exp(-|x|²/2) + exp(-|y|²/2)`: convex-concave, but the Hessian
/// varies strongly enough that the global interaction condition fails for
/// large `b`.
///
/// The Hessian blocks are the exact matrices `I + e^{-|x|²/2}(I - xxᵀ)` and
/// `-I - e^{-|y|²/2}(I - yyᵀ)`; at the origin both reduce to `±2I`.
pub fn make_f2(m: usize, n: usize, b: f64) -> Result<ProblemDef> {
    check_square("f2", m, n, b)?;
    let p = ProblemDef::new("f2", m, n, move |x, y| {
        0.5 * x.norm_squared() + b * x.dot(y) - 0.5 * y.norm_squared() - (-0.5 * x.norm_squared()).exp()
            + (-0.5 * y.norm_squared()).exp()
    })?
    .with_grad(move |x, y| {
        let ex = (-0.5 * x.norm_squared()).exp();
        let ey = (-0.5 * y.norm_squared()).exp();
        (x * (1.0 + ex) + y * b, x * b - y * (1.0 + ey))
    })
    .with_hessian(move |x, y| {
        let ex = (-0.5 * x.norm_squared()).exp();
        let ey = (-0.5 * y.norm_squared()).exp();
        let xx = Matrix::identity(m, m) + (Matrix::identity(m, m) - x * x.transpose()) * ex;
        let yy = -Matrix::identity(n, n) - (Matrix::identity(n, n) - y * y.transpose()) * ey;
        HessianBlocks { xx, xy: Matrix::identity(m, n) * b, yx: Matrix::identity(n, m) * b, yy }
    })
    .with_known_saddle(Vector::zeros(m), Vector::zeros(n))?;
    Ok(p)
}

/// The local saddle `z1 = (-2 - √2, 2 + √2)` of [`make_f3`].
pub fn f3_saddle() -> (f64, f64) {
    let r = std::f64::consts::SQRT_2;
    (-2.0 - r, 2.0 + r)
}

/// The two non-saddle critical points `z0 = (0, 0)` and
/// `z2 = (-2 + √2, 2 - √2)` of [`make_f3`].
pub fn f3_nonsaddle_critical_points() -> [(f64, f64); 2] {
    let r = std::f64::consts::SQRT_2;
    [(0.0, 0.0), (-2.0 + r, 2.0 - r)]
}

/// `f3(x, y) = 2x² + 4xy + y² + (4/3)y³ - y⁴/4`, a one-dimensional
/// nonconvex-concave function with three critical points of which only
/// `z1` is a local saddle.
pub fn make_f3() -> ProblemDef {
    let (xs, ys) = f3_saddle();
    ProblemDef::new("f3", 1, 1, |x, y| {
        let (x, y) = (x[0], y[0]);
        2.0 * x * x + 4.0 * x * y + y * y + (4.0 / 3.0) * y.powi(3) - 0.25 * y.powi(4)
    })
    .expect("fixed dimensions are valid")
    .with_grad(|x, y| {
        let (x, y) = (x[0], y[0]);
        (
            Vector::from_element(1, 4.0 * x + 4.0 * y),
            Vector::from_element(1, 4.0 * x + 2.0 * y + 4.0 * y * y - y.powi(3)),
        )
    })
    .with_hessian(|_, y| {
        let y = y[0];
        HessianBlocks {
            xx: Matrix::from_element(1, 1, 4.0),
            xy: Matrix::from_element(1, 1, 4.0),
            yx: Matrix::from_element(1, 1, 4.0),
            yy: Matrix::from_element(1, 1, 2.0 + 8.0 * y - 3.0 * y * y),
        }
    })
    .with_argmin_x(|y| -y)
    .with_known_saddle(Vector::from_element(1, xs), Vector::from_element(1, ys))
    .expect("saddle has the right dimensions")
}

fn check_square(name: &str, m: usize, n: usize, b: f64) -> Result<()> {
    if m != n {
        return Err(Error::DimensionMismatch(format!("{name} needs m = n for the bilinear term, got m = {m}, n = {n}")));
    }
    if !b.is_finite() {
        return Err(invalid("b", format!("must be finite, got {b}")));
    }
    Ok(())
}

/// Built-in benchmark names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemName {
    F1,
    F2,
    F3,
}

impl fmt::Display for ProblemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemName::F1 => "f1",
            ProblemName::F2 => "f2",
            ProblemName::F3 => "f3",
        })
    }
}

impl FromStr for ProblemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" => Ok(ProblemName::F1),
            "f2" => Ok(ProblemName::F2),
            "f3" => Ok(ProblemName::F3),
            other => Err(invalid("problem", format!("unknown problem `{other}` (expected f1, f2 or f3)"))),
        }
    }
}

/// A built-in problem selected by name and parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: ProblemName,
    pub m: usize,
    pub n: usize,
    pub b: f64,
}

impl ProblemSpec {
    pub fn f1(dim: usize, b: f64) -> Self {
        Self { name: ProblemName::F1, m: dim, n: dim, b }
    }

    pub fn f2(dim: usize, b: f64) -> Self {
        Self { name: ProblemName::F2, m: dim, n: dim, b }
    }

    /// `f3` has no parameters; `b` is recorded as 0.
    pub fn f3() -> Self {
        Self { name: ProblemName::F3, m: 1, n: 1, b: 0.0 }
    }

    pub fn build(&self) -> Result<ProblemDef> {
        match self.name {
            ProblemName::F1 => make_f1(self.m, self.n, self.b),
            ProblemName::F2 => make_f2(self.m, self.n, self.b),
            ProblemName::F3 => {
                if self.m != 1 || self.n != 1 {
                    return Err(Error::DimensionMismatch(format!(
                        "f3 is fixed at m = n = 1, got m = {}, n = {}",
                        self.m, self.n
                    )));
                }
                Ok(make_f3())
            }
        }
    }
}

/// Folds each coordinate of `z` into `[lo, hi]` with the triangle-wave map
/// `u ↦ 1 - |mod(u, 2) - 1|` applied to the box rescaled to `[0, 1]`.
///
/// Coordinates already inside the box are returned unchanged, so the map is
/// exactly idempotent.
pub fn mirror_to_box(z: &Vector, lo: &Vector, hi: &Vector) -> Result<Vector> {
    let bounds = BoxBounds::new(lo.clone(), hi.clone())?;
    if z.len() != bounds.len() {
        return Err(Error::DimensionMismatch(format!("point has {} coordinates, box has {}", z.len(), bounds.len())));
    }
    Ok(bounds.mirror(z))
}

fn mirror_coords(z: &Vector, lo: &Vector, hi: &Vector) -> Vector {
    Vector::from_fn(z.len(), |i, _| {
        let (v, l, h) = (z[i], lo[i], hi[i]);
        if (l..=h).contains(&v) {
            return v;
        }
        let width = h - l;
        let u = (v - l) / width;
        let folded = 1.0 - ((u.rem_euclid(2.0)) - 1.0).abs();
        (l + folded * width).clamp(l, h)
    })
}
