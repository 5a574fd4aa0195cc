//! Closed-form convergence constants of the averaged oracle iteration.
//!
//! Everything here is derived from the Hessian blocks at a strict saddle
//! `(x*, y*)`:
//!
//! * the G-matrices `G_xx = H_xx + H_xy (-H_yy)^{-1} H_yx` and
//!   `G_yy = -H_yy + H_yx H_xx^{-1} H_xy`, which define the approximate gap
//!   `G̃(x, y) = |x - x*|²_{G_xx} / 2 + |y - y*|²_{G_yy} / 2`;
//! * the interaction strength `σ̄`, the greatest singular value of
//!   `√G_xx H_xx^{-1} H_xy √G_yy^{-1}`;
//! * the learning-rate threshold `η̄`, the per-step rate bound `γ̄(η)`, and
//!   the rate-optimal pair `(η*, γ̄*)`.
//!
//! The neighborhood radii of the local theorem have no computational
//! counterpart; oracles run unrestricted (radius = ∞).

pub mod linalg;

use crate::error::{invalid, Error, Result};
use crate::problems::{HessianBlocks, Matrix, ProblemDef, Vector};

pub use linalg::{greatest_singular_value, is_spd, spd_inv_sqrt, spd_sqrt, symmetrize};

/// Default central-difference step for [`fd_hessian_blocks`].
pub const FD_STEP: f64 = 1e-4;

/// Tolerance for the agreement of the two `σ̄` formulations.
pub const SIGMA_BAR_AGREEMENT: f64 = 1e-10;

/// The G-matrices at a point, both symmetrized.
///
/// Requires `H_xx ≻ 0` and `-H_yy ≻ 0`.
pub fn g_matrices(h: &HessianBlocks) -> Result<(Matrix, Matrix)> {
    check_blocks(h)?;
    let neg_yy = -&h.yy;
    // (-H_yy)^{-1} H_yx and H_xx^{-1} H_xy
    let yy_inv_yx = linalg::spd_solve(&neg_yy, &h.yx, "-H_yy")?;
    let xx_inv_xy = linalg::spd_solve(&h.xx, &h.xy, "H_xx")?;
    let gxx = symmetrize(&(&h.xx + &h.xy * yy_inv_yx));
    let gyy = symmetrize(&(neg_yy + &h.yx * xx_inv_xy));
    Ok((gxx, gyy))
}

fn check_blocks(h: &HessianBlocks) -> Result<()> {
    let (m, n) = (h.xx.nrows(), h.yy.nrows());
    let ok = h.xx.ncols() == m
        && h.yy.ncols() == n
        && h.xy.shape() == (m, n)
        && h.yx.shape() == (n, m);
    if !ok {
        return Err(Error::DimensionMismatch(format!(
            "Hessian blocks have shapes xx {:?}, xy {:?}, yx {:?}, yy {:?}",
            h.xx.shape(),
            h.xy.shape(),
            h.yx.shape(),
            h.yy.shape()
        )));
    }
    Ok(())
}

/// Interaction strength `σ̄` at the saddle.
///
/// Computed as the greatest singular value of `√G_xx H_xx^{-1} H_xy √G_yy^{-1}`
/// and cross-checked against the equivalent `√G_xx^{-1} H_xy (-H_yy)^{-1} √G_yy`;
/// the two must agree within [`SIGMA_BAR_AGREEMENT`] (relative).
pub fn sigma_bar(hxx: &Matrix, hxy: &Matrix, hyy: &Matrix, gxx: &Matrix, gyy: &Matrix) -> Result<f64> {
    let (first, second) = sigma_bar_forms(hxx, hxy, hyy, gxx, gyy)?;
    if (first - second).abs() > SIGMA_BAR_AGREEMENT * first.max(1.0) {
        return Err(Error::Inconsistent(format!("sigma_bar formulations disagree: {first} vs {second}")));
    }
    Ok(first)
}

/// Both formulations of `σ̄`, unchecked.
pub fn sigma_bar_forms(hxx: &Matrix, hxy: &Matrix, hyy: &Matrix, gxx: &Matrix, gyy: &Matrix) -> Result<(f64, f64)> {
    let sq_gxx = spd_sqrt(gxx)?;
    let sq_gyy = spd_sqrt(gyy)?;
    let isq_gxx = spd_inv_sqrt(gxx)?;
    let isq_gyy = spd_inv_sqrt(gyy)?;
    let xx_inv_xy = linalg::solve(hxx, hxy, "H_xx")?;
    let neg_yy = -hyy;
    // (-H_yy)^{-1} as a right factor: X (-H_yy)^{-1} = ((-H_yy)^{-T} Xᵀ)ᵀ
    let xy_yy_inv = linalg::solve(&neg_yy.transpose(), &hxy.transpose(), "-H_yy")?.transpose();
    let first = greatest_singular_value(&(&sq_gxx * xx_inv_xy * &isq_gyy));
    let second = greatest_singular_value(&(&isq_gxx * xy_yy_inv * &sq_gyy));
    Ok((first, second))
}

fn check_rate_inputs(sigma_bar: f64, eps: f64) -> Result<()> {
    if !(sigma_bar >= 0.0) || !sigma_bar.is_finite() {
        return Err(invalid("sigma_bar", format!("must be finite and nonnegative, got {sigma_bar}")));
    }
    if !(eps >= 0.0) {
        return Err(invalid("eps_bar", format!("must be nonnegative, got {eps}")));
    }
    Ok(())
}

/// Learning-rate threshold of the global theorem,
/// `η̄ = 2(1 - (ε̄ + δ)) / (1 + σ̄² - (ε̄ + δ)²)`.
pub fn eta_bar_global(sigma_bar: f64, eps_bar: f64, delta: f64) -> Result<f64> {
    check_rate_inputs(sigma_bar, eps_bar)?;
    if !(delta >= 0.0) {
        return Err(invalid("delta", format!("must be nonnegative, got {delta}")));
    }
    let e = eps_bar + delta;
    if e >= 1.0 {
        return Err(Error::NoGuarantee(e));
    }
    Ok(2.0 * (1.0 - e) / (1.0 + sigma_bar * sigma_bar - e * e))
}

/// Learning-rate threshold of the local theorem: [`eta_bar_global`] with
/// `δ = 0`.
pub fn eta_bar_local(sigma_bar: f64, eps_bar: f64) -> Result<f64> {
    eta_bar_global(sigma_bar, eps_bar, 0.0)
}

/// Per-step contraction bound `γ̄(η) = √((1-η)² + η²σ̄²) + η(ε̄ + δ)` of
/// `√G̃`.
pub fn gamma_bar(eta: f64, sigma_bar: f64, eps_bar_plus_delta: f64) -> f64 {
    ((1.0 - eta).powi(2) + eta * eta * sigma_bar * sigma_bar).sqrt() + eta * eps_bar_plus_delta
}

/// The minimizer `η*` of [`gamma_bar`] (with `δ = 0`) and the optimal rate
/// `γ̄* = γ̄(η*)`.
pub fn eta_star_gamma_star(sigma_bar: f64, eps_bar: f64) -> Result<(f64, f64)> {
    check_rate_inputs(sigma_bar, eps_bar)?;
    if eps_bar >= 1.0 {
        return Err(Error::NoGuarantee(eps_bar));
    }
    let s2 = sigma_bar * sigma_bar;
    let e2 = eps_bar * eps_bar;
    let root = (1.0 - e2 + s2).sqrt();
    let eta_star = (1.0 - (s2 * e2 / (1.0 - e2 + s2)).sqrt()) / (1.0 + s2);
    // γ̄(η*) simplified; equals σ̄/√(1+σ̄²) at ε̄ = 0 and tends to 1 as ε̄ → 1
    let gamma_star = (sigma_bar * (1.0 + s2) + eps_bar * root - e2 * sigma_bar) / ((1.0 + s2) * root);
    Ok((eta_star, gamma_star))
}

/// `G̃(x, y) = |x - x*|²_{G_xx}/2 + |y - y*|²_{G_yy}/2`.
pub fn g_tilde(x: &Vector, y: &Vector, x_star: &Vector, y_star: &Vector, gxx: &Matrix, gyy: &Matrix) -> Result<f64> {
    let (m, n) = (x_star.len(), y_star.len());
    if x.len() != m || y.len() != n || gxx.shape() != (m, m) || gyy.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "g_tilde: x {} / x* {} / Gxx {:?}, y {} / y* {} / Gyy {:?}",
            x.len(),
            m,
            gxx.shape(),
            y.len(),
            n,
            gyy.shape()
        )));
    }
    Ok(quad_gap(x, y, x_star, y_star, gxx, gyy))
}

fn quad_gap(x: &Vector, y: &Vector, x_star: &Vector, y_star: &Vector, gxx: &Matrix, gyy: &Matrix) -> f64 {
    let dx = x - x_star;
    let dy = y - y_star;
    0.5 * dx.dot(&(gxx * &dx)) + 0.5 * dy.dot(&(gyy * &dy))
}

/// Central-difference Hessian blocks.
///
/// Differentiates the analytic gradient when the problem has one, otherwise
/// takes second differences of `eval`. The full Hessian is symmetrized before
/// it is split, so `yx == xyᵀ` holds exactly.
pub fn fd_hessian_blocks(problem: &ProblemDef, x: &Vector, y: &Vector, h: f64) -> Result<HessianBlocks> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid("h", format!("finite-difference step must be positive, got {h}")));
    }
    problem.check_dims(x, y)?;
    let (m, n) = (problem.m(), problem.n());
    let d = m + n;
    let z = Vector::from_iterator(d, x.iter().chain(y.iter()).copied());
    let split = |z: &Vector| (z.rows(0, m).into_owned(), z.rows(m, n).into_owned());
    let mut full = Matrix::zeros(d, d);
    if problem.has_grad() {
        let grad = |z: &Vector| -> Result<Vector> {
            let (x, y) = split(z);
            let (gx, gy) = problem.grad(&x, &y)?;
            Ok(Vector::from_iterator(d, gx.iter().chain(gy.iter()).copied()))
        };
        for j in 0..d {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[j] += h;
            zm[j] -= h;
            let col = (grad(&zp)? - grad(&zm)?) / (2.0 * h);
            full.set_column(j, &col);
        }
    } else {
        let f = |z: &Vector| {
            let (x, y) = split(z);
            problem.eval(&x, &y)
        };
        for i in 0..d {
            for j in i..d {
                let shifted = |si: f64, sj: f64| {
                    let mut w = z.clone();
                    w[i] += si * h;
                    w[j] += sj * h;
                    f(&w)
                };
                let v = (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0) + shifted(-1.0, -1.0)) / (4.0 * h * h);
                full[(i, j)] = v;
                full[(j, i)] = v;
            }
        }
    }
    let full = symmetrize(&full);
    let xy = full.view((0, m), (m, n)).into_owned();
    Ok(HessianBlocks {
        xx: full.view((0, 0), (m, m)).into_owned(),
        yx: xy.transpose(),
        xy,
        yy: full.view((m, m), (n, n)).into_owned(),
    })
}

/// Hessian blocks from the problem if it has them, else by finite
/// differences with [`FD_STEP`].
pub fn hessian_at(problem: &ProblemDef, x: &Vector, y: &Vector) -> Result<HessianBlocks> {
    if problem.has_hessian() {
        problem.hessian(x, y)
    } else {
        fd_hessian_blocks(problem, x, y, FD_STEP)
    }
}

/// The approximate gap `G̃` around a problem's known saddle, with the
/// G-matrices computed once.
#[derive(Debug, Clone)]
pub struct QuadraticGap {
    x_star: Vector,
    y_star: Vector,
    gxx: Matrix,
    gyy: Matrix,
}

impl QuadraticGap {
    pub fn new(problem: &ProblemDef) -> Result<Self> {
        let (xs, ys) = problem.require_saddle()?;
        let h = hessian_at(problem, xs, ys)?;
        let (gxx, gyy) = g_matrices(&h)?;
        Ok(Self { x_star: xs.clone(), y_star: ys.clone(), gxx, gyy })
    }

    pub fn eval(&self, x: &Vector, y: &Vector) -> f64 {
        quad_gap(x, y, &self.x_star, &self.y_star, &self.gxx, &self.gyy)
    }

    pub fn gxx(&self) -> &Matrix {
        &self.gxx
    }

    pub fn gyy(&self) -> &Matrix {
        &self.gyy
    }
}

/// Empirical lower bound on `δ`: the largest whitened deviation of
/// `H_xx^{-1} H_xy` and `H_yy^{-1} H_yx` from their saddle values over the
/// sample points. A diagnostic, not a certificate.
pub fn delta_bound(problem: &ProblemDef, samples: &[(Vector, Vector)]) -> Result<f64> {
    let (xs, ys) = problem.require_saddle()?;
    let hs = hessian_at(problem, xs, ys)?;
    let (gxx, gyy) = g_matrices(&hs)?;
    let sq_gxx = spd_sqrt(&gxx)?;
    let sq_gyy = spd_sqrt(&gyy)?;
    let isq_gxx = spd_inv_sqrt(&gxx)?;
    let isq_gyy = spd_inv_sqrt(&gyy)?;
    let ref_xy = linalg::solve(&hs.xx, &hs.xy, "H*_xx")?;
    let ref_yx = linalg::solve(&hs.yy, &hs.yx, "H*_yy")?;
    let mut delta: f64 = 0.0;
    for (x, y) in samples {
        problem.check_dims(x, y)?;
        let h = hessian_at(problem, x, y)?;
        let d_xy = linalg::solve(&h.xx, &h.xy, "H_xx")? - &ref_xy;
        let d_yx = linalg::solve(&h.yy, &h.yx, "H_yy")? - &ref_yx;
        delta = delta
            .max(greatest_singular_value(&(&sq_gxx * d_xy * &isq_gyy)))
            .max(greatest_singular_value(&(&sq_gyy * d_yx * &isq_gxx)));
    }
    Ok(delta)
}

/// Sample points `(x* + u e₁, y* + v e₁)` for `(u, v)` on a uniform
/// `resolution × resolution` grid over `[-half_width, half_width]²`.
pub fn axis_grid_samples(problem: &ProblemDef, half_width: f64, resolution: usize) -> Result<Vec<(Vector, Vector)>> {
    let (xs, ys) = problem.require_saddle()?;
    if resolution < 2 {
        return Err(invalid("resolution", "need at least 2 points per axis"));
    }
    let step = 2.0 * half_width / (resolution - 1) as f64;
    let mut out = Vec::with_capacity(resolution * resolution);
    for i in 0..resolution {
        for j in 0..resolution {
            let mut x = xs.clone();
            let mut y = ys.clone();
            x[0] += -half_width + step * i as f64;
            y[0] += -half_width + step * j as f64;
            out.push((x, y));
        }
    }
    Ok(out)
}

/// Theory constants of a problem at its known saddle.
#[derive(Debug, Clone)]
pub struct TheoryConstants {
    pub hessian_star: HessianBlocks,
    pub gxx_star: Matrix,
    pub gyy_star: Matrix,
    pub sigma_bar: f64,
    pub eps_bar: f64,
    pub delta: f64,
    /// `None` when `eps_bar + delta >= 1`.
    pub eta_bar_global: Option<f64>,
    pub eta_bar_local: f64,
    pub eta_star: f64,
    pub gamma_bar_star: f64,
}

impl TheoryConstants {
    pub fn at_saddle(problem: &ProblemDef, eps_bar: f64, delta: f64) -> Result<Self> {
        let (xs, ys) = problem.require_saddle()?;
        let h = hessian_at(problem, xs, ys)?;
        let (gxx, gyy) = g_matrices(&h)?;
        let sb = sigma_bar(&h.xx, &h.xy, &h.yy, &gxx, &gyy)?;
        let eta_bar_global = match eta_bar_global(sb, eps_bar, delta) {
            Ok(v) => Some(v),
            Err(Error::NoGuarantee(_)) => None,
            Err(e) => return Err(e),
        };
        let eta_bar_local = eta_bar_local(sb, eps_bar)?;
        let (eta_star, gamma_bar_star) = eta_star_gamma_star(sb, eps_bar)?;
        Ok(Self {
            hessian_star: h,
            gxx_star: gxx,
            gyy_star: gyy,
            sigma_bar: sb,
            eps_bar,
            delta,
            eta_bar_global,
            eta_bar_local,
            eta_star,
            gamma_bar_star,
        })
    }

    pub fn gamma_bar(&self, eta: f64) -> f64 {
        gamma_bar(eta, self.sigma_bar, self.eps_bar + self.delta)
    }
}
