//! Brute-force references for the closed forms used elsewhere in the crate.
//!
//! Everything here is deliberately naive: grid search, enumeration of sign
//! patterns or vertices, and definitions evaluated literally. They are meant
//! for desk-size inputs and are shipped so that runtime verification reports
//! can be produced.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm1, norm2, norm_inf};
use crate::operators::{DenseMatrix, LinearOperator};
use crate::penalties::Misfit;
use crate::problem::Problem;
use crate::regularizers::{Cone, GaugeNorm, QsCurvature, Regularizer};
use crate::value_fn::evaluate;

/// One oracle-versus-library comparison.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleReport {
    pub quantity: String,
    pub oracle: f64,
    pub library: f64,
    pub abs_err: f64,
    /// `abs_err / |oracle|`, or 0 when both agree exactly.
    pub rel_err: f64,
}

impl OracleReport {
    pub fn scalar(quantity: impl Into<String>, oracle: f64, library: f64) -> Self {
        let abs_err = (oracle - library).abs();
        Self {
            quantity: quantity.into(),
            oracle,
            library,
            abs_err,
            rel_err: relative(abs_err, oracle.abs()),
        }
    }

    /// Vector comparison: the values are Euclidean norms and the errors use
    /// the max-norm of the difference.
    pub fn vector(quantity: impl Into<String>, oracle: &[f64], library: &[f64]) -> Self {
        let abs_err = oracle
            .iter()
            .zip(library)
            .map(|(a, b)| (a - b).abs())
            .fold(if oracle.len() == library.len() { 0.0 } else { f64::INFINITY }, f64::max);
        Self {
            quantity: quantity.into(),
            oracle: norm2(oracle),
            library: norm2(library),
            abs_err,
            rel_err: relative(abs_err, norm_inf(oracle)),
        }
    }

    /// Passes when either the absolute or the relative discrepancy is within
    /// its tolerance.
    pub fn within(&self, abs_tol: f64, rel_tol: f64) -> bool {
        self.abs_err <= abs_tol || self.rel_err <= rel_tol
    }
}

fn relative(abs_err: f64, scale: f64) -> f64 {
    if abs_err == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        abs_err / scale
    }
}

/// Grid for [`brute_force_value`]: a uniform grid with spacing `step`, then
/// `refinements` rounds of `refine_points` per axis over a window of `±2h`
/// around the incumbent, where `h` is the previous spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSpec {
    pub step: f64,
    pub refinements: usize,
    pub refine_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            step: 1e-2,
            refinements: 2,
            refine_points: 41,
        }
    }
}

const MAX_GRID_DIM: usize = 3;
const MAX_GRID_POINTS: usize = 20_000_000;

/// `min ρ(b − Ax)` over the feasible points of a grid covering
/// `lev(φ, τ)`. The error is `O(h²)` for smooth `ρ` at interior minimizers.
pub fn brute_force_value<A: LinearOperator>(problem: &Problem<A>, tau: f64, grid: &GridSpec) -> Result<f64> {
    let n = problem.cols();
    if n > MAX_GRID_DIM {
        return Err(Error::TooLarge { n, max: MAX_GRID_DIM });
    }
    if !(tau >= 0.0 && tau.is_finite()) || !(grid.step > 0.0) || grid.refine_points < 2 {
        return Err(Error::InvalidParameter(alloc::format!(
            "bad grid search request: tau = {tau}, {grid:?}"
        )));
    }
    let reg = &problem.regularizer;
    let radius = box_radius(reg, tau);
    let (lower, upper): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|i| {
            let constrained = matches!(reg, Regularizer::Gauge { cone, .. } if cone.constrains(i));
            (if constrained { 0.0 } else { -radius }, radius)
        })
        .unzip();
    let slack = 1e-12 * tau.max(1.0);
    let mut r = vec![0.0; problem.rows()];
    let mut objective = |x: &[f64]| -> f64 {
        if reg.value(x) > tau + slack {
            return f64::INFINITY;
        }
        problem.op.apply_into(x, &mut r);
        r.iter_mut().zip(&problem.b).for_each(|(ri, bi)| *ri = bi - *ri);
        problem.misfit.value(&r)
    };

    let mut h = grid.step;
    let axes: Vec<Vec<f64>> = (0..n).map(|i| axis_points(lower[i], upper[i], 0.0, h)).collect();
    let (mut best, mut best_x) = grid_min(&axes, &mut objective)?;
    for _ in 0..grid.refinements {
        let h_new = 4.0 * h / (grid.refine_points - 1) as f64;
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let c = best_x[i];
                axis_points((c - 2.0 * h).max(lower[i]), (c + 2.0 * h).min(upper[i]), c, h_new)
            })
            .collect();
        let (v, x) = grid_min(&axes, &mut objective)?;
        if v < best {
            best = v;
            best_x = x;
        }
        h = h_new;
    }
    Ok(best)
}

/// Half-width of a box containing `lev(φ, τ)`.
fn box_radius(reg: &Regularizer, tau: f64) -> f64 {
    match *reg {
        Regularizer::Gauge { .. } => tau,
        Regularizer::Qs {
            kappa,
            curvature: QsCurvature::Identity,
        } => libm::sqrt(2.0 * tau).max(tau / kappa + 0.5 * kappa),
        Regularizer::Qs {
            kappa,
            curvature: QsCurvature::Zero,
        } => tau / kappa,
        Regularizer::Vapnik { epsilon } => tau + epsilon,
    }
}

/// `anchor + k·h` inside `[lo, hi]`, plus both ends.
fn axis_points(lo: f64, hi: f64, anchor: f64, h: f64) -> Vec<f64> {
    let mut pts = vec![lo];
    let k0 = libm::ceil((lo - anchor) / h) as i64;
    let k1 = libm::floor((hi - anchor) / h) as i64;
    for k in k0..=k1 {
        let p = anchor + k as f64 * h;
        if p > lo && p < hi {
            pts.push(p);
        }
    }
    if hi > lo {
        pts.push(hi);
    }
    pts
}

fn grid_min(axes: &[Vec<f64>], f: &mut impl FnMut(&[f64]) -> f64) -> Result<(f64, Vec<f64>)> {
    let total = axes
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.len()))
        .unwrap_or(usize::MAX);
    if total > MAX_GRID_POINTS {
        return Err(Error::TooLarge {
            n: total,
            max: MAX_GRID_POINTS,
        });
    }
    let n = axes.len();
    let mut idx = vec![0usize; n];
    let mut x: Vec<f64> = axes.iter().map(|a| a[0]).collect();
    let mut best = f64::INFINITY;
    let mut best_x = x.clone();
    loop {
        let v = f(&x);
        if v < best {
            best = v;
            best_x.copy_from_slice(&x);
        }
        let mut d = 0;
        loop {
            if d == n {
                return Ok((best, best_x));
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                x[d] = axes[d][idx[d]];
                break;
            }
            idx[d] = 0;
            x[d] = axes[d][0];
            d += 1;
        }
    }
}

const MAX_QP_DIM: usize = 6;

/// Exact projection onto a polyhedral level set by enumerating sign
/// patterns `σ ∈ {−1, 0, 1}ⁿ`. On each face the candidates are `x`
/// restricted to the support and its projection onto the hyperplane
/// `⟨σ, y⟩ = radius`; the nearest feasible candidate wins.
pub fn projection_qp_oracle(reg: &Regularizer, x: &[f64], tau: f64) -> Result<Vec<f64>> {
    let n = x.len();
    if n > MAX_QP_DIM {
        return Err(Error::TooLarge { n, max: MAX_QP_DIM });
    }
    let (radius, cone) = match *reg {
        Regularizer::Gauge {
            norm: GaugeNorm::L1,
            cone,
        } => (tau, cone),
        Regularizer::Qs {
            kappa,
            curvature: QsCurvature::Zero,
        } => (tau / kappa, Cone::Free),
        _ => {
            return Err(Error::Unsupported {
                op: "projection_qp_oracle",
                kind: reg.kind_name(),
            })
        }
    };
    // Cancellation in the tight candidate scales with ‖x‖₁.
    let slack = 1e-13 * (radius + norm1(x));
    let feasible = |y: &[f64]| cone.contains(y) && norm1(y) <= radius + slack;

    let mut best = vec![0.0; n];
    let mut best_d = norm2(x);
    let mut signs = vec![0i8; n];
    let patterns = 3usize.pow(n as u32);
    for code in 0..patterns {
        let mut c = code;
        for s in signs.iter_mut() {
            *s = (c % 3) as i8 - 1;
            c /= 3;
        }
        if signs.iter().enumerate().any(|(i, &s)| s < 0 && cone.constrains(i)) {
            continue;
        }
        let support = signs.iter().filter(|&&s| s != 0).count();
        if support == 0 {
            continue;
        }
        let free: Vec<f64> = x
            .iter()
            .zip(&signs)
            .map(|(&xi, &s)| if s == 0 { 0.0 } else { xi })
            .collect();
        let excess = x
            .iter()
            .zip(&signs)
            .map(|(&xi, &s)| f64::from(s) * xi)
            .sum::<f64>()
            - radius;
        let lambda = excess / support as f64;
        let tight: Vec<f64> = free
            .iter()
            .zip(&signs)
            .map(|(&yi, &s)| yi - lambda * f64::from(s))
            .collect();
        for y in [free, tight] {
            let on_face = y.iter().zip(&signs).all(|(&yi, &s)| f64::from(s) * yi >= 0.0);
            if on_face && feasible(&y) {
                let d = crate::linalg::dist2(x, &y);
                if d < best_d {
                    best_d = d;
                    best = y;
                }
            }
        }
    }
    Ok(best)
}

/// Central difference `(v(τ + h) − v(τ − h)) / 2h` with tight solves.
pub fn fd_derivative<A: LinearOperator>(problem: &Problem<A>, tau: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || !(tau - h >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "need h > 0 and tau - h >= 0, got tau = {tau}, h = {h}"
        )));
    }
    let tol = 1e-12;
    let plus = evaluate(problem, tau + h, tol)?.value;
    let minus = evaluate(problem, tau - h, tol)?.value;
    Ok((plus - minus) / (2.0 * h))
}

/// `(φ*)^π(s, μ)` evaluated from the definition of each catalog kind:
/// `μ φ*(s/μ)` for `μ > 0` and the horizon function `δ(s | X°)`-style limit
/// at `μ = 0`.
pub fn conjugate_perspective(reg: &Regularizer, s: &[f64], mu: f64) -> f64 {
    if mu < 0.0 {
        return f64::INFINITY;
    }
    let indicator = |ok: bool| if ok { 0.0 } else { f64::INFINITY };
    match *reg {
        // φ* = δ(· | U° + X°); X° is nonpositive on constrained coordinates
        // and {0} elsewhere, so the best polar-cone component clips those
        // coordinates at zero.
        Regularizer::Gauge { norm, cone } => {
            let rest: Vec<f64> = s
                .iter()
                .enumerate()
                .map(|(i, &si)| if cone.constrains(i) { si - si.min(0.0) } else { si })
                .collect();
            let dual = match norm {
                GaugeNorm::L1 => norm_inf(&rest),
                GaugeNorm::L2 => norm2(&rest),
            };
            indicator(dual <= mu)
        }
        // φ* = δ_U + ½‖·‖²_B with U = [−κ, κ]ⁿ.
        Regularizer::Qs { kappa, curvature } => {
            let in_box = norm_inf(s) <= kappa * mu;
            let quad = match curvature {
                QsCurvature::Identity => dot(s, s),
                QsCurvature::Zero => 0.0,
            };
            if !in_box {
                f64::INFINITY
            } else if quad == 0.0 {
                0.0
            } else {
                quad / (2.0 * mu)
            }
        }
        // φ* = ε‖·‖₁ + δ(‖·‖∞ ≤ 1).
        Regularizer::Vapnik { epsilon } => epsilon * norm1(s) + indicator(norm_inf(s) <= mu),
    }
}

/// `argmin_{μ ≥ 0} τμ + (φ*)^π(s, μ)` by scanning `{0}` and a log grid on
/// `[1e−8, 1e8]`, then golden-section search between the neighbours of the
/// best grid point.
pub fn mu_grid_oracle(reg: &Regularizer, s: &[f64], tau: f64) -> f64 {
    let f = |mu: f64| tau * mu + conjugate_perspective(reg, s, mu);
    const PER_DECADE: usize = 20;
    let mut grid = vec![0.0];
    grid.extend((0..=16 * PER_DECADE).map(|k| libm::pow(10.0, -8.0 + k as f64 / PER_DECADE as f64)));
    let (best_k, best_v) = grid
        .iter()
        .enumerate()
        .map(|(k, &mu)| (k, f(mu)))
        .fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    if !best_v.is_finite() {
        return f64::INFINITY;
    }
    let mut a = grid[best_k.saturating_sub(1)];
    let mut b = grid[(best_k + 1).min(grid.len() - 1)];
    let ratio = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 1e-15 * b.max(f64::MIN_POSITIVE) {
            break;
        }
        // Ties go left so the search settles on the smallest minimizer.
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let candidates = [grid[best_k], a, b, c, d];
    candidates
        .iter()
        .copied()
        .map(|mu| (mu, f(mu)))
        .fold((grid[best_k], best_v), |acc, (mu, v)| if v < acc.1 { (mu, v) } else { acc })
        .0
}

/// `σ(z | lev(φ, τ))` as the best vertex of a polyhedral level set.
pub fn support_vertex_oracle(reg: &Regularizer, z: &[f64], tau: f64) -> Result<f64> {
    let n = z.len();
    let unit = |i: usize, t: f64| {
        let mut v = vec![0.0; n];
        v[i] = t;
        v
    };
    let mut vertices: Vec<Vec<f64>> = vec![vec![0.0; n]];
    match *reg {
        Regularizer::Gauge {
            norm: GaugeNorm::L1,
            cone,
        } => {
            for i in 0..n {
                vertices.push(unit(i, tau));
                if !cone.constrains(i) {
                    vertices.push(unit(i, -tau));
                }
            }
        }
        Regularizer::Qs {
            kappa,
            curvature: QsCurvature::Zero,
        } => {
            for i in 0..n {
                vertices.push(unit(i, tau / kappa));
                vertices.push(unit(i, -tau / kappa));
            }
        }
        // The level set is the box [−ε, ε]ⁿ plus the ℓ1 ball of radius τ.
        Regularizer::Vapnik { epsilon } => {
            if n > 16 {
                return Err(Error::TooLarge { n, max: 16 });
            }
            vertices.clear();
            for mask in 0..(1usize << n) {
                let corner: Vec<f64> = (0..n)
                    .map(|i| if mask >> i & 1 == 1 { epsilon } else { -epsilon })
                    .collect();
                for i in 0..n {
                    for t in [tau, -tau] {
                        let mut v = corner.clone();
                        v[i] += t;
                        vertices.push(v);
                    }
                }
            }
        }
        _ => {
            return Err(Error::Unsupported {
                op: "support_vertex_oracle",
                kind: reg.kind_name(),
            })
        }
    }
    Ok(vertices
        .iter()
        .map(|v| dot(z, v))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Two-dimensional reference instance: `A = I`, `b = (2, 1)`, least squares
/// and the ℓ1 norm.
pub fn toy_problem() -> Problem {
    Problem::new(
        DenseMatrix::identity(2),
        vec![2.0, 1.0],
        Misfit::LeastSquares,
        Regularizer::one_norm(),
    )
    .expect("consistent dimensions")
}

/// Closed-form `v(b, τ)` of [`toy_problem`].
pub fn toy_value(tau: f64) -> f64 {
    if tau <= 1.0 {
        0.5 * ((tau - 2.0) * (tau - 2.0) + 1.0)
    } else if tau <= 3.0 {
        0.25 * (tau - 3.0) * (tau - 3.0)
    } else {
        0.0
    }
}

/// Closed-form `dv/dτ` of [`toy_problem`] for `τ > 0`.
pub fn toy_derivative(tau: f64) -> f64 {
    if tau <= 1.0 {
        tau - 2.0
    } else if tau <= 3.0 {
        0.5 * (tau - 3.0)
    } else {
        0.0
    }
}

/// Closed-form optimal value of `min ½‖b − x‖² + λ‖x‖₁` on the
/// [`toy_problem`] data.
pub fn toy_penalized_value(lambda: f64) -> f64 {
    if lambda <= 1.0 {
        3.0 * lambda - lambda * lambda
    } else if lambda <= 2.0 {
        -0.5 * lambda * lambda + 2.0 * lambda + 0.5
    } else {
        2.5
    }
}
