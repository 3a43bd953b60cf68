//! Spectral projected gradient for `min ρ(b − Ax) s.t. φ(x) ≤ τ`.
//!
//! Barzilai–Borwein steps, projected onto `lev(φ, τ)`, with the
//! Grippo–Lampariello–Lucidi nonmonotone line search along the projected
//! direction. Since every trial point is a convex combination of two points
//! of the level set, all iterates stay feasible.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::{recover_mu, reduced_dual_value, Multiplier};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::operators::{check_len, LinearOperator};
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpgOptions {
    pub max_iter: usize,
    /// Stop once `‖P(x − ∇f(x)) − x‖₂ ≤ tol`.
    pub tol: f64,
    /// Nonmonotone memory `M`.
    pub memory: usize,
    pub step_min: f64,
    pub step_max: f64,
    /// Sufficient-decrease constant of the line search.
    pub gamma: f64,
    /// Keep an [`SpgIterate`] per iteration.
    pub record_trace: bool,
}

impl Default for SpgOptions {
    fn default() -> Self {
        Self {
            max_iter: 50_000,
            tol: 1e-9,
            memory: 10,
            step_min: 1e-10,
            step_max: 1e10,
            gamma: 1e-4,
            record_trace: false,
        }
    }
}

impl SpgOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.memory >= 1
            && self.step_min > 0.0
            && self.step_min < self.step_max
            && self.gamma > 0.0
            && self.gamma < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!("invalid SPG options: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SpgStatus {
    Converged,
    MaxIter,
    /// The misfit lost differentiability at the iterate (two-norm with a
    /// zero residual). The value there is zero.
    NonsmoothStop,
    /// The line search could not make progress above rounding level before
    /// the tolerance was met.
    Stalled,
}

/// One row of the iterate log.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpgIterate {
    pub iter: usize,
    pub f: f64,
    pub pg_norm: f64,
    /// Line-search step actually taken along the projected direction.
    pub step: f64,
    /// Spectral step length used to form the direction.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpgResult {
    pub x: Vec<f64>,
    /// `b − Ax`
    pub residual: Vec<f64>,
    /// `ρ(b − Ax)`
    pub value: f64,
    pub iterations: usize,
    pub status: SpgStatus,
    pub pg_norm: f64,
    pub trace: Vec<SpgIterate>,
}

struct Evaluator<'a, A> {
    problem: &'a Problem<A>,
    r: Vec<f64>,
    du: Vec<f64>,
}

impl<'a, A: LinearOperator> Evaluator<'a, A> {
    fn new(problem: &'a Problem<A>) -> Self {
        Self {
            problem,
            r: vec![0.0; problem.rows()],
            du: vec![0.0; problem.rows()],
        }
    }

    fn value(&mut self, x: &[f64]) -> f64 {
        self.problem.residual_into(x, &mut self.r);
        self.problem.misfit.value(&self.r)
    }

    /// `∇f(x) = −Aᵀ∇ρ(b − Ax)` at the point of the last `value` call.
    /// Returns `false` when the misfit is nonsmooth there and has no
    /// meaningful descent information.
    fn gradient(&mut self, g: &mut [f64]) -> bool {
        let misfit = &self.problem.misfit;
        match misfit.gradient_into(&self.r, &mut self.du) {
            Ok(()) => {}
            Err(_) if matches!(misfit, crate::Misfit::TwoNorm) => return false,
            Err(_) => misfit.subgradient_into(&self.r, &mut self.du),
        }
        self.problem.op.adjoint_into(&self.du, g);
        g.iter_mut().for_each(|gi| *gi = -*gi);
        true
    }
}

/// Solves the level-constrained subproblem at budget `tau`.
///
/// Running out of iterations is reported through [`SpgStatus::MaxIter`],
/// not as an error. A warm start is projected onto the level set first.
pub fn solve_subproblem<A: LinearOperator>(
    problem: &Problem<A>,
    tau: f64,
    opts: &SpgOptions,
    warm_start: Option<&[f64]>,
) -> Result<SpgResult> {
    opts.validate()?;
    let n = problem.cols();
    let reg = &problem.regularizer;
    let project = |y: &[f64]| reg.project_level_set(y, tau);

    let x0 = match warm_start {
        Some(w) => {
            check_len(n, w.len())?;
            w.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut x = project(&x0)?;
    let mut eval = Evaluator::new(problem);
    let mut f = eval.value(&x);
    let mut g = vec![0.0; n];
    let mut trace = Vec::new();

    let finish = |x: Vec<f64>, eval: &Evaluator<A>, f: f64, iterations, status, pg_norm, trace| SpgResult {
        x,
        residual: eval.r.clone(),
        value: f,
        iterations,
        status,
        pg_norm,
        trace,
    };

    if !eval.gradient(&mut g) {
        return Ok(finish(x, &eval, f, 0, SpgStatus::NonsmoothStop, 0.0, trace));
    }

    let mut history: VecDeque<f64> = VecDeque::with_capacity(opts.memory);
    history.push_back(f);

    let mut pg_norm = projected_gradient_norm(&x, &g, 1.0, &project)?;
    let mut alpha = if pg_norm > 0.0 {
        (1.0 / pg_norm).clamp(opts.step_min, opts.step_max)
    } else {
        1.0
    };
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    for iter in 0..opts.max_iter {
        if pg_norm <= opts.tol {
            return Ok(finish(x, &eval, f, iter, SpgStatus::Converged, pg_norm, trace));
        }

        let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
        let d: Vec<f64> = project(&trial)?.iter().zip(&x).map(|(p, xi)| p - xi).collect();
        let gtd = dot(&g, &d);
        let f_ref = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Differences below this are rounding noise in f.
        let slack = 4.0 * f64::EPSILON * f_ref.abs();

        let mut lambda = 1.0;
        let mut f_new;
        loop {
            x_new.iter_mut().zip(x.iter().zip(&d)).for_each(|(xn, (xi, di))| *xn = xi + lambda * di);
            f_new = eval.value(&x_new);
            if f_new <= f_ref + opts.gamma * lambda * gtd + slack {
                break;
            }
            // Safeguarded quadratic interpolation.
            let denom = f_new - f - lambda * gtd;
            let lambda_q = if denom > 0.0 { -0.5 * lambda * lambda * gtd / denom } else { -1.0 };
            lambda = if lambda_q >= 0.1 * lambda && lambda_q <= 0.9 * lambda {
                lambda_q
            } else {
                0.5 * lambda
            };
            if lambda < 1e-18 {
                eval.value(&x);
                return Ok(finish(x, &eval, f, iter, SpgStatus::Stalled, pg_norm, trace));
            }
        }

        let smooth = eval.gradient(&mut g_new);
        let (s, y): (Vec<f64>, Vec<f64>) = x_new
            .iter()
            .zip(&x)
            .zip(g_new.iter().zip(&g))
            .map(|((xn, xo), (gn, go))| (xn - xo, gn - go))
            .unzip();
        core::mem::swap(&mut x, &mut x_new);
        core::mem::swap(&mut g, &mut g_new);
        f = f_new;

        if opts.record_trace {
            trace.push(SpgIterate {
                iter: iter + 1,
                f,
                pg_norm,
                step: lambda,
                alpha,
            });
        }
        if !smooth {
            return Ok(finish(x, &eval, f, iter + 1, SpgStatus::NonsmoothStop, 0.0, trace));
        }

        if history.len() == opts.memory {
            history.pop_front();
        }
        history.push_back(f);

        let sty = dot(&s, &y);
        alpha = if sty <= 0.0 {
            opts.step_max
        } else {
            (dot(&s, &s) / sty).clamp(opts.step_min, opts.step_max)
        };
        pg_norm = projected_gradient_norm(&x, &g, 1.0, &project)?;
    }

    let status = if pg_norm <= opts.tol {
        SpgStatus::Converged
    } else {
        SpgStatus::MaxIter
    };
    Ok(finish(x, &eval, f, opts.max_iter, status, pg_norm, trace))
}

fn projected_gradient_norm(
    x: &[f64],
    g: &[f64],
    step: f64,
    project: &impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<f64> {
    let trial: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - step * gi).collect();
    let p = project(&trial)?;
    Ok(crate::linalg::dist2(&p, x))
}

/// Optimality certificate for a subproblem solution.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KktReport {
    /// `ū = ∇ρ(r̄)`
    pub u: Vec<f64>,
    /// `s = Aᵀū`
    pub s: Vec<f64>,
    pub mu: Multiplier,
    /// `φ(x̄) − τ`
    pub feasibility: f64,
    /// `μ̄ (φ(x̄) − τ)`
    pub complementarity: f64,
    /// `σ(s | lev(φ, τ)) − ⟨s, x̄⟩ ≥ 0`, zero iff `s ∈ N(x̄ | lev(φ, τ))`.
    pub stationarity: f64,
    /// `ρ(r̄) − D_r(ū)`; `None` for nonconvex misfits.
    pub duality_gap: Option<f64>,
}

impl KktReport {
    /// Largest of the feasibility violation, complementarity, stationarity
    /// and (when defined) duality gap.
    pub fn max_residual(&self) -> f64 {
        let gap = self.duality_gap.map_or(0.0, f64::abs);
        self.feasibility
            .max(0.0)
            .max(self.complementarity.abs())
            .max(self.stationarity.abs())
            .max(gap)
    }
}

/// Builds `ū`, `μ̄` and the optimality residuals at `result.x`.
pub fn kkt_certificate<A: LinearOperator>(
    problem: &Problem<A>,
    result: &SpgResult,
    tau: f64,
) -> Result<KktReport> {
    let u = problem.misfit.gradient(&result.residual)?;
    let s = problem.op.apply_adjoint(&u)?;
    let mu = recover_mu(&problem.regularizer, &s, tau)?;
    let phi = problem.regularizer.value(&result.x);
    let feasibility = phi - tau;
    let complementarity = if mu.value == 0.0 { 0.0 } else { mu.value * feasibility };
    let stationarity = problem.regularizer.support_level_set(&s, tau)? - dot(&s, &result.x);
    let duality_gap = if problem.misfit.is_convex() {
        Some(result.value - reduced_dual_value(problem, &u, tau)?)
    } else {
        None
    };
    Ok(KktReport {
        u,
        s,
        mu,
        feasibility,
        complementarity,
        stationarity,
        duality_gap,
    })
}

impl SpgResult {
    /// Replaces `x` (and the cached residual and value) with another point,
    /// e.g. to certify a candidate that did not come from the solver.
    pub fn with_point<A: LinearOperator>(&self, problem: &Problem<A>, x: Vec<f64>) -> Result<Self> {
        let residual = problem.residual(&x)?;
        let value = problem.misfit.value(&residual);
        Ok(Self {
            x,
            residual,
            value,
            ..self.clone()
        })
    }
}
