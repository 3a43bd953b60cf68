//! Root finding on the value function: `min φ(x) s.t. ρ(b − Ax) ≤ σ` is
//! solved by finding `τ` with `v(b, τ) = σ` through safeguarded inexact
//! Newton iterations `τ⁺ = τ + (σ − v)/v'`, `v' = −μ̄`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dist2, norm_inf};
use crate::operators::LinearOperator;
use crate::penalties::Misfit;
use crate::problem::Problem;
use crate::regularizers::{Cone, GaugeNorm, Regularizer};
use crate::spg::SpgOptions;
use crate::value_fn::{evaluate, evaluate_with, ValueSample};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParetoOptions {
    /// Initial budget.
    pub tau0: f64,
    /// Converged once `|v − σ| ≤ rtol · max(1, σ)`.
    pub rtol: f64,
    pub max_iter: usize,
    /// Inner tolerance factor: `tol_k = θ |v_{k−1} − σ|`, clamped.
    pub theta: f64,
    pub tol_min: f64,
    pub tol_max: f64,
    /// Budget doublings allowed while no upper bracket is known.
    pub max_expansions: usize,
    /// Options for the subproblem solves; `tol` is overridden per step.
    pub spg: SpgOptions,
}

impl Default for ParetoOptions {
    fn default() -> Self {
        Self {
            tau0: 0.0,
            rtol: 1e-10,
            max_iter: 60,
            theta: 0.1,
            tol_min: 1e-11,
            tol_max: 1e-3,
            max_expansions: 12,
            spg: SpgOptions::default(),
        }
    }
}

impl ParetoOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau0 >= 0.0
            && self.tau0.is_finite()
            && self.rtol > 0.0
            && self.theta > 0.0
            && self.tol_min > 0.0
            && self.tol_min <= self.tol_max
            && self.max_iter >= 1;
        if ok {
            self.spg.validate()
        } else {
            Err(Error::InvalidParameter(alloc::format!("invalid root-finding options: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ParetoStatus {
    Converged,
    /// The bracket shrank to rounding level without meeting the tolerance.
    BracketExhausted,
    MaxIter,
}

/// One outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParetoStep {
    pub k: usize,
    pub tau: f64,
    pub value: f64,
    /// `v'(τ) = −μ̄`; `None` when the misfit is nonsmooth at the residual.
    pub slope: Option<f64>,
    pub inner_tol: f64,
    pub inner_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParetoTrace {
    pub steps: Vec<ParetoStep>,
    pub tau_star: f64,
    pub status: ParetoStatus,
}

impl ParetoTrace {
    pub fn inner_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.inner_iters).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParetoSolution {
    pub x: Vec<f64>,
    pub trace: ParetoTrace,
    /// The value-function sample at `τ*`.
    pub sample: ValueSample,
}

/// `τ + (σ − v)/v'`.
pub fn newton_step(tau: f64, v: f64, slope: f64, sigma: f64) -> Result<f64> {
    if v == sigma {
        return Ok(tau);
    }
    if !(slope < 0.0) {
        return Err(Error::NonDescent(slope));
    }
    Ok(tau + (sigma - v) / slope)
}

/// Solves `min φ(x) s.t. ρ(b − Ax) ≤ σ` through `v(b, τ) = σ`.
///
/// Keeps a bracket `lo < τ* ≤ hi`: budgets with `v > σ` raise `lo`, and a
/// solution `x̄` with `ρ(b − Ax̄) ≤ σ` lowers `hi` to `φ(x̄)`. Newton steps
/// leaving the bracket become bisection, and with no upper bound a flat or
/// nonsmooth point doubles the budget. Convergence needs `|v − σ|` within
/// tolerance at a budget where the constraint is active, so overshooting
/// into a flat region where `v ≡ σ` is not mistaken for the smallest root.
/// When the bracket collapses first, the best feasible point is returned.
/// With a convex misfit, an inactive constraint at `v > σ` proves `σ`
/// unreachable.
pub fn solve_constrained<A: LinearOperator>(
    problem: &Problem<A>,
    sigma: f64,
    opts: &ParetoOptions,
) -> Result<ParetoSolution> {
    opts.validate()?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "sigma must be finite and nonnegative, got {sigma}"
        )));
    }
    let target = opts.rtol * sigma.max(1.0);
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    let mut tau = opts.tau0;
    let mut tol = opts.tol_max;
    let mut expansions = 0;
    let mut steps = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    // Feasible sample with the smallest φ(x̄) so far.
    let mut best: Option<(f64, ValueSample)> = None;

    let finish = |tau_star: f64, status, sample: ValueSample, steps| ParetoSolution {
        x: sample.x.clone(),
        trace: ParetoTrace {
            steps,
            tau_star,
            status,
        },
        sample,
    };

    for k in 0..opts.max_iter {
        let spg = SpgOptions { tol, ..opts.spg.clone() };
        let mut sample = evaluate_with(problem, tau, &spg, warm.as_deref())?;
        let mut inner_iters = sample.iterations;
        let mut gap = sample.value - sigma;
        // A loose solve may look converged; confirm at full accuracy.
        if gap <= target && tol > opts.tol_min {
            let spg = SpgOptions { tol: opts.tol_min, ..opts.spg.clone() };
            sample = evaluate_with(problem, tau, &spg, Some(&sample.x))?;
            inner_iters += sample.iterations;
            gap = sample.value - sigma;
            tol = opts.tol_min;
        }
        let phi_of = |x: &[f64]| problem.regularizer.value(x).min(tau);
        let is_active = |phi: f64| phi >= tau - 1e-8 * tau.max(1.0);
        // An interior point with v > σ certifies a plateau; confirm it too.
        if gap > target && tol > opts.tol_min && !is_active(phi_of(&sample.x)) {
            let spg = SpgOptions { tol: opts.tol_min, ..opts.spg.clone() };
            sample = evaluate_with(problem, tau, &spg, Some(&sample.x))?;
            inner_iters += sample.iterations;
            gap = sample.value - sigma;
            tol = opts.tol_min;
        }
        let slope = sample.smooth_residual.then_some(-sample.mu);
        steps.push(ParetoStep {
            k,
            tau,
            value: sample.value,
            slope,
            inner_tol: tol,
            inner_iters,
        });

        let phi = phi_of(&sample.x);
        let active = is_active(phi);
        if gap.abs() <= target && active {
            return Ok(finish(tau, ParetoStatus::Converged, sample, steps));
        }
        // At τ = 0 with v ≤ σ the constraint is inactive.
        if tau == 0.0 && gap <= 0.0 {
            return Ok(finish(tau, ParetoStatus::Converged, sample, steps));
        }
        if gap > target && !active {
            // Convex: x̄ minimizes ρ(b − Ax) globally, so v ≡ v(τ) beyond τ.
            expansions += 1;
            if problem.misfit.is_convex() || expansions > opts.max_expansions {
                return Err(Error::Unreachable {
                    sigma,
                    floor: sample.value,
                });
            }
        }
        if gap > target {
            lo = lo.max(tau);
        } else {
            hi = hi.min(phi);
            if best.as_ref().is_none_or(|(t, _)| phi < *t) {
                best = Some((phi, sample.clone()));
            }
        }
        if hi.is_finite() && hi - lo <= 4.0 * f64::EPSILON * hi.max(1.0) {
            let (t, s) = best.take().unwrap_or((tau, sample));
            return Ok(finish(t, ParetoStatus::BracketExhausted, s, steps));
        }

        let newton = slope
            .filter(|d| *d < 0.0)
            .and_then(|d| newton_step(tau, sample.value, d, sigma).ok())
            .filter(|t| *t > lo && *t < hi);
        tau = match newton {
            Some(t) => t,
            None if hi.is_finite() => 0.5 * (lo + hi),
            None => {
                expansions += 1;
                if expansions > opts.max_expansions {
                    return Err(Error::Unreachable {
                        sigma,
                        floor: sample.value,
                    });
                }
                2.0 * tau + 1.0
            }
        };
        tol = (opts.theta * gap.abs()).clamp(opts.tol_min, opts.tol_max);
        warm = Some(sample.x);
    }

    if let Some((t, s)) = best {
        return Ok(finish(t, ParetoStatus::MaxIter, s, steps));
    }
    let spg = SpgOptions { tol, ..opts.spg.clone() };
    let sample = evaluate_with(problem, tau, &spg, warm.as_deref())?;
    Ok(finish(tau, ParetoStatus::MaxIter, sample, steps))
}

/// How `v₂(σ) = min{φ(x) : ρ(b − Ax) ≤ σ}` was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum InverseRoute {
    /// Closed-form soft thresholding with a bisection on the threshold
    /// (identity operator, least squares, ℓ1 gauges).
    Direct,
    /// Root finding on `v(b, ·) = σ`.
    RootFinding,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InverseReport {
    pub tau: f64,
    /// `σ = v₁(τ)`
    pub sigma: f64,
    /// `v₂(σ)`
    pub tau_back: f64,
    /// `|v₂(v₁(τ)) − τ|`
    pub discrepancy: f64,
    /// `‖x̄₁ − x̄₂‖₂`
    pub solution_distance: f64,
    pub route: InverseRoute,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "outcome", rename_all = "kebab-case"))]
pub enum InverseOutcome {
    Checked(InverseReport),
    /// The constraint is not active at `τ` within tolerance.
    NotApplicable { tau: f64, phi: f64, mu: f64 },
}

impl InverseOutcome {
    pub fn report(&self) -> Option<&InverseReport> {
        match self {
            Self::Checked(r) => Some(r),
            Self::NotApplicable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InverseOptions {
    /// Active when `|φ(x̄) − τ| ≤ activity_tol · max(1, τ)` ...
    pub activity_tol: f64,
    /// ... and `μ̄ > mu_floor`, so that `v` strictly decreases through `τ`.
    pub mu_floor: f64,
    pub pareto: ParetoOptions,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self {
            activity_tol: 1e-6,
            mu_floor: 1e-6,
            pareto: ParetoOptions::default(),
        }
    }
}

/// Checks `v₂(v₁(τ)) = τ` with subproblem tolerance `tol`.
pub fn verify_inverse<A: LinearOperator>(problem: &Problem<A>, tau: f64, tol: f64) -> Result<InverseOutcome> {
    verify_inverse_with(problem, tau, tol, &InverseOptions::default())
}

pub fn verify_inverse_with<A: LinearOperator>(
    problem: &Problem<A>,
    tau: f64,
    tol: f64,
    opts: &InverseOptions,
) -> Result<InverseOutcome> {
    let first = evaluate(problem, tau, tol)?;
    let phi = problem.regularizer.value(&first.x);
    let active = (phi - tau).abs() <= opts.activity_tol * tau.max(1.0) && first.mu > opts.mu_floor;
    if !active {
        return Ok(InverseOutcome::NotApplicable {
            tau,
            phi,
            mu: first.mu,
        });
    }
    let sigma = first.value;
    let (tau_back, x_back, route) = match direct_inverse(problem, sigma) {
        Some((t, x)) => (t, x, InverseRoute::Direct),
        None => {
            let sol = solve_constrained(problem, sigma, &opts.pareto)?;
            (sol.trace.tau_star, sol.x, InverseRoute::RootFinding)
        }
    };
    Ok(InverseOutcome::Checked(InverseReport {
        tau,
        sigma,
        tau_back,
        discrepancy: (tau_back - tau).abs(),
        solution_distance: dist2(&first.x, &x_back),
        route,
    }))
}

/// `min ‖x‖₁ s.t. ½‖b − x‖² ≤ σ` (optionally with `x ≥ 0`) is solved by
/// soft thresholding `b` at the `λ` where the residual bound is tight.
fn direct_inverse<A: LinearOperator>(problem: &Problem<A>, sigma: f64) -> Option<(f64, Vec<f64>)> {
    let nonneg = match problem.regularizer {
        Regularizer::Gauge {
            norm: GaugeNorm::L1,
            cone: Cone::Free,
        } => false,
        Regularizer::Gauge {
            norm: GaugeNorm::L1,
            cone: Cone::Nonneg,
        } => true,
        _ => return None,
    };
    if problem.misfit != Misfit::LeastSquares || !problem.op.is_identity() {
        return None;
    }
    let b = &problem.b;
    let shrink = |lambda: f64| -> Vec<f64> {
        b.iter()
            .map(|&bi| {
                if nonneg {
                    (bi - lambda).max(0.0)
                } else {
                    crate::linalg::sign(bi) * (bi.abs() - lambda).max(0.0)
                }
            })
            .collect()
    };
    let misfit = |x: &[f64]| 0.5 * b.iter().zip(x).map(|(bi, xi)| (bi - xi) * (bi - xi)).sum::<f64>();
    // The residual grows with λ; at λ = ‖b‖∞ the shrunk point is 0.
    let (mut lo, mut hi) = (0.0, norm_inf(b));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if misfit(&shrink(mid)) <= sigma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = shrink(lo);
    Some((problem.regularizer.value(&x), x))
}
