//! Points on the value-function curve `τ ↦ v(b, τ)` with their subgradients.
//!
//! At a solution `x̄` with residual `r̄ = b − Ax̄` and `ū = ∇ρ(r̄)`, the pair
//! `(ū, −μ̄)` lies in `∂v(b, τ)`, where `μ̄` minimizes `τμ + (φ*)^π(Aᵀū, μ)`.
//! When `ū` is unique and that minimizer is a singleton the value function is
//! differentiable and the pair is its gradient.

use alloc::vec;
use alloc::vec::Vec;

use crate::calculus::MultiplierBranch;
use crate::error::{Error, Result};
use crate::operators::LinearOperator;
use crate::problem::Problem;
use crate::spg::{kkt_certificate, solve_subproblem, SpgOptions, SpgStatus};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValueSample {
    pub tau: f64,
    /// `v(b, τ) = ρ(r̄)`
    pub value: f64,
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    /// `ū = ∇ρ(r̄)`, or the zero subgradient when `ρ` is nonsmooth at `r̄`.
    pub u: Vec<f64>,
    pub mu: f64,
    pub branch: MultiplierBranch,
    /// `v − D_r(ū)` for convex misfits.
    pub duality_gap: Option<f64>,
    /// `σ(Aᵀū | lev(φ, τ)) − ⟨Aᵀū, x̄⟩`
    pub stationarity: f64,
    /// Whether `ρ` is differentiable at `r̄` (so `ū` is unique).
    pub smooth_residual: bool,
    pub differentiable: bool,
    pub iterations: usize,
    pub status: SpgStatus,
    pub pg_norm: f64,
}

/// `v(b, τ)` with subproblem tolerance `tol` and otherwise default options.
pub fn evaluate<A: LinearOperator>(problem: &Problem<A>, tau: f64, tol: f64) -> Result<ValueSample> {
    evaluate_with(problem, tau, &SpgOptions::with_tol(tol), None)
}

pub fn evaluate_with<A: LinearOperator>(
    problem: &Problem<A>,
    tau: f64,
    opts: &SpgOptions,
    warm_start: Option<&[f64]>,
) -> Result<ValueSample> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "tau must be finite and nonnegative, got {tau}"
        )));
    }
    let result = solve_subproblem(problem, tau, opts, warm_start)?;
    match kkt_certificate(problem, &result, tau) {
        Ok(kkt) => {
            // At τ = 0 the minimizing set of τμ + (φ*)^π(s, μ) is a ray.
            let singleton_mu = tau > 0.0;
            Ok(ValueSample {
                tau,
                value: result.value,
                x: result.x,
                residual: result.residual,
                u: kkt.u,
                mu: kkt.mu.value,
                branch: kkt.mu.branch,
                duality_gap: kkt.duality_gap,
                stationarity: kkt.stationarity,
                smooth_residual: true,
                differentiable: singleton_mu,
                iterations: result.iterations,
                status: result.status,
                pg_norm: result.pg_norm,
            })
        }
        Err(Error::Nonsmooth(_)) => Ok(ValueSample {
            tau,
            value: result.value,
            u: vec![0.0; result.residual.len()],
            x: result.x,
            residual: result.residual,
            mu: 0.0,
            branch: MultiplierBranch::Cone,
            duality_gap: None,
            stationarity: 0.0,
            smooth_residual: false,
            differentiable: false,
            iterations: result.iterations,
            status: result.status,
            pg_norm: result.pg_norm,
        }),
        Err(e) => Err(e),
    }
}

/// `∂v/∂τ = −μ̄`.
pub fn tau_derivative(sample: &ValueSample) -> Result<f64> {
    if sample.differentiable {
        Ok(-sample.mu)
    } else {
        Err(Error::NotDifferentiable)
    }
}

/// The `b`-component `ū` of the value-function gradient.
pub fn b_subgradient(sample: &ValueSample) -> Result<Vec<f64>> {
    if sample.smooth_residual {
        Ok(sample.u.clone())
    } else {
        Err(Error::Nonsmooth("misfit at the optimal residual"))
    }
}
