//! Closed-form dual objects: the reduced dual objective
//!
//! ```text
//! D_r(u) = ⟨b, u⟩ − ρ*(u) − σ(Aᵀu | lev(φ, τ)),
//! ```
//!
//! recovery of the level-constraint multiplier `μ̄` from `s = Aᵀū`, and the
//! coercivity predicates that guarantee primal and dual attainment.
//!
//! The perspective `(φ*)^π` is never built as a function object; the
//! regularizer catalog exposes the minimizers of `τμ + (φ*)^π(s, μ)` directly
//! and [`oracle::mu_grid_oracle`](crate::oracle::mu_grid_oracle) checks them
//! by brute force.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::operators::{check_len, LinearOperator};
use crate::problem::Problem;
use crate::regularizers::Regularizer;

/// A point of the reduced dual together with its multiplier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DualPoint {
    pub u: Vec<f64>,
    pub mu: f64,
    pub value: f64,
}

impl DualPoint {
    pub fn new<A: LinearOperator>(problem: &Problem<A>, u: Vec<f64>, tau: f64) -> Result<Self> {
        let value = reduced_dual_value(problem, &u, tau)?;
        let s = problem.op.apply_adjoint(&u)?;
        let mu = recover_mu(&problem.regularizer, &s, tau)?.value;
        Ok(Self { u, mu, value })
    }
}

/// Which part of the optimality condition `s ∈ μ̄⁺∂φ(x̄)` is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum MultiplierBranch {
    /// `μ̄ = 0`: `s` lies in the normal cone of `dom φ`. This covers points
    /// where the constraint binds but no classical multiplier exists.
    Cone,
    /// `μ̄ > 0`: `s` is a positive multiple of a subgradient of `φ`.
    Active,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Multiplier {
    pub value: f64,
    pub branch: MultiplierBranch,
}

/// `D_r(u)`, or `−∞` when `u ∉ dom ρ*`. Fails for nonconvex misfits.
pub fn reduced_dual_value<A: LinearOperator>(problem: &Problem<A>, u: &[f64], tau: f64) -> Result<f64> {
    check_len(problem.rows(), u.len())?;
    let conj = problem.misfit.conjugate(u)?;
    if conj == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let s = problem.op.apply_adjoint(u)?;
    let support = problem.regularizer.support_level_set(&s, tau)?;
    Ok(dot(&problem.b, u) - conj - support)
}

/// `μ̄ = argmin_{μ ≥ 0} τμ + (φ*)^π(s, μ)` with the branch it falls in.
pub fn recover_mu(reg: &Regularizer, s: &[f64], tau: f64) -> Result<Multiplier> {
    let value = reg.multiplier(s, tau)?;
    let branch = if value > 0.0 {
        MultiplierBranch::Active
    } else {
        MultiplierBranch::Cone
    };
    Ok(Multiplier { value, branch })
}

/// Outcome of the coercivity predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Coercivity {
    /// `hzn φ ∩ (−A⁻¹ hzn ρ) = {0}`: the primal objective is coercive.
    pub primal: bool,
    /// `b ∈ int(dom ρ + A lev(φ, τ))`: the reduced dual objective is coercive.
    pub dual: bool,
}

/// Evaluates both predicates from the tabulated horizon cones and domains of
/// the catalog kinds.
///
/// The intersection `hzn φ ∩ (−A⁻¹ hzn ρ)` is `{0}` as soon as either
/// horizon cone is `{0}`; the dual condition holds whenever `ρ` is finite
/// valued, since then `dom ρ + A lev(φ, τ) = ℝᵐ`.
pub fn coercivity_check<A: LinearOperator>(problem: &Problem<A>, tau: f64) -> Result<Coercivity> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "tau must be nonnegative, got {tau}"
        )));
    }
    let primal = problem.regularizer.horizon_is_trivial() || problem.misfit.horizon_is_trivial();
    let dual = problem.misfit.is_finite_valued();
    Ok(Coercivity { primal, dual })
}
