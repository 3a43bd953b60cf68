//! Value functions of level-constrained inverse problems.
//!
//! The central object is the value function
//!
//! ```text
//! v(b, τ) = min { ρ(b − Ax) : φ(x) ≤ τ }
//! ```
//!
//! for a misfit `ρ` ([`Misfit`]) and a gauge-like regularizer `φ`
//! ([`Regularizer`]). This crate evaluates `v` with a spectral projected
//! gradient solver ([`spg`]), recovers its subgradient `(ū, −μ̄)` from the
//! reduced dual ([`calculus`], [`value_fn`]), and solves the flipped problem
//! `min { φ(x) : ρ(b − Ax) ≤ σ }` by Newton root-finding on `v(b, τ) = σ`
//! ([`pareto`]). Brute-force references for every closed form live in
//! [`oracle`].
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod descriptor;
mod error;

pub mod calculus;
pub mod linalg;
pub mod operators;
pub mod oracle;
pub mod pareto;
pub mod penalties;
pub mod problem;
pub mod regularizers;
pub mod spg;
pub mod value_fn;

pub use calculus::{Coercivity, DualPoint, Multiplier, MultiplierBranch};
pub use error::{Error, Result};
pub use operators::{DenseMatrix, FnOperator, GaussianSampler, LinearOperator};
pub use pareto::{ParetoOptions, ParetoSolution, ParetoStatus, ParetoStep, ParetoTrace};
pub use penalties::Misfit;
pub use problem::Problem;
pub use regularizers::{Cone, GaugeNorm, QsCurvature, Regularizer};
pub use spg::{KktReport, SpgIterate, SpgOptions, SpgResult, SpgStatus};
pub use value_fn::ValueSample;
