//! Regularizers `φ` and the level-set objects the dual needs:
//! `σ(· | lev(φ, τ))`, the multiplier `μ̄`, and Euclidean projection onto
//! `lev(φ, τ) = {x : φ(x) ≤ τ}`.
//!
//! Three families are cataloged:
//!
//! * gauge plus cone indicator, `φ(x) = γ(x | U) + δ(x | X)` with `U` the
//!   unit ℓ1 or ℓ2 ball and `X` a cone of sign constraints;
//! * quadratic support, `φ(x) = sup_{w ∈ U} ⟨x, w⟩ − ½⟨w, Bw⟩` with
//!   `U = [−κ, κ]ⁿ` and `B ∈ {I, 0}` (Huber and scaled ℓ1);
//! * the Vapnik ε-insensitive penalty, the affine composition
//!   `ψ(Hx + c)` with `H = [I; −I]`, `c = −ε𝟙`, `U = [0, 1]²ⁿ`, `B = 0`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::linalg::{norm1, norm2, norm_inf, sign};
use crate::penalties::huber_scalar;

/// Unit ball `U` of a gauge regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum GaugeNorm {
    L1,
    L2,
}

/// Cone `X` of coordinate sign constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Cone {
    /// `X = ℝⁿ`
    Free,
    /// `X = ℝⁿ₊`
    Nonneg,
    /// `X = {x : x[axis] ≥ 0}`
    HalfSpace { axis: usize },
}

impl Cone {
    /// Whether coordinate `i` is sign constrained.
    pub fn constrains(&self, i: usize) -> bool {
        match *self {
            Self::Free => false,
            Self::Nonneg => true,
            Self::HalfSpace { axis } => i == axis,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, &xi)| !self.constrains(i) || xi >= 0.0)
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &xi)| if self.constrains(i) { xi.max(0.0) } else { xi })
            .collect()
    }

    /// Smallest (in every coordinate-wise sense) `s` with `z − s ∈ X°`:
    /// free coordinates keep `zᵢ`, constrained ones become `max(zᵢ, 0)`.
    pub fn reduce_dual(&self, z: &[f64]) -> Vec<f64> {
        self.project(z)
    }
}

/// Curvature `B` of a quadratic-support regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum QsCurvature {
    /// `B = I`: the Huber function with threshold κ.
    Identity,
    /// `B = 0`: the support function of the box, `κ‖x‖₁`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Regularizer {
    Gauge { norm: GaugeNorm, cone: Cone },
    Qs { kappa: f64, curvature: QsCurvature },
    Vapnik { epsilon: f64 },
}

impl Regularizer {
    pub fn one_norm() -> Self {
        Self::Gauge {
            norm: GaugeNorm::L1,
            cone: Cone::Free,
        }
    }

    pub fn nonneg_one_norm() -> Self {
        Self::Gauge {
            norm: GaugeNorm::L1,
            cone: Cone::Nonneg,
        }
    }

    pub fn two_norm() -> Self {
        Self::Gauge {
            norm: GaugeNorm::L2,
            cone: Cone::Free,
        }
    }

    pub fn gauge(norm: GaugeNorm, cone: Cone) -> Self {
        Self::Gauge { norm, cone }
    }

    pub fn huber(kappa: f64) -> Result<Self> {
        Self::qs(kappa, QsCurvature::Identity)
    }

    pub fn qs(kappa: f64, curvature: QsCurvature) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        Ok(Self::Qs { kappa, curvature })
    }

    pub fn vapnik(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "epsilon must be nonnegative, got {epsilon}"
            )));
        }
        Ok(Self::Vapnik { epsilon })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Gauge {
                norm: GaugeNorm::L1,
                cone: Cone::Free,
            } => "one-norm",
            Self::Gauge {
                norm: GaugeNorm::L1,
                cone: Cone::Nonneg,
            } => "nonneg-one-norm",
            Self::Gauge {
                norm: GaugeNorm::L2,
                cone: Cone::Free,
            } => "two-norm",
            Self::Gauge { .. } => "gauge-plus-cone",
            Self::Qs { .. } => "qs",
            Self::Vapnik { .. } => "affine-qs",
        }
    }

    /// Whether the level set is a polytope (so vertex enumeration and
    /// active-set oracles apply).
    pub fn is_polyhedral(&self) -> bool {
        matches!(
            self,
            Self::Gauge {
                norm: GaugeNorm::L1,
                ..
            } | Self::Qs {
                curvature: QsCurvature::Zero,
                ..
            } | Self::Vapnik { .. }
        )
    }

    /// Whether `hzn φ = {0}`. True for the whole catalog: the gauges have
    /// bounded unit balls, the box `U` contains the origin in its interior,
    /// and the Vapnik penalty grows linearly along every ray.
    pub fn horizon_is_trivial(&self) -> bool {
        true
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Self::Gauge { norm, cone } => {
                if !cone.contains(x) {
                    return f64::INFINITY;
                }
                match norm {
                    GaugeNorm::L1 => norm1(x),
                    GaugeNorm::L2 => norm2(x),
                }
            }
            Self::Qs {
                kappa,
                curvature: QsCurvature::Identity,
            } => x.iter().map(|&xi| huber_scalar(xi, kappa)).sum(),
            Self::Qs {
                kappa,
                curvature: QsCurvature::Zero,
            } => kappa * norm1(x),
            Self::Vapnik { epsilon } => x.iter().map(|xi| (xi.abs() - epsilon).max(0.0)).sum(),
        }
    }

    /// Polar gauge `γ(z | U°) = σ(z | U)`, the dual norm of the gauge's unit
    /// ball. The cone plays no part here; see
    /// [`support_level_set`](Self::support_level_set) for the cone-aware
    /// quantity.
    pub fn polar_gauge(&self, z: &[f64]) -> Result<f64> {
        match *self {
            Self::Gauge { norm, .. } => Ok(dual_norm(norm, z)),
            _ => Err(self.unsupported("polar_gauge")),
        }
    }

    /// Support function `σ(z | lev(φ, τ))`.
    ///
    /// `τ = 0` is accepted: every cataloged `φ` other than Vapnik has
    /// `lev(φ, 0) = {0}`.
    pub fn support_level_set(&self, z: &[f64], tau: f64) -> Result<f64> {
        check_tau(tau)?;
        Ok(match *self {
            Self::Gauge { norm, cone } => tau * dual_norm(norm, &cone.reduce_dual(z)),
            Self::Qs { kappa, curvature } => {
                let g = norm_inf(z) / kappa;
                let nb = curvature_norm(curvature, z);
                qs_support(g, nb, tau)
            }
            Self::Vapnik { epsilon } => tau * norm_inf(z) + epsilon * norm1(z),
        })
    }

    /// `μ̄ = argmin_{μ ≥ 0} τμ + (φ*)^π(s, μ)` in closed form.
    ///
    /// * gauge plus cone: `γ(s̃ | U°)` where `s̃` is `s` with sign-constrained
    ///   coordinates clipped at zero (so `max(0, maxᵢ sᵢ)` for ℝⁿ₊);
    /// * quadratic support: `max{γ_U(s), ‖s‖_B / √(2τ)}` with
    ///   `γ_U(s) = ‖s‖∞ / κ`;
    /// * Vapnik: `‖s‖∞`.
    ///
    /// Gauge and Vapnik multipliers do not depend on `τ` and accept `τ = 0`.
    /// The Huber multiplier needs `τ > 0` unless `s = 0`.
    pub fn multiplier(&self, s: &[f64], tau: f64) -> Result<f64> {
        check_tau(tau)?;
        match *self {
            Self::Gauge { norm, cone } => Ok(dual_norm(norm, &cone.reduce_dual(s))),
            Self::Qs { kappa, curvature } => {
                let g = norm_inf(s) / kappa;
                let nb = curvature_norm(curvature, s);
                if nb == 0.0 {
                    Ok(g)
                } else if tau == 0.0 {
                    Err(Error::InvalidParameter(
                        "quadratic-support multiplier is unbounded at tau = 0".into(),
                    ))
                } else {
                    Ok(g.max(nb / libm::sqrt(2.0 * tau)))
                }
            }
            Self::Vapnik { .. } => Ok(norm_inf(s)),
        }
    }

    /// Euclidean projection onto `lev(φ, τ)`.
    ///
    /// Gauges project onto the cone first and then onto the ball `τU`, which
    /// is exact for sign-constraint cones. The Huber level set is handled by
    /// bisection on the multiplier of its prox; Vapnik is unsupported.
    pub fn project_level_set(&self, x: &[f64], tau: f64) -> Result<Vec<f64>> {
        check_tau(tau)?;
        match *self {
            Self::Gauge { norm, cone } => {
                let y = cone.project(x);
                Ok(match norm {
                    GaugeNorm::L1 => project_l1_ball(&y, tau),
                    GaugeNorm::L2 => project_l2_ball(&y, tau),
                })
            }
            Self::Qs {
                kappa,
                curvature: QsCurvature::Zero,
            } => Ok(project_l1_ball(x, tau / kappa)),
            Self::Qs {
                kappa,
                curvature: QsCurvature::Identity,
            } => Ok(project_huber_level_set(x, kappa, tau)),
            Self::Vapnik { .. } => Err(self.unsupported("project_level_set")),
        }
    }

    fn unsupported(&self, op: &'static str) -> Error {
        Error::Unsupported {
            op,
            kind: self.kind_name(),
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!(
            "tau must be finite and nonnegative, got {tau}"
        )))
    }
}

fn dual_norm(norm: GaugeNorm, z: &[f64]) -> f64 {
    match norm {
        GaugeNorm::L1 => norm_inf(z),
        GaugeNorm::L2 => norm2(z),
    }
}

fn curvature_norm(curvature: QsCurvature, z: &[f64]) -> f64 {
    match curvature {
        QsCurvature::Identity => norm2(z),
        QsCurvature::Zero => 0.0,
    }
}

/// Piecewise support of a quadratic-support level set in terms of the gauge
/// `g = γ_U(z)` and seminorm `nb = ‖z‖_B`.
fn qs_support(g: f64, nb: f64, tau: f64) -> f64 {
    let s2t = libm::sqrt(2.0 * tau);
    if g * s2t > nb {
        tau * g + nb * nb / (2.0 * g)
    } else {
        s2t * nb
    }
}

/// Projection onto `{y : ‖y‖₁ ≤ radius}` by sorting magnitudes and
/// soft-thresholding.
pub fn project_l1_ball(x: &[f64], radius: f64) -> Vec<f64> {
    if norm1(x) <= radius {
        return x.to_vec();
    }
    if radius <= 0.0 {
        return vec![0.0; x.len()];
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cumsum += m;
        let t = (cumsum - radius) / (j + 1) as f64;
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    x.iter()
        .map(|&v| sign(v) * (v.abs() - theta).max(0.0))
        .collect()
}

pub fn project_l2_ball(x: &[f64], radius: f64) -> Vec<f64> {
    let nrm = norm2(x);
    if nrm <= radius {
        x.to_vec()
    } else {
        let scale = radius / nrm;
        x.iter().map(|v| v * scale).collect()
    }
}

/// `prox_{λh}(x)` for the scalar Huber function `h` with threshold κ.
fn huber_prox(x: f64, kappa: f64, lambda: f64) -> f64 {
    if x.abs() <= kappa * (1.0 + lambda) {
        x / (1.0 + lambda)
    } else {
        x - lambda * kappa * sign(x)
    }
}

/// Projection onto `{y : Σ h_κ(yᵢ) ≤ τ}`. The projection is
/// `prox_{λh}(x)` for the `λ ≥ 0` that makes the constraint tight; the level
/// value is decreasing in `λ`, so `λ` is found by bracketing and bisection
/// and the feasible end of the final bracket is returned.
fn project_huber_level_set(x: &[f64], kappa: f64, tau: f64) -> Vec<f64> {
    let level = |lambda: f64| -> f64 {
        x.iter()
            .map(|&xi| huber_scalar(huber_prox(xi, kappa, lambda), kappa))
            .sum()
    };
    if level(0.0) <= tau {
        return x.to_vec();
    }
    if tau == 0.0 {
        return vec![0.0; x.len()];
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while level(hi) > tau {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if level(mid) > tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    x.iter().map(|&xi| huber_prox(xi, kappa, hi)).collect()
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Gauge { norm, cone } => {
                let base = match norm {
                    GaugeNorm::L1 => "l1",
                    GaugeNorm::L2 => "l2",
                };
                match cone {
                    Cone::Free => f.write_str(base),
                    Cone::Nonneg => write!(f, "nonneg-{base}"),
                    Cone::HalfSpace { axis } => write!(f, "{base}:halfspace={axis}"),
                }
            }
            Self::Qs {
                kappa,
                curvature: QsCurvature::Identity,
            } => write!(f, "qs:kappa={kappa}"),
            Self::Qs {
                kappa,
                curvature: QsCurvature::Zero,
            } => write!(f, "qs:kappa={kappa},curvature=zero"),
            Self::Vapnik { epsilon } => write!(f, "vapnik:epsilon={epsilon}"),
        }
    }
}

/// Parses `l1`, `nonneg-l1`, `l2`, `nonneg-l2`, `l1:halfspace=J`,
/// `l2:halfspace=J`, `qs:kappa=K[,curvature=identity|zero]` (alias
/// `huber:kappa=K`) and `vapnik:epsilon=E`.
impl FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let d = Descriptor::parse(s)?;
        let gauge = |norm: GaugeNorm, nonneg: bool| -> Result<Self> {
            d.only(&["halfspace"])?;
            let cone = match (nonneg, d.usize("halfspace")?) {
                (false, None) => Cone::Free,
                (true, None) => Cone::Nonneg,
                (false, Some(axis)) => Cone::HalfSpace { axis },
                (true, Some(_)) => return Err(d.error("nonneg and halfspace are exclusive")),
            };
            Ok(Self::Gauge { norm, cone })
        };
        match d.name {
            "l1" | "one-norm" => gauge(GaugeNorm::L1, false),
            "nonneg-l1" | "nonneg-one-norm" => gauge(GaugeNorm::L1, true),
            "l2" | "two-norm" => gauge(GaugeNorm::L2, false),
            "nonneg-l2" => gauge(GaugeNorm::L2, true),
            "qs" | "huber" => {
                d.only(&["kappa", "curvature"])?;
                let curvature = match d.str("curvature") {
                    None | Some("identity") => QsCurvature::Identity,
                    Some("zero") => QsCurvature::Zero,
                    Some(_) => return Err(d.error("curvature must be `identity` or `zero`")),
                };
                Self::qs(d.f64("kappa")?.unwrap_or(1.0), curvature)
            }
            "vapnik" => {
                d.only(&["epsilon"])?;
                Self::vapnik(d.required_f64("epsilon")?)
            }
            _ => Err(d.error("unknown regularizer")),
        }
    }
}
