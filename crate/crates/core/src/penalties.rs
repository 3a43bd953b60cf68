//! Misfit functions `ρ`, applied to the residual `r = b − Ax`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::linalg::{norm1, norm2, norm_inf};

/// A separable (or, for `TwoNorm`, rotation-invariant) misfit.
///
/// Every kind is finite-valued, nonnegative and vanishes at zero. All but
/// `StudentT` are convex.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Misfit {
    /// `½‖r‖²`
    LeastSquares,
    /// `‖r‖₂`
    TwoNorm,
    /// `Σ ½rᵢ²` for `|rᵢ| ≤ κ`, `κ|rᵢ| − κ²/2` beyond.
    Huber { kappa: f64 },
    /// `Σ max(|rᵢ| − ε, 0)`
    Vapnik { epsilon: f64 },
    /// `Σ log(1 + rᵢ²/ν)`
    StudentT { nu: f64 },
}

impl Misfit {
    pub fn huber(kappa: f64) -> Result<Self> {
        positive("kappa", kappa)?;
        Ok(Self::Huber { kappa })
    }

    pub fn vapnik(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "epsilon must be nonnegative, got {epsilon}"
            )));
        }
        Ok(Self::Vapnik { epsilon })
    }

    pub fn student_t(nu: f64) -> Result<Self> {
        positive("nu", nu)?;
        Ok(Self::StudentT { nu })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LeastSquares => "least-squares",
            Self::TwoNorm => "two-norm",
            Self::Huber { .. } => "huber",
            Self::Vapnik { .. } => "vapnik",
            Self::StudentT { .. } => "student-t",
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, Self::StudentT { .. })
    }

    /// All cataloged misfits are finite everywhere, so `dom ρ = ℝᵐ`.
    pub fn is_finite_valued(&self) -> bool {
        true
    }

    /// Whether the horizon cone `{r : ρ^∞(r) ≤ 0}` is `{0}`. Each kind grows
    /// without bound along every ray, so this holds across the catalog.
    pub fn horizon_is_trivial(&self) -> bool {
        true
    }

    pub fn value(&self, r: &[f64]) -> f64 {
        match *self {
            Self::LeastSquares => 0.5 * crate::linalg::dot(r, r),
            Self::TwoNorm => norm2(r),
            Self::Huber { kappa } => r.iter().map(|&ri| huber_scalar(ri, kappa)).sum(),
            Self::Vapnik { epsilon } => r.iter().map(|ri| (ri.abs() - epsilon).max(0.0)).sum(),
            Self::StudentT { nu } => r.iter().map(|ri| libm::log1p(ri * ri / nu)).sum(),
        }
    }

    /// `∇ρ(r)`. Fails at points where `ρ` is not differentiable: `r = 0` for
    /// `TwoNorm`, `|rᵢ| = ε` for `Vapnik`.
    pub fn gradient(&self, r: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; r.len()];
        self.gradient_into(r, &mut out)?;
        Ok(out)
    }

    pub fn gradient_into(&self, r: &[f64], out: &mut [f64]) -> Result<()> {
        match *self {
            Self::TwoNorm => {
                let nrm = norm2(r);
                if nrm == 0.0 {
                    return Err(Error::Nonsmooth("two-norm misfit at r = 0"));
                }
                out.iter_mut().zip(r).for_each(|(o, ri)| *o = ri / nrm);
            }
            Self::Vapnik { epsilon } => {
                if r.iter().any(|ri| ri.abs() == epsilon) {
                    return Err(Error::Nonsmooth("vapnik misfit at |r_i| = epsilon"));
                }
                self.subgradient_into(r, out);
            }
            _ => self.subgradient_into(r, out),
        }
        Ok(())
    }

    /// An element of `∂ρ(r)`: the gradient where it exists, otherwise the
    /// minimum-norm choice (zero for `TwoNorm` at the origin and for `Vapnik`
    /// components sitting exactly on a kink).
    pub fn subgradient_into(&self, r: &[f64], out: &mut [f64]) {
        match *self {
            Self::LeastSquares => out.copy_from_slice(r),
            Self::TwoNorm => {
                let nrm = norm2(r);
                out.iter_mut()
                    .zip(r)
                    .for_each(|(o, ri)| *o = if nrm > 0.0 { ri / nrm } else { 0.0 });
            }
            Self::Huber { kappa } => {
                out.iter_mut().zip(r).for_each(|(o, ri)| *o = ri.clamp(-kappa, kappa));
            }
            Self::Vapnik { epsilon } => {
                out.iter_mut().zip(r).for_each(|(o, &ri)| {
                    *o = if ri.abs() > epsilon {
                        crate::linalg::sign(ri)
                    } else {
                        0.0
                    }
                });
            }
            Self::StudentT { nu } => {
                out.iter_mut().zip(r).for_each(|(o, ri)| *o = 2.0 * ri / (nu + ri * ri));
            }
        }
    }

    /// Convex conjugate `ρ*(u) = sup_r ⟨u, r⟩ − ρ(r)`; `+∞` off its domain.
    pub fn conjugate(&self, u: &[f64]) -> Result<f64> {
        let inside = |ok: bool, val: f64| if ok { val } else { f64::INFINITY };
        Ok(match *self {
            Self::LeastSquares => 0.5 * crate::linalg::dot(u, u),
            // Unit-norm gradients r/‖r‖ may exceed 1 by rounding.
            Self::TwoNorm => inside(norm2(u) <= 1.0 + 4.0 * f64::EPSILON, 0.0),
            Self::Huber { kappa } => inside(norm_inf(u) <= kappa, 0.5 * crate::linalg::dot(u, u)),
            Self::Vapnik { epsilon } => inside(norm_inf(u) <= 1.0, epsilon * norm1(u)),
            Self::StudentT { .. } => return Err(Error::NoConjugate("student-t")),
        })
    }
}

pub(crate) fn huber_scalar(x: f64, kappa: f64) -> f64 {
    let a = x.abs();
    if a <= kappa {
        0.5 * x * x
    } else {
        kappa * a - 0.5 * kappa * kappa
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!(
            "{name} must be positive, got {value}"
        )))
    }
}

impl fmt::Display for Misfit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LeastSquares | Self::TwoNorm => f.write_str(self.name()),
            Self::Huber { kappa } => write!(f, "huber:kappa={kappa}"),
            Self::Vapnik { epsilon } => write!(f, "vapnik:epsilon={epsilon}"),
            Self::StudentT { nu } => write!(f, "student-t:nu={nu}"),
        }
    }
}

/// Parses `least-squares`, `two-norm`, `huber:kappa=K`, `vapnik:epsilon=E`
/// and `student-t:nu=N`. Short aliases `ls`, `l2`, `student` are accepted.
impl FromStr for Misfit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let d = Descriptor::parse(s)?;
        match d.name {
            "least-squares" | "ls" => {
                d.only(&[])?;
                Ok(Self::LeastSquares)
            }
            "two-norm" | "l2" => {
                d.only(&[])?;
                Ok(Self::TwoNorm)
            }
            "huber" => {
                d.only(&["kappa"])?;
                Self::huber(d.f64("kappa")?.unwrap_or(1.0))
            }
            "vapnik" => {
                d.only(&["epsilon"])?;
                Self::vapnik(d.required_f64("epsilon")?)
            }
            "student-t" | "student" => {
                d.only(&["nu"])?;
                Self::student_t(d.f64("nu")?.unwrap_or(1.0))
            }
            _ => Err(d.error("unknown misfit")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const ALL: [Misfit; 5] = [
        Misfit::LeastSquares,
        Misfit::TwoNorm,
        Misfit::Huber { kappa: 0.7 },
        Misfit::Vapnik { epsilon: 0.3 },
        Misfit::StudentT { nu: 2.0 },
    ];

    /// `sup_{|w| ≤ κ} [w·r − w²/2]` on a fine grid.
    fn huber_by_sup(r: f64, kappa: f64) -> f64 {
        let steps = 200_000;
        (0..=steps)
            .map(|i| -kappa + 2.0 * kappa * i as f64 / steps as f64)
            .map(|w| w * r - 0.5 * w * w)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup_r [u·r − ρ(r)]` on a grid wide enough for the test inputs.
    fn conjugate_by_sup(rho: &Misfit, u: &[f64]) -> f64 {
        // Separable kinds: sum of scalar sups.
        u.iter()
            .map(|&ui| {
                (-40_000..=40_000)
                    .map(|i| i as f64 * 1e-3)
                    .map(|r| ui * r - rho.value(&[r]))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum()
    }

    fn central_difference(rho: &Misfit, r: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..r.len())
            .map(|i| {
                let mut p = r.to_vec();
                let mut m = r.to_vec();
                p[i] += h;
                m[i] -= h;
                (rho.value(&p) - rho.value(&m)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn value_examples() {
        let oracle = huber_by_sup(0.5, 1.0) + huber_by_sup(3.0, 1.0);
        assert_relative_eq!(oracle, 2.625, epsilon = 1e-9);
        assert_relative_eq!(Misfit::Huber { kappa: 1.0 }.value(&[0.5, 3.0]), oracle, epsilon = 1e-9);
        assert_eq!(Misfit::StudentT { nu: 1.0 }.value(&[0.0]), 0.0);
        assert_eq!(Misfit::Vapnik { epsilon: 1.0 }.value(&[0.5, -2.0]), 1.0);
        assert_eq!(Misfit::LeastSquares.value(&[2.0, 1.0]), 2.5);
        assert_eq!(Misfit::TwoNorm.value(&[3.0, 4.0]), 5.0);
    }

    #[test]
    fn gradient_examples() {
        let huber = Misfit::Huber { kappa: 1.0 };
        assert_eq!(huber.gradient(&[0.5, 3.0]).unwrap(), vec![0.5, 1.0]);
        let fd = central_difference(&huber, &[0.5, 3.0]);
        assert_relative_eq!(fd[0], 0.5, epsilon = 1e-8);
        assert_relative_eq!(fd[1], 1.0, epsilon = 1e-8);

        let student = Misfit::StudentT { nu: 1.0 };
        assert_eq!(student.gradient(&[1.0]).unwrap(), vec![1.0]);
        assert_relative_eq!(central_difference(&student, &[1.0])[0], 1.0, epsilon = 1e-8);

        assert_eq!(Misfit::LeastSquares.gradient(&[2.0, 1.0]).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn nonsmooth_points_are_errors() {
        assert!(matches!(
            Misfit::TwoNorm.gradient(&[0.0, 0.0]),
            Err(Error::Nonsmooth(_))
        ));
        assert!(matches!(
            Misfit::Vapnik { epsilon: 1.0 }.gradient(&[1.0, 0.2]),
            Err(Error::Nonsmooth(_))
        ));
        let mut g = [9.0; 2];
        Misfit::TwoNorm.subgradient_into(&[0.0, 0.0], &mut g);
        assert_eq!(g, [0.0, 0.0]);
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(Misfit::LeastSquares.conjugate(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(
            Misfit::Huber { kappa: 1.0 }.conjugate(&[0.5, 2.0]).unwrap(),
            f64::INFINITY
        );
        let vapnik = Misfit::Vapnik { epsilon: 1.0 };
        let u = [0.5, -0.5];
        assert_relative_eq!(conjugate_by_sup(&vapnik, &u), 1.0, epsilon = 1e-9);
        assert_relative_eq!(vapnik.conjugate(&u).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(
            Misfit::StudentT { nu: 1.0 }.conjugate(&[0.0]),
            Err(Error::NoConjugate("student-t"))
        );
    }

    #[test]
    fn conjugates_match_numeric_sup() {
        let cases: [(Misfit, &[f64]); 4] = [
            (Misfit::LeastSquares, &[0.3, -1.1]),
            (Misfit::Huber { kappa: 1.5 }, &[0.7, -1.4]),
            (Misfit::Vapnik { epsilon: 0.4 }, &[0.9, -0.2, 0.0]),
            (Misfit::Vapnik { epsilon: 2.0 }, &[-1.0, 1.0]),
        ];
        for (rho, u) in cases {
            assert_relative_eq!(
                rho.conjugate(u).unwrap(),
                conjugate_by_sup(&rho, u),
                epsilon = 1e-5
            );
        }
    }

    #[test]
    fn huber_tends_to_least_squares() {
        let r = [0.3, -2.0, 17.0];
        let huber = Misfit::Huber { kappa: 1e6 };
        assert_relative_eq!(huber.value(&r), Misfit::LeastSquares.value(&r), epsilon = 1e-6);
    }

    #[test]
    fn convexity_flags() {
        for rho in ALL {
            assert_eq!(rho.is_convex(), !matches!(rho, Misfit::StudentT { .. }));
            assert_eq!(rho.value(&[0.0, 0.0]), 0.0);
        }
    }

    #[test]
    fn descriptors_round_trip() {
        for rho in ALL {
            assert_eq!(rho.to_string().parse::<Misfit>().unwrap(), rho);
        }
        assert_eq!("huber:kappa=1.0".parse::<Misfit>().unwrap(), Misfit::Huber { kappa: 1.0 });
        assert_eq!("ls".parse::<Misfit>().unwrap(), Misfit::LeastSquares);
        assert!("huber:kappa=-1".parse::<Misfit>().is_err());
        assert!("huber:k=1".parse::<Misfit>().is_err());
        assert!("quantile".parse::<Misfit>().is_err());
        assert!("vapnik".parse::<Misfit>().is_err());
    }

    fn residual() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5.0..5.0f64, 1..6)
    }

    proptest! {
        #[test]
        fn nonnegative(r in residual()) {
            for rho in ALL {
                prop_assert!(rho.value(&r) >= 0.0);
            }
        }

        #[test]
        fn gradients_match_central_differences(r in residual()) {
            for rho in ALL {
                // Stay clear of kinks and of the two-norm origin.
                let near_kink = match rho {
                    Misfit::Huber { kappa } => r.iter().any(|x| (x.abs() - kappa).abs() < 1e-3),
                    Misfit::Vapnik { epsilon } => r.iter().any(|x| (x.abs() - epsilon).abs() < 1e-3),
                    Misfit::TwoNorm => norm2(&r) < 1e-3,
                    _ => false,
                };
                if near_kink {
                    continue;
                }
                let g = rho.gradient(&r).unwrap();
                let fd = central_difference(&rho, &r);
                for (a, b) in g.iter().zip(&fd) {
                    prop_assert!((a - b).abs() <= 1e-5 * (1.0 + a.abs()), "{} {:?} {:?}", rho, g, fd);
                }
            }
        }

        #[test]
        fn fenchel_young(r in residual(), seed in proptest::collection::vec(-1.0..1.0f64, 6)) {
            for rho in ALL.iter().filter(|m| m.is_convex()) {
                let u: Vec<f64> = r.iter().zip(&seed).map(|(_, s)| *s * 0.25).collect();
                let conj = rho.conjugate(&u).unwrap();
                if conj.is_finite() {
                    prop_assert!(rho.value(&r) + conj >= crate::linalg::dot(&r, &u) - 1e-12);
                }
                let mut g = vec![0.0; r.len()];
                rho.subgradient_into(&r, &mut g);
                let equality = rho.value(&r) + rho.conjugate(&g).unwrap() - crate::linalg::dot(&r, &g);
                prop_assert!(equality.abs() <= 1e-8 * (1.0 + rho.value(&r)), "{} gap {}", rho, equality);
            }
        }
    }
}
