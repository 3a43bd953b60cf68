//! Synthetic robust nonnegative basis-pursuit instances
//! `b = Ax₀ + w + ζ`.

use rand::seq::index;
use serde::Serialize;
use vfsense_core::operators::gaussian_ensemble;
use vfsense_core::{DenseMatrix, GaussianSampler, LinearOperator, Misfit};

use crate::config::{ConfigError, ExperimentConfig};

/// Offset separating the signal/noise stream from the matrix stream.
const SIGNAL_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceBundle {
    pub seed: u64,
    #[serde(skip)]
    pub a: DenseMatrix,
    /// Nonnegative with exactly `k` nonzeros.
    pub x0: Vec<f64>,
    /// Dense Gaussian noise.
    pub w: Vec<f64>,
    /// Sparse outliers.
    pub zeta: Vec<f64>,
    pub b: Vec<f64>,
    pub misfits: Vec<Misfit>,
    /// `σ_ρ = ρ(w + ζ)` for each misfit, in order.
    pub sigmas: Vec<f64>,
}

impl InstanceBundle {
    /// `b − Ax₀ = w + ζ`
    pub fn true_error(&self) -> Vec<f64> {
        self.w.iter().zip(&self.zeta).map(|(w, z)| w + z).collect()
    }
}

/// Draws an instance from `cfg` with its own `seed`.
///
/// The matrix comes from [`gaussian_ensemble`] seeded with `seed`; the
/// support of `x₀`, its magnitudes `|N(0, 1)|`, the noise, the outlier
/// positions and the outlier values come from a second stream in that order.
pub fn generate_bpdn_instance(cfg: &ExperimentConfig) -> Result<InstanceBundle, ConfigError> {
    cfg.validate()?;
    let misfits = cfg.parsed_misfits()?;
    let seed = cfg.seed;
    let a = gaussian_ensemble(cfg.m, cfg.n, cfg.matrix_variance, seed)
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let mut rng = GaussianSampler::new(seed ^ SIGNAL_STREAM);

    let mut x0 = vec![0.0; cfg.n];
    for i in index::sample(rng.rng_mut(), cfg.n, cfg.k) {
        x0[i] = rng.standard_normal().abs();
    }
    let w: Vec<f64> = (0..cfg.m).map(|_| rng.normal(0.0, cfg.noise_std)).collect();
    let mut zeta = vec![0.0; cfg.m];
    for i in index::sample(rng.rng_mut(), cfg.m, cfg.outliers) {
        zeta[i] = rng.normal(0.0, cfg.outlier_std);
    }

    let ax = a.apply(&x0).expect("dimensions agree by construction");
    let b: Vec<f64> = ax.iter().zip(w.iter().zip(&zeta)).map(|(a, (w, z))| a + w + z).collect();
    let mut bundle = InstanceBundle {
        seed,
        a,
        x0,
        w,
        zeta,
        b,
        misfits,
        sigmas: Vec::new(),
    };
    let err = bundle.true_error();
    bundle.sigmas = bundle.misfits.iter().map(|m| m.value(&err)).collect();
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            seed: 1,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn counts() {
        let b = generate_bpdn_instance(&cfg()).unwrap();
        assert_eq!(b.x0.iter().filter(|x| **x != 0.0).count(), 20);
        assert!(b.x0.iter().all(|x| *x >= 0.0));
        assert_eq!(b.zeta.iter().filter(|z| **z != 0.0).count(), 5);
        assert_eq!((b.a.rows(), b.a.cols(), b.b.len()), (120, 512, 120));
        assert_eq!(b.sigmas.len(), 3);
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate_bpdn_instance(&cfg()).unwrap(), generate_bpdn_instance(&cfg()).unwrap());
        let other = ExperimentConfig { seed: 2, ..cfg() };
        assert_ne!(generate_bpdn_instance(&other).unwrap().x0, generate_bpdn_instance(&cfg()).unwrap().x0);
    }

    #[test]
    fn clean_data_has_zero_budgets() {
        let clean = ExperimentConfig {
            noise_std: 0.0,
            outliers: 0,
            ..cfg()
        };
        let b = generate_bpdn_instance(&clean).unwrap();
        assert!(b.sigmas.iter().all(|s| *s == 0.0));
        assert_eq!(b.b, b.a.apply(&b.x0).unwrap());
    }
}
