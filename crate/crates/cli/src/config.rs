//! TOML experiment configuration.
//!
//! Every key is optional; missing keys take the values of
//! [`ExperimentConfig::default`]. Unknown keys are rejected.
//!
//! ```toml
//! m = 120                 # measurements
//! n = 512                 # signal length
//! k = 20                  # nonzeros in the true signal
//! matrix_variance = 0.1   # entries of A are N(0, matrix_variance)
//! noise_std = 0.005       # dense noise w ~ N(0, noise_std²)
//! outliers = 5            # number of corrupted measurements
//! outlier_std = 2.0       # outlier values ~ N(0, outlier_std²)
//! misfits = ["least-squares", "huber:kappa=0.05", "student-t:nu=0.01"]
//! regularizer = "nonneg-l1"
//! seed = 1
//! replicates = 20         # seeds seed, seed+1, … used by `experiment`
//! output_dir = "out"
//!
//! [solver]
//! rtol = 1e-8             # |v(τ) − σ| ≤ rtol·max(1, σ)
//! tol_min = 1e-9          # tightest subproblem tolerance
//! tol_max = 1e-3          # loosest subproblem tolerance
//! theta = 0.1             # subproblem tolerance factor
//! max_newton = 60
//! max_inner = 20000
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use vfsense_core::pareto::ParetoOptions;
use vfsense_core::{Misfit, Regularizer, SpgOptions};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed configuration: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("cannot serialize configuration: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rtol: f64,
    pub tol_min: f64,
    pub tol_max: f64,
    pub theta: f64,
    pub max_newton: usize,
    pub max_inner: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            tol_min: 1e-9,
            tol_max: 1e-3,
            theta: 0.1,
            max_newton: 60,
            max_inner: 20_000,
        }
    }
}

impl SolverConfig {
    pub fn pareto_options(&self) -> ParetoOptions {
        ParetoOptions {
            rtol: self.rtol,
            tol_min: self.tol_min,
            tol_max: self.tol_max,
            theta: self.theta,
            max_iter: self.max_newton,
            spg: SpgOptions {
                max_iter: self.max_inner,
                ..SpgOptions::default()
            },
            ..ParetoOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub matrix_variance: f64,
    pub noise_std: f64,
    pub outliers: usize,
    pub outlier_std: f64,
    pub misfits: Vec<String>,
    pub regularizer: String,
    pub seed: u64,
    pub replicates: usize,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 120,
            n: 512,
            k: 20,
            matrix_variance: 0.1,
            noise_std: 0.005,
            outliers: 5,
            outlier_std: 2.0,
            misfits: vec![
                "least-squares".into(),
                "huber:kappa=0.05".into(),
                "student-t:nu=0.01".into(),
            ],
            regularizer: "nonneg-l1".into(),
            seed: 1,
            replicates: 20,
            solver: SolverConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if self.m == 0 || self.n == 0 {
            return invalid(format!("dimensions must be positive, got {}x{}", self.m, self.n));
        }
        if self.k > self.n {
            return invalid(format!("sparsity k = {} exceeds n = {}", self.k, self.n));
        }
        if self.outliers > self.m {
            return invalid(format!("{} outliers exceed m = {}", self.outliers, self.m));
        }
        if !(self.matrix_variance > 0.0 && self.matrix_variance.is_finite()) {
            return invalid(format!("matrix_variance must be positive, got {}", self.matrix_variance));
        }
        for (name, v) in [("noise_std", self.noise_std), ("outlier_std", self.outlier_std)] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be nonnegative, got {v}"));
            }
        }
        if self.misfits.is_empty() {
            return invalid("at least one misfit is required".into());
        }
        self.parsed_misfits()?;
        self.parsed_regularizer()?;
        self.solver
            .pareto_options()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn parsed_misfits(&self) -> Result<Vec<Misfit>, ConfigError> {
        self.misfits
            .iter()
            .map(|d| d.parse::<Misfit>().map_err(|e| ConfigError::Invalid(e.to_string())))
            .collect()
    }

    pub fn parsed_regularizer(&self) -> Result<Regularizer, ConfigError> {
        self.regularizer
            .parse()
            .map_err(|e: vfsense_core::Error| ConfigError::Invalid(e.to_string()))
    }

    /// Seeds of the replicate runs.
    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.replicates.max(1) as u64).map(move |i| self.seed.wrapping_add(i))
    }
}
