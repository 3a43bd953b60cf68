//! Oracle comparison suite behind the `verify` verb.

use serde::Serialize;
use vfsense_core::linalg::norm1;
use vfsense_core::oracle::{
    brute_force_value, fd_derivative, mu_grid_oracle, projection_qp_oracle, support_vertex_oracle, toy_problem,
    toy_value, GridSpec, OracleReport,
};
use vfsense_core::pareto::{verify_inverse, verify_inverse_with, InverseOptions, InverseOutcome};
use vfsense_core::value_fn::{evaluate, tau_derivative};
use vfsense_core::{Cone, GaugeNorm, GaussianSampler, Misfit, Problem, QsCurvature, Regularizer};

use crate::config::ExperimentConfig;
use crate::instance::generate_bpdn_instance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub check: String,
    #[serde(flatten)]
    pub report: OracleReport,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub passed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub entries: Vec<CheckEntry>,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

/// Multiplier recovery under test, `(φ, s, τ) ↦ μ̄`.
pub type MultiplierFn = dyn Fn(&Regularizer, &[f64], f64) -> vfsense_core::Result<f64> + Sync;

#[derive(Default)]
struct Collector {
    entries: Vec<CheckEntry>,
}

impl Collector {
    fn push(&mut self, check: &str, report: OracleReport, abs_tol: f64, rel_tol: f64) {
        let passed = report.within(abs_tol, rel_tol);
        self.entries.push(CheckEntry {
            check: check.into(),
            report,
            abs_tol,
            rel_tol,
            passed,
            note: None,
        });
    }

    fn fail(&mut self, check: &str, quantity: String, err: impl ToString) {
        self.entries.push(CheckEntry {
            check: check.into(),
            report: OracleReport::scalar(quantity, f64::NAN, f64::NAN),
            abs_tol: 0.0,
            rel_tol: 0.0,
            passed: false,
            note: Some(err.to_string()),
        });
    }

    fn skip(&mut self, check: &str, quantity: String, why: String) {
        self.entries.push(CheckEntry {
            check: check.into(),
            report: OracleReport::scalar(quantity, 0.0, 0.0),
            abs_tol: 0.0,
            rel_tol: 0.0,
            passed: true,
            note: Some(why),
        });
    }
}

/// Runs every check with the library multiplier recovery.
pub fn verify_all(cfg: &ExperimentConfig) -> VerificationReport {
    verify_with(cfg, &|reg, s, tau| reg.multiplier(s, tau))
}

/// Runs every check, taking multiplier recovery from `multiplier`.
pub fn verify_with(cfg: &ExperimentConfig, multiplier: &MultiplierFn) -> VerificationReport {
    let mut c = Collector::default();
    let mut rng = GaussianSampler::new(cfg.seed);
    toy_checks(&mut c);
    multiplier_checks(&mut c, &mut rng, multiplier);
    projection_checks(&mut c, &mut rng);
    support_checks(&mut c, &mut rng);
    derivative_checks(&mut c, &mut rng);
    instance_inverse_check(&mut c, cfg);
    let passed = c.entries.iter().all(|e| e.passed);
    VerificationReport {
        passed,
        entries: c.entries,
    }
}

fn toy_checks(c: &mut Collector) {
    let p = toy_problem();
    for tau in [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0] {
        let q = format!("v(tau={tau})");
        match evaluate(&p, tau, 1e-12) {
            Ok(s) => c.push("toy-curve", OracleReport::scalar(q, toy_value(tau), s.value), 1e-6, 0.0),
            Err(e) => c.fail("toy-curve", q, e),
        }
    }
    for tau in [0.5, 1.0, 2.0] {
        let q = format!("v(tau={tau})");
        let res = brute_force_value(&p, tau, &GridSpec::default())
            .and_then(|grid| Ok((grid, evaluate(&p, tau, 1e-12)?.value)));
        match res {
            Ok((grid, lib)) => c.push("grid-value", OracleReport::scalar(q, grid, lib), 1e-5, 0.0),
            Err(e) => c.fail("grid-value", q, e),
        }
    }
    for tau in [1.0, 2.0] {
        let q = format!("v2(v1(tau={tau}))");
        match verify_inverse(&p, tau, 1e-12) {
            Ok(InverseOutcome::Checked(r)) => {
                c.push("toy-inverse", OracleReport::scalar(q, tau, r.tau_back), 1e-6, 0.0)
            }
            Ok(other) => c.fail("toy-inverse", q, format!("unexpected {other:?}")),
            Err(e) => c.fail("toy-inverse", q, e),
        }
    }
}

fn random_vec(rng: &mut GaussianSampler, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * (2.0 * rng.uniform() - 1.0)).collect()
}

fn multiplier_checks(c: &mut Collector, rng: &mut GaussianSampler, multiplier: &MultiplierFn) {
    let regs = [
        Regularizer::one_norm(),
        Regularizer::nonneg_one_norm(),
        Regularizer::two_norm(),
        Regularizer::huber(0.5).unwrap(),
        Regularizer::huber(3.0).unwrap(),
        Regularizer::qs(2.0, QsCurvature::Zero).unwrap(),
        Regularizer::vapnik(0.3).unwrap(),
    ];
    for i in 0..70 {
        let reg = regs[i % regs.len()];
        let n = 1 + i % 4;
        let mut s = random_vec(rng, n, 3.0);
        if i % 10 == 1 {
            // Cone branch: the polar cone absorbs all of s.
            s.iter_mut().for_each(|v| *v = -v.abs());
        }
        let tau = 0.01 * 10f64.powf(4.0 * rng.uniform());
        let q = format!("mu[{reg}](tau={tau:.4})");
        match multiplier(&reg, &s, tau) {
            Ok(lib) => c.push("multiplier", OracleReport::scalar(q, mu_grid_oracle(&reg, &s, tau), lib), 1e-9, 1e-4),
            Err(e) => c.fail("multiplier", q, e),
        }
    }
}

fn projection_checks(c: &mut Collector, rng: &mut GaussianSampler) {
    let regs = [
        Regularizer::one_norm(),
        Regularizer::nonneg_one_norm(),
        Regularizer::gauge(GaugeNorm::L1, Cone::HalfSpace { axis: 0 }),
        Regularizer::qs(1.5, QsCurvature::Zero).unwrap(),
    ];
    for i in 0..60 {
        let reg = regs[i % regs.len()];
        let x = random_vec(rng, 1 + i % 6, 3.0);
        let tau = 4.0 * rng.uniform();
        let q = format!("proj[{reg}](tau={tau:.4})");
        match (reg.project_level_set(&x, tau), projection_qp_oracle(&reg, &x, tau)) {
            (Ok(lib), Ok(ora)) => c.push("projection", OracleReport::vector(q, &ora, &lib), 1e-8, 0.0),
            (Err(e), _) | (_, Err(e)) => c.fail("projection", q, e),
        }
    }
}

fn support_checks(c: &mut Collector, rng: &mut GaussianSampler) {
    let regs = [
        Regularizer::one_norm(),
        Regularizer::nonneg_one_norm(),
        Regularizer::qs(0.5, QsCurvature::Zero).unwrap(),
        Regularizer::vapnik(0.2).unwrap(),
    ];
    for i in 0..40 {
        let reg = regs[i % regs.len()];
        let z = random_vec(rng, 1 + i % 5, 2.0);
        let tau = 3.0 * rng.uniform();
        let q = format!("support[{reg}](tau={tau:.4})");
        match (reg.support_level_set(&z, tau), support_vertex_oracle(&reg, &z, tau)) {
            (Ok(lib), Ok(ora)) => c.push("support", OracleReport::scalar(q, ora, lib), 1e-10, 1e-12),
            (Err(e), _) | (_, Err(e)) => c.fail("support", q, e),
        }
    }
}

fn derivative_checks(c: &mut Collector, rng: &mut GaussianSampler) {
    let p = toy_problem();
    for tau in [0.5, 2.0] {
        let q = format!("dv/dtau(tau={tau})");
        let res = fd_derivative(&p, tau, 1e-4).and_then(|fd| Ok((fd, tau_derivative(&evaluate(&p, tau, 1e-12)?)?)));
        match res {
            Ok((fd, lib)) => c.push("toy-derivative", OracleReport::scalar(q, fd, lib), 1e-6, 1e-3),
            Err(e) => c.fail("toy-derivative", q, e),
        }
    }
    for (i, misfit) in [Misfit::LeastSquares, Misfit::Huber { kappa: 0.3 }].into_iter().enumerate() {
        let (m, n) = (12, 8);
        let a = vfsense_core::operators::gaussian_ensemble(m, n, 1.0 / m as f64, 100 + i as u64).expect("valid sizes");
        let b = random_vec(rng, m, 2.0);
        let reg = Regularizer::one_norm();
        let Ok(p) = Problem::new(a, b, misfit, reg) else { unreachable!("consistent sizes") };
        let tau_max = match evaluate(&p, 100.0, 1e-10) {
            Ok(s) => norm1(&s.x),
            Err(e) => {
                c.fail("derivative", format!("tau_max[{misfit}]"), e);
                continue;
            }
        };
        let tau = tau_max * (0.2 + 0.6 * rng.uniform());
        let h = 1e-4 * tau.max(1.0);
        let q = format!("dv/dtau[{misfit}](tau={tau:.4})");
        let res = fd_derivative(&p, tau, h).and_then(|fd| Ok((fd, tau_derivative(&evaluate(&p, tau, 1e-12)?)?)));
        match res {
            Ok((fd, lib)) => c.push("derivative", OracleReport::scalar(q, fd, lib), 1e-6, 1e-3),
            Err(e) => c.fail("derivative", q, e),
        }
    }
}

/// The inverse-function check on the configured instance, first misfit,
/// at half the budget of the true signal.
fn instance_inverse_check(c: &mut Collector, cfg: &ExperimentConfig) {
    let check = "instance-inverse";
    let bundle = match generate_bpdn_instance(cfg) {
        Ok(b) => b,
        Err(e) => return c.fail(check, "instance".into(), e),
    };
    let reg = match cfg.parsed_regularizer() {
        Ok(r) => r,
        Err(e) => return c.fail(check, "regularizer".into(), e),
    };
    let misfit = bundle.misfits[0];
    let tau = 0.5 * norm1(&bundle.x0);
    let q = format!("v2(v1(tau={tau:.6}))[{misfit}]");
    let problem = match Problem::new(&bundle.a, bundle.b.clone(), misfit, reg) {
        Ok(p) => p,
        Err(e) => return c.fail(check, q, e),
    };
    let mut pareto = cfg.solver.pareto_options();
    pareto.rtol = pareto.rtol.min(1e-10);
    pareto.tol_min = pareto.tol_min.min(1e-10);
    pareto.tol_max = pareto.tol_max.max(pareto.tol_min);
    let opts = InverseOptions {
        pareto,
        ..InverseOptions::default()
    };
    match verify_inverse_with(&problem, tau, 1e-10, &opts) {
        Ok(InverseOutcome::Checked(r)) => c.push(check, OracleReport::scalar(q, tau, r.tau_back), 1e-5, 0.0),
        Ok(InverseOutcome::NotApplicable { phi, mu, .. }) => {
            c.skip(check, q, format!("constraint not active: phi = {phi}, mu = {mu}"))
        }
        Err(e) => c.fail(check, q, e),
    }
}
