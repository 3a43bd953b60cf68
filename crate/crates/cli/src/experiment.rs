//! Robust basis-pursuit recovery runs and value-function sweeps.

use std::path::Path;
use std::time::Instant;

use anyhow::Result;
use rayon::prelude::*;
use serde::Serialize;
use vfsense_core::linalg::{dist2, norm2, norm_inf};
use vfsense_core::pareto::solve_constrained;
use vfsense_core::value_fn::{evaluate, tau_derivative};
use vfsense_core::{LinearOperator, ParetoStatus, ParetoTrace, Problem, Regularizer};

use crate::config::{ConfigError, ExperimentConfig, SolverConfig};
use crate::instance::{generate_bpdn_instance, InstanceBundle};
use crate::io::{write_json, write_signals_csv, write_trace_csv, CurveRow, SignalColumn};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisfitOutcome {
    /// Misfit descriptor.
    pub misfit: String,
    pub sigma: f64,
    pub tau_star: Option<f64>,
    pub status: Option<ParetoStatus>,
    /// `‖x̂ − x₀‖₂ / ‖x₀‖₂`
    pub rel_error: Option<f64>,
    /// Support precision and recall at threshold `1e−3 ‖x̂‖∞`.
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub newton_iters: usize,
    pub inner_iters: usize,
    /// Solver failure message; the run continues with the other misfits.
    pub error: Option<String>,
    #[serde(skip)]
    pub x_hat: Vec<f64>,
    #[serde(skip)]
    pub residual: Vec<f64>,
    #[serde(skip)]
    pub trace: Option<ParetoTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedReport {
    pub seed: u64,
    pub outcomes: Vec<MisfitOutcome>,
    #[serde(skip)]
    pub bundle: InstanceBundle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MisfitSummary {
    pub misfit: String,
    pub median_rel_error: Option<f64>,
    pub mean_rel_error: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub summary: Vec<MisfitSummary>,
    pub seeds: Vec<SeedReport>,
    pub elapsed_secs: f64,
}

impl ExperimentReport {
    pub fn median(&self, misfit_index: usize) -> Option<f64> {
        self.summary.get(misfit_index).and_then(|s| s.median_rel_error)
    }
}

/// Precision and recall of the support of `x_hat` (entries above
/// `1e−3 ‖x̂‖∞`) against the nonzeros of `x0`.
pub fn support_metrics(x0: &[f64], x_hat: &[f64]) -> (f64, f64) {
    let thresh = 1e-3 * norm_inf(x_hat);
    let found: Vec<bool> = x_hat.iter().map(|v| v.abs() > thresh).collect();
    let truth: Vec<bool> = x0.iter().map(|v| *v != 0.0).collect();
    let hits = found.iter().zip(&truth).filter(|(f, t)| **f && **t).count() as f64;
    let n_found = found.iter().filter(|f| **f).count() as f64;
    let n_true = truth.iter().filter(|t| **t).count() as f64;
    let ratio = |num: f64, den: f64| if den == 0.0 { 1.0 } else { num / den };
    (ratio(hits, n_found), ratio(hits, n_true))
}

/// Solves `min φ(x) s.t. ρ(b − Ax) ≤ σ_ρ` for the `index`-th misfit.
pub fn solve_misfit(
    bundle: &InstanceBundle,
    index: usize,
    regularizer: Regularizer,
    solver: &SolverConfig,
) -> MisfitOutcome {
    let misfit = bundle.misfits[index];
    let sigma = bundle.sigmas[index];
    let mut out = MisfitOutcome {
        misfit: misfit.to_string(),
        sigma,
        tau_star: None,
        status: None,
        rel_error: None,
        precision: None,
        recall: None,
        newton_iters: 0,
        inner_iters: 0,
        error: None,
        x_hat: Vec::new(),
        residual: Vec::new(),
        trace: None,
    };
    let problem = match Problem::new(&bundle.a, bundle.b.clone(), misfit, regularizer) {
        Ok(p) => p,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    match solve_constrained(&problem, sigma, &solver.pareto_options()) {
        Ok(sol) => {
            let (precision, recall) = support_metrics(&bundle.x0, &sol.x);
            out.tau_star = Some(sol.trace.tau_star);
            out.status = Some(sol.trace.status);
            out.rel_error = Some(dist2(&sol.x, &bundle.x0) / norm2(&bundle.x0).max(f64::MIN_POSITIVE));
            out.precision = Some(precision);
            out.recall = Some(recall);
            out.newton_iters = sol.trace.steps.len();
            out.inner_iters = sol.trace.inner_iterations();
            out.residual = sol.sample.residual;
            out.x_hat = sol.x;
            out.trace = Some(sol.trace);
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// One instance at `cfg.seed`, every misfit solved concurrently.
pub fn run_seed(cfg: &ExperimentConfig) -> Result<SeedReport, ConfigError> {
    let bundle = generate_bpdn_instance(cfg)?;
    let reg = cfg.parsed_regularizer()?;
    let outcomes = (0..bundle.misfits.len())
        .into_par_iter()
        .map(|i| solve_misfit(&bundle, i, reg, &cfg.solver))
        .collect();
    Ok(SeedReport {
        seed: cfg.seed,
        outcomes,
        bundle,
    })
}

/// All replicate seeds of `cfg`, run concurrently.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, ConfigError> {
    cfg.validate()?;
    let start = Instant::now();
    let seeds: Vec<u64> = cfg.seeds().collect();
    let mut reports = seeds
        .par_iter()
        .map(|&seed| run_seed(&ExperimentConfig { seed, ..cfg.clone() }))
        .collect::<Result<Vec<_>, _>>()?;
    reports.sort_by_key(|r| r.seed);
    let summary = (0..cfg.misfits.len())
        .map(|i| {
            let mut errs: Vec<f64> = reports.iter().filter_map(|r| r.outcomes[i].rel_error).collect();
            errs.sort_by(f64::total_cmp);
            MisfitSummary {
                misfit: reports[0].outcomes[i].misfit.clone(),
                median_rel_error: median(&errs),
                mean_rel_error: (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64),
                failures: reports.len() - errs.len(),
            }
        })
        .collect();
    Ok(ExperimentReport {
        config: cfg.clone(),
        summary,
        seeds: reports,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

fn short_name(descriptor: &str) -> &str {
    descriptor.split(':').next().unwrap_or(descriptor)
}

/// `signals.csv` and `trace.csv` for one seed into `dir`.
pub fn write_seed_artifacts(report: &SeedReport, dir: &Path) -> Result<()> {
    let columns: Vec<SignalColumn> = report
        .outcomes
        .iter()
        .map(|o| SignalColumn {
            name: short_name(&o.misfit).to_string(),
            x: o.x_hat.clone(),
            residual: o.residual.clone(),
        })
        .collect();
    write_signals_csv(
        &dir.join("signals.csv"),
        &report.bundle.x0,
        &report.bundle.true_error(),
        &columns,
    )?;
    write_trace_csv(
        &dir.join("trace.csv"),
        report
            .outcomes
            .iter()
            .filter_map(|o| o.trace.as_ref().map(|t| (short_name(&o.misfit), t))),
    )
}

/// `summary.json` plus per-seed directories `seed-<s>/`.
pub fn write_experiment(report: &ExperimentReport, dir: &Path) -> Result<()> {
    write_json(&dir.join("summary.json"), report)?;
    for seed in &report.seeds {
        write_seed_artifacts(seed, &dir.join(format!("seed-{}", seed.seed)))?;
    }
    Ok(())
}

/// Samples `v(b, τ)` on `taus` concurrently.
pub fn pareto_curve<A: LinearOperator + Sync>(problem: &Problem<A>, taus: &[f64], tol: f64) -> Result<Vec<CurveRow>> {
    taus.par_iter()
        .map(|&tau| {
            let s = evaluate(problem, tau, tol)?;
            Ok(CurveRow {
                tau,
                v: s.value,
                dv_dtau: tau_derivative(&s).ok(),
                gap: s.duality_gap,
                iters: s.iterations,
            })
        })
        .collect()
}
