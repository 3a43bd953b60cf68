use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use vfsense::config::ExperimentConfig;
use vfsense::experiment::{pareto_curve, run_experiment, run_seed, write_experiment, write_seed_artifacts};
use vfsense::io::{
    read_matrix_csv, read_vector_csv, write_curve_csv, write_json, write_signals_csv, write_trace_csv, SignalColumn,
};
use vfsense::verify::verify_all;
use vfsense_core::oracle::toy_problem;
use vfsense_core::pareto::{solve_constrained, ParetoTrace};
use vfsense_core::value_fn::{evaluate, ValueSample};
use vfsense_core::{DenseMatrix, Misfit, Problem, Regularizer};

const EXIT_SOLVER: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_CONFIG: u8 = 3;

/// Value-function root finding for level-constrained inverse problems.
#[derive(Parser)]
#[command(name = "vfsense", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance: a synthetic one from the config, or A and b from CSV.
    Solve(SolveArgs),
    /// Sample v(b, τ) on a grid of budgets and write curve.csv.
    ParetoCurve(CurveArgs),
    /// Recovery experiment over replicate seeds.
    Experiment(ConfigArgs),
    /// Compare closed forms against brute-force oracles.
    Verify(ConfigArgs),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    outliers: Option<usize>,
    #[arg(long)]
    outlier_std: Option<f64>,
    /// Misfit descriptor, e.g. `huber:kappa=0.05`; repeat for several.
    #[arg(long = "misfit")]
    misfits: Vec<String>,
    /// Regularizer descriptor, e.g. `nonneg-l1`.
    #[arg(long)]
    regularizer: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProblemFiles {
    /// Matrix A as CSV, one row per line.
    #[arg(long, requires = "rhs")]
    matrix: Option<PathBuf>,
    /// Right-hand side b as CSV.
    #[arg(long, requires = "matrix")]
    rhs: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[command(flatten)]
    files: ProblemFiles,
    /// Misfit bound σ (with --matrix).
    #[arg(long, conflicts_with = "tau")]
    sigma: Option<f64>,
    /// Budget τ (with --matrix): evaluate v(b, τ) only.
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[command(flatten)]
    files: ProblemFiles,
    /// Use the two-dimensional reference instance A = I, b = (2, 1).
    #[arg(long, conflicts_with = "matrix")]
    toy: bool,
    /// Comma-separated budgets.
    #[arg(long, value_delimiter = ',')]
    taus: Vec<f64>,
    /// Evenly spaced budgets on [0, tau_max] when --taus is absent.
    #[arg(long, default_value_t = 3.0)]
    tau_max: f64,
    #[arg(long, default_value_t = 13)]
    points: usize,
    /// Subproblem tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn fail(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |err| Failure { code, err }
}

type Outcome = Result<(), Failure>;

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| fail(EXIT_CONFIG)(e.into()))?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = self.$field.clone() { cfg.$field = v; })* };
        }
        set!(seed, m, n, k, noise_std, outliers, outlier_std, regularizer, replicates);
        if !self.misfits.is_empty() {
            cfg.misfits = self.misfits.clone();
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate().map_err(|e| fail(EXIT_CONFIG)(e.into()))?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::ParetoCurve(args) => curve(args),
        Command::Experiment(args) => experiment(args),
        Command::Verify(args) => verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, err }) => {
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}

fn load_problem(files: &ProblemFiles, cfg: &ExperimentConfig) -> Result<Option<Problem>, Failure> {
    let (Some(a), Some(b)) = (&files.matrix, &files.rhs) else {
        return Ok(None);
    };
    let a: DenseMatrix = read_matrix_csv(a).map_err(fail(EXIT_CONFIG))?;
    let b = read_vector_csv(b).map_err(fail(EXIT_CONFIG))?;
    let misfit: Misfit = cfg.parsed_misfits().map_err(|e| fail(EXIT_CONFIG)(e.into()))?[0];
    let reg: Regularizer = cfg.parsed_regularizer().map_err(|e| fail(EXIT_CONFIG)(e.into()))?;
    Problem::new(a, b, misfit, reg)
        .map(Some)
        .map_err(|e| fail(EXIT_CONFIG)(e.into()))
}

#[derive(Serialize)]
struct FileSolveSummary<'a> {
    misfit: String,
    regularizer: String,
    sigma: Option<f64>,
    trace: Option<&'a ParetoTrace>,
    sample: &'a ValueSample,
}

fn solve(args: SolveArgs) -> Outcome {
    let cfg = args.cfg.resolve()?;
    let out = cfg.output_dir.clone();
    if let Some(problem) = load_problem(&args.files, &cfg)? {
        return solve_files(&problem, args.sigma, args.tau, &cfg, &out);
    }
    if args.sigma.is_some() || args.tau.is_some() {
        return Err(fail(EXIT_CONFIG)(anyhow!("--sigma and --tau need --matrix and --rhs")));
    }
    let report = run_seed(&cfg).map_err(|e| fail(EXIT_CONFIG)(e.into()))?;
    write_json(&out.join("summary.json"), &report).map_err(fail(EXIT_SOLVER))?;
    write_seed_artifacts(&report, &out).map_err(fail(EXIT_SOLVER))?;
    for o in &report.outcomes {
        match (&o.error, o.rel_error) {
            (Some(e), _) => println!("{:<24} failed: {e}", o.misfit),
            (None, Some(err)) => println!(
                "{:<24} tau* = {:.6}  rel. error = {err:.4}  newton = {}  inner = {}",
                o.misfit,
                o.tau_star.unwrap_or(f64::NAN),
                o.newton_iters,
                o.inner_iters
            ),
            _ => {}
        }
    }
    if report.outcomes.iter().any(|o| o.error.is_some()) {
        return Err(fail(EXIT_SOLVER)(anyhow!("at least one misfit failed")));
    }
    Ok(())
}

fn solve_files(problem: &Problem, sigma: Option<f64>, tau: Option<f64>, cfg: &ExperimentConfig, out: &Path) -> Outcome {
    let (sample, trace) = match (sigma, tau) {
        (Some(sigma), _) => {
            let sol = solve_constrained(problem, sigma, &cfg.solver.pareto_options()).map_err(|e| fail(EXIT_SOLVER)(e.into()))?;
            (sol.sample, Some(sol.trace))
        }
        (None, Some(tau)) => (
            evaluate(problem, tau, cfg.solver.tol_min).map_err(|e| fail(EXIT_SOLVER)(e.into()))?,
            None,
        ),
        (None, None) => return Err(fail(EXIT_CONFIG)(anyhow!("give --sigma or --tau"))),
    };
    let summary = FileSolveSummary {
        misfit: problem.misfit.to_string(),
        regularizer: problem.regularizer.to_string(),
        sigma,
        trace: trace.as_ref(),
        sample: &sample,
    };
    write_json(&out.join("summary.json"), &summary).map_err(fail(EXIT_SOLVER))?;
    let name = problem.misfit.name();
    if let Some(t) = &trace {
        write_trace_csv(&out.join("trace.csv"), [(name, t)]).map_err(fail(EXIT_SOLVER))?;
    }
    let col = SignalColumn {
        name: name.into(),
        x: sample.x.clone(),
        residual: sample.residual.clone(),
    };
    write_signals_csv(&out.join("signals.csv"), &[], &[], &[col]).map_err(fail(EXIT_SOLVER))?;
    println!("tau = {:.9}  v = {:.9e}  mu = {:.6e}", sample.tau, sample.value, sample.mu);
    Ok(())
}

fn curve(args: CurveArgs) -> Outcome {
    let cfg = args.cfg.resolve()?;
    let taus = if args.taus.is_empty() {
        let steps = args.points.max(2) - 1;
        (0..=steps).map(|i| args.tau_max * i as f64 / steps as f64).collect()
    } else {
        args.taus.clone()
    };
    let rows = if args.toy {
        pareto_curve(&toy_problem(), &taus, args.tol)
    } else if let Some(problem) = load_problem(&args.files, &cfg)? {
        pareto_curve(&problem, &taus, args.tol)
    } else {
        let bundle = vfsense::instance::generate_bpdn_instance(&cfg).map_err(|e| fail(EXIT_CONFIG)(e.into()))?;
        let reg = cfg.parsed_regularizer().map_err(|e| fail(EXIT_CONFIG)(e.into()))?;
        let problem = Problem::new(&bundle.a, bundle.b.clone(), bundle.misfits[0], reg)
            .map_err(|e| fail(EXIT_CONFIG)(e.into()))?;
        pareto_curve(&problem, &taus, args.tol)
    }
    .map_err(fail(EXIT_SOLVER))?;
    let path = cfg.output_dir.join("curve.csv");
    write_curve_csv(&path, &rows).map_err(fail(EXIT_SOLVER))?;
    println!("wrote {} points to {}", rows.len(), path.display());
    Ok(())
}

fn experiment(args: ConfigArgs) -> Outcome {
    let cfg = args.resolve()?;
    let report = run_experiment(&cfg).map_err(|e| fail(EXIT_CONFIG)(e.into()))?;
    write_experiment(&report, &cfg.output_dir)
        .with_context(|| format!("writing artifacts to {}", cfg.output_dir.display()))
        .map_err(fail(EXIT_SOLVER))?;
    for s in &report.summary {
        println!(
            "{:<24} median rel. error = {}  failures = {}",
            s.misfit,
            s.median_rel_error.map_or("n/a".into(), |v| format!("{v:.4}")),
            s.failures
        );
    }
    println!("{} seeds in {:.1} s", report.seeds.len(), report.elapsed_secs);
    if report.summary.iter().any(|s| s.failures > 0) {
        return Err(fail(EXIT_SOLVER)(anyhow!("some solves failed; see summary.json")));
    }
    Ok(())
}

fn verify(args: ConfigArgs) -> Outcome {
    let cfg = args.resolve()?;
    let report = verify_all(&cfg);
    let path = cfg.output_dir.join("verification.json");
    write_json(&path, &report).map_err(fail(EXIT_SOLVER))?;
    for e in report.failures() {
        println!(
            "FAIL {:<18} {}  oracle = {:e}  library = {:e}  {}",
            e.check,
            e.report.quantity,
            e.report.oracle,
            e.report.library,
            e.note.as_deref().unwrap_or("")
        );
    }
    println!(
        "{} of {} checks passed; report in {}",
        report.entries.iter().filter(|e| e.passed).count(),
        report.entries.len(),
        path.display()
    );
    if report.passed {
        Ok(())
    } else {
        Err(fail(EXIT_VERIFY)(anyhow!("verification failed")))
    }
}
