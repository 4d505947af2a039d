//! Subcommand implementations. Each returns an [`Outcome`] instead of
//! printing, so the binary and the tests share one code path.

use std::path::{Path, PathBuf};

use cenet_core::evaluate::default_fpr_grid;
use cenet_core::stability::log_grid;
use cenet_core::{
    alpha_max, average_roc, cenet_fit, cenet_path, error_vs_nnz, generate_dataset, rank_cross_cov, roc_from_path,
    stability_paths, CenetConfig, CenetFit, PathFit, SimSpec, StabilitySpec, TrueModel,
};
use serde::{Deserialize, Serialize};

use crate::args::{BenchArgs, Cli, Command, EvalArgs, FitArgs, PathArgs, SimulateArgs, SolverArgs, StabilityArgs};
use crate::error::{config, Result};
use crate::io::{dataset_to_csv, read_dataset, read_json, to_json, write_output};
use crate::montecarlo::{run_bench, BenchConfig, BenchResults};

/// What a command produced.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Outcome {
    /// Printed to standard output when no output directory was given.
    pub stdout: Option<String>,
    pub written: Vec<PathBuf>,
    /// Non-fatal problems such as fits that hit the iteration cap.
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.warnings.is_empty() {
            0
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

impl Metadata {
    fn new(command: &str, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
        }
    }
}

fn nonconverged_warning(count: usize) -> Option<String> {
    (count > 0).then(|| format!("{count} fit(s) stopped at the iteration cap before converging"))
}

/// Emits `(name, contents)` pairs into `out_dir`, or the first one to stdout.
fn deliver(out_dir: Option<&Path>, files: Vec<(String, String)>, warnings: Vec<String>) -> Result<Outcome> {
    let mut outcome = Outcome {
        warnings,
        ..Outcome::default()
    };
    match out_dir {
        Some(dir) => {
            for (name, contents) in &files {
                outcome.written.push(write_output(dir, name, contents)?);
            }
        }
        None => outcome.stdout = files.into_iter().next().map(|(_, c)| c),
    }
    Ok(outcome)
}

fn solver_config(args: &SolverArgs) -> Result<CenetConfig> {
    let mut cfg: CenetConfig = match &args.config {
        Some(path) => read_json(path)?,
        None => CenetConfig::default(),
    };
    if let Some(v) = args.alpha2 {
        cfg.alpha2 = v;
    }
    if let Some(v) = args.eta {
        cfg.eta = v;
    }
    if let Some(v) = args.tol {
        cfg.tol = v;
    }
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub metadata: Metadata,
    pub response: String,
    pub names: Vec<String>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha_max: f64,
    pub beta: Vec<f64>,
    pub nnz: usize,
    pub selected: Vec<String>,
    pub constraint_value: f64,
    pub kkt_residual: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

pub fn cmd_fit(args: &FitArgs) -> Result<Outcome> {
    let mut cfg = solver_config(&args.solver)?;
    if let Some(a) = args.alpha1 {
        cfg.alpha1 = a;
    } else if args.solver.config.is_none() {
        return Err(config("--alpha1 is required"));
    }
    cfg.validate()?;
    let labeled = read_dataset(&args.data.input, &args.data.response)?;
    let moments = rank_cross_cov(&labeled.data)?;
    let fit = cenet_fit(&moments, &cfg)?;
    let warning = nonconverged_warning(usize::from(!fit.converged));
    let report = FitReport {
        metadata: Metadata::new("fit", None),
        response: labeled.response,
        selected: fit
            .beta
            .iter()
            .zip(&labeled.names)
            .filter(|(b, _)| **b != 0.0)
            .map(|(_, n)| n.clone())
            .collect(),
        names: labeled.names,
        alpha1: fit.alpha1,
        alpha2: fit.alpha2,
        alpha_max: alpha_max(&moments.sigma_xy)?,
        nnz: fit.nnz(),
        constraint_value: fit.constraint_value,
        kkt_residual: fit.kkt_residual,
        objective: fit.objective,
        iterations: fit.iterations,
        converged: fit.converged,
        warning: warning.clone(),
        beta: fit.beta,
    };
    deliver(
        args.out_dir.as_deref(),
        vec![("fit.json".into(), to_json(&report))],
        warning.into_iter().collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub alpha1: f64,
    pub beta: Vec<f64>,
    pub nnz: usize,
    pub constraint_value: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&CenetFit> for PathPoint {
    fn from(f: &CenetFit) -> Self {
        Self {
            alpha1: f.alpha1,
            beta: f.beta.clone(),
            nnz: f.nnz(),
            constraint_value: f.constraint_value,
            kkt_residual: f.kkt_residual,
            iterations: f.iterations,
            converged: f.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    pub metadata: Metadata,
    pub response: String,
    pub names: Vec<String>,
    pub alpha2: f64,
    pub alpha_max: f64,
    pub fits: Vec<PathPoint>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

impl PathReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha1,nnz,converged,constraint_value,kkt_residual");
        for name in &self.names {
            s.push(',');
            s.push_str(name);
        }
        s.push('\n');
        for f in &self.fits {
            s.push_str(&format!(
                "{},{},{},{},{}",
                f.alpha1, f.nnz, f.converged, f.constraint_value, f.kkt_residual
            ));
            for b in &f.beta {
                s.push_str(&format!(",{b}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn cmd_path(args: &PathArgs) -> Result<Outcome> {
    let cfg = solver_config(&args.solver)?;
    cfg.validate()?;
    let labeled = read_dataset(&args.data.input, &args.data.response)?;
    let moments = rank_cross_cov(&labeled.data)?;
    let amax = alpha_max(&moments.sigma_xy)?;
    let grid = match &args.alpha1_grid {
        Some(g) => g.0.clone(),
        None if amax > 0.0 => log_grid(amax, amax / 1000.0, 30)?,
        None => return Err(config("alpha_max is zero; pass --alpha1-grid explicitly")),
    };
    let fits = cenet_path(&moments, &grid, cfg.alpha2, &cfg)?;
    let warning = nonconverged_warning(fits.iter().filter(|f| !f.converged).count());
    let report = PathReport {
        metadata: Metadata::new("path", None),
        response: labeled.response,
        names: labeled.names,
        alpha2: cfg.alpha2,
        alpha_max: amax,
        fits: fits.iter().map(PathPoint::from).collect(),
        warning: warning.clone(),
    };
    deliver(
        args.out_dir.as_deref(),
        vec![
            ("path.csv".into(), report.to_csv()),
            ("path.json".into(), to_json(&report)),
        ],
        warning.into_iter().collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub metadata: Metadata,
    pub spec: SimSpec,
    pub truth: TrueModel,
}

fn sim_spec(args: &SimulateArgs) -> Result<SimSpec> {
    let base: Option<SimSpec> = args.config.as_deref().map(read_json).transpose()?;
    let d = &args.design;
    let seed = d
        .seed
        .or(base.as_ref().map(|b| b.seed))
        .ok_or_else(|| config("--seed is required"))?;
    let spec = SimSpec {
        n: d.n.or(base.as_ref().map(|b| b.n)).unwrap_or(200),
        p: d.p.or(base.as_ref().map(|b| b.p)).unwrap_or(100),
        rho: d.rho.or(base.as_ref().map(|b| b.rho)).unwrap_or(0.3),
        r_squared: d.rsq.or(base.as_ref().map(|b| b.r_squared)).unwrap_or(0.6),
        scenario: args
            .scenario
            .or(base.as_ref().map(|b| b.scenario))
            .unwrap_or(cenet_core::Scenario::Identity),
        noise: args
            .noise
            .or(base.as_ref().map(|b| b.noise))
            .unwrap_or(cenet_core::NoiseFamily::Normal),
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let spec = sim_spec(args)?;
    let (data, truth) = generate_dataset(&spec)?;
    let names: Vec<String> = (1..=spec.p).map(|j| format!("x{j}")).collect();
    let report = SimulationReport {
        metadata: Metadata::new("simulate", Some(spec.seed)),
        spec,
        truth,
    };
    deliver(
        args.out_dir.as_deref(),
        vec![
            ("data.csv".into(), dataset_to_csv(&data, &names, "y")),
            ("truth.json".into(), to_json(&report)),
        ],
        Vec::new(),
    )
}

fn bench_config(args: &BenchArgs) -> Result<BenchConfig> {
    let base: Option<BenchConfig> = args.config.as_deref().map(read_json).transpose()?;
    let d = &args.design;
    let seed = d
        .seed
        .or(base.as_ref().map(|b| b.seed))
        .ok_or_else(|| config("--seed is required"))?;
    let mut cfg = base.unwrap_or_else(|| BenchConfig::new(100, seed));
    cfg.seed = seed;
    if let Some(v) = d.n {
        cfg.n = v;
    }
    if let Some(v) = d.p {
        cfg.p = v;
    }
    if let Some(v) = d.rho {
        cfg.rho = v;
    }
    if let Some(v) = d.rsq {
        cfg.r_squared = v;
    }
    if !args.scenario.is_empty() {
        cfg.scenarios = args.scenario.clone();
    }
    if !args.noise.is_empty() {
        cfg.noises = args.noise.clone();
    }
    if let Some(v) = args.reps {
        cfg.reps = v;
    }
    if let Some(v) = args.alpha2 {
        cfg.alpha2 = v;
    }
    if let Some(g) = &args.alpha1_grid {
        cfg.alpha1_ratios = g.0.clone();
    }
    if let Some(g) = &args.lambda_grid {
        cfg.lambda_ratios = g.0.clone();
    }
    if let Some(v) = args.eta {
        cfg.solver.eta = v;
    }
    if let Some(v) = args.tol {
        cfg.solver.tol = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub metadata: Metadata,
    pub config: BenchConfig,
    pub results: BenchResults,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

pub fn cmd_bench(args: &BenchArgs) -> Result<Outcome> {
    let cfg = bench_config(args)?;
    let results = run_bench(&cfg)?;
    let warning = nonconverged_warning(results.nonconverged_fits);
    let mut files = Vec::new();
    for cell in &results.cells {
        files.push((format!("{}-error.csv", cell.stem()), cell.error_curve.to_csv()));
        files.push((format!("{}-roc.csv", cell.stem()), cell.roc.to_csv()));
    }
    let report = BenchReport {
        metadata: Metadata::new("bench", Some(cfg.seed)),
        config: cfg,
        results,
        warning: warning.clone(),
    };
    files.push(("bench.json".into(), to_json(&report)));
    deliver(Some(&args.out_dir), files, warning.into_iter().collect())
}

fn stability_spec(args: &StabilityArgs, p: usize) -> Result<StabilitySpec> {
    let base: Option<StabilitySpec> = args.config.as_deref().map(read_json).transpose()?;
    let seed = args
        .seed
        .or(base.as_ref().map(|b| b.seed))
        .ok_or_else(|| config("--seed is required"))?;
    let mut spec = base.unwrap_or_else(|| StabilitySpec {
        screen_k: p.min(50),
        ..StabilitySpec::default()
    });
    spec.seed = seed;
    if let Some(v) = args.b {
        spec.b = v;
    }
    if let Some(v) = args.screen_k {
        spec.screen_k = v;
    }
    if let Some(g) = &args.alpha1_grid {
        spec.alpha1_grid = g.0.clone();
    }
    if let Some(v) = args.alpha2 {
        spec.alpha2 = v;
    }
    if let Some(v) = args.standardize {
        spec.standardize = v;
    }
    if let Some(v) = args.eta {
        spec.solver.eta = v;
    }
    if let Some(v) = args.tol {
        spec.solver.tol = v;
    }
    spec.validate(p)?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedVariable {
    pub name: String,
    pub index: usize,
    pub max_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub metadata: Metadata,
    pub spec: StabilitySpec,
    pub degenerate_replicates: usize,
    pub nonconverged_fits: usize,
    pub top: Vec<RankedVariable>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

const TOP_VARIABLES: usize = 20;

pub fn cmd_stability(args: &StabilityArgs) -> Result<Outcome> {
    let labeled = read_dataset(&args.data.input, &args.data.response)?;
    let spec = stability_spec(args, labeled.data.p())?;
    let paths = stability_paths(&labeled.data, &spec)?;
    let warnings: Vec<String> = nonconverged_warning(paths.nonconverged_fits).into_iter().collect();
    if paths.degenerate_replicates > 0 {
        eprintln!(
            "note: {} replicate(s) drew a constant response and selected nothing",
            paths.degenerate_replicates
        );
    }
    let top = paths
        .top_variables(TOP_VARIABLES)
        .into_iter()
        .map(|t| RankedVariable {
            name: labeled.names[t.index].clone(),
            index: t.index,
            max_frequency: t.max_frequency,
        })
        .collect();
    let report = StabilityReport {
        metadata: Metadata::new("stability", Some(spec.seed)),
        degenerate_replicates: paths.degenerate_replicates,
        nonconverged_fits: paths.nonconverged_fits,
        spec,
        top,
        warning: warnings.first().cloned(),
    };
    let files = vec![
        ("stability.csv".into(), paths.to_csv(&labeled.names)?),
        ("stability_summary.json".into(), to_json(&report)),
    ];
    deliver(args.out_dir.as_deref(), files, warnings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metadata: Metadata,
    pub replicates: usize,
    pub min_median_error: f64,
    pub min_mean_error: f64,
    pub auc: f64,
    pub error_curve: cenet_core::ErrorCurve,
    pub roc: cenet_core::AveragedRoc,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<Outcome> {
    let truth: SimulationReport = read_json(&args.truth)?;
    let beta_star = &truth.truth.beta_star;
    let paths = args
        .input
        .iter()
        .map(|path| {
            let report: PathReport = read_json(path)?;
            if report.names.len() != beta_star.len() {
                return Err(config(format!(
                    "{} has {} predictors but the truth has {}",
                    path.display(),
                    report.names.len(),
                    beta_star.len()
                )));
            }
            Ok(report
                .fits
                .into_iter()
                .map(|f| PathFit {
                    alpha: f.alpha1,
                    beta: f.beta,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let error_curve = error_vs_nnz(&paths, beta_star)?;
    let curves = paths
        .iter()
        .map(|p| roc_from_path(p, beta_star))
        .collect::<cenet_core::Result<Vec<_>>>()?;
    let roc = average_roc(&curves, &default_fpr_grid())?;
    let report = EvalReport {
        metadata: Metadata::new("eval", None),
        replicates: paths.len(),
        min_median_error: error_curve.min_median_error(),
        min_mean_error: error_curve.min_mean_error(),
        auc: roc.auc,
        error_curve,
        roc,
    };
    let files = vec![
        ("eval.json".into(), to_json(&report)),
        ("error.csv".into(), report.error_curve.to_csv()),
        ("roc.csv".into(), report.roc.to_csv()),
    ];
    deliver(args.out_dir.as_deref(), files, Vec::new())
}

fn dispatch(command: &Command) -> Result<Outcome> {
    match command {
        Command::Fit(a) => cmd_fit(a),
        Command::Path(a) => cmd_path(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

/// Runs a parsed command line on a pool of `--jobs` threads.
pub fn run(cli: &Cli) -> Result<Outcome> {
    match cli.jobs {
        Some(0) => Err(config("--jobs must be at least 1")),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| config(e.to_string()))?
            .install(|| dispatch(&cli.command)),
        None => dispatch(&cli.command),
    }
}
