//! Replicated simulation study comparing CENet with the lasso.

use std::fmt;

use cenet_core::evaluate::{average_roc, default_fpr_grid, error_vs_nnz, roc_from_path};
use cenet_core::simulate::beta_star;
use cenet_core::stability::log_grid;
use cenet_core::{
    alpha_max, cenet_path, generate_dataset, lasso_lambda_max, lasso_path, rank_cross_cov, AveragedRoc, CenetConfig,
    ErrorCurve, NoiseFamily, PathFit, RocPoint, Scenario, SimSpec,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Cenet,
    Lasso,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Cenet => "cenet",
            Method::Lasso => "lasso",
        })
    }
}

/// Tuning grids are ratios of each replicate's own null threshold
/// (`alpha_max` for CENet, `lambda_max` for the lasso), so every replicate
/// shares one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub r_squared: f64,
    pub scenarios: Vec<Scenario>,
    pub noises: Vec<NoiseFamily>,
    pub reps: usize,
    pub seed: u64,
    pub alpha2: f64,
    pub alpha1_ratios: Vec<f64>,
    pub lambda_ratios: Vec<f64>,
    pub solver: CenetConfig,
}

pub fn default_ratio_grid() -> Vec<f64> {
    log_grid(1.0, 1e-3, 40).expect("constant grid is valid")
}

impl BenchConfig {
    /// Default design: n = 200, p = 100, AR(0.3), R² = 0.6.
    pub fn new(reps: usize, seed: u64) -> Self {
        Self {
            n: 200,
            p: 100,
            rho: 0.3,
            r_squared: 0.6,
            scenarios: Scenario::ALL.to_vec(),
            noises: NoiseFamily::ALL.to_vec(),
            reps,
            seed,
            alpha2: 1e-8,
            alpha1_ratios: default_ratio_grid(),
            lambda_ratios: default_ratio_grid(),
            solver: CenetConfig::default(),
        }
    }

    pub fn sim_spec(&self, scenario: Scenario, noise: NoiseFamily) -> SimSpec {
        SimSpec {
            n: self.n,
            p: self.p,
            rho: self.rho,
            r_squared: self.r_squared,
            scenario,
            noise,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(config("reps must be at least 1"));
        }
        if self.scenarios.is_empty() || self.noises.is_empty() {
            return Err(config("need at least one scenario and one noise family"));
        }
        for (name, grid) in [("alpha1", &self.alpha1_ratios), ("lambda", &self.lambda_ratios)] {
            if grid.is_empty() || grid.windows(2).any(|w| !(w[0] > w[1])) || grid.iter().any(|&g| !(g > 0.0)) {
                return Err(config(format!(
                    "{name} ratio grid must be positive and strictly descending"
                )));
            }
        }
        self.solver.with_alphas(0.0, self.alpha2).validate()?;
        self.sim_spec(self.scenarios[0], self.noises[0]).validate()?;
        Ok(())
    }
}

/// Paths of one replicate, indexed by grid ratio.
struct ReplicatePaths {
    cenet: Vec<PathFit>,
    lasso: Vec<PathFit>,
    nonconverged: usize,
}

fn run_replicate(cfg: &BenchConfig, spec: &SimSpec) -> Result<ReplicatePaths> {
    let (data, _) = generate_dataset(spec)?;

    let moments = rank_cross_cov(&data)?;
    let amax = alpha_max(&moments.sigma_xy)?;
    let grid: Vec<f64> = cfg.alpha1_ratios.iter().map(|r| r * amax).collect();
    let fits = cenet_path(&moments, &grid, cfg.alpha2, &cfg.solver)?;
    let nonconverged = fits.iter().filter(|f| !f.converged).count();
    let cenet = fits
        .into_iter()
        .zip(&cfg.alpha1_ratios)
        .map(|(f, &alpha)| PathFit { alpha, beta: f.beta })
        .collect();

    let lmax = lasso_lambda_max(&data);
    let grid: Vec<f64> = cfg.lambda_ratios.iter().map(|r| r * lmax).collect();
    let lasso = lasso_path(&data, &grid)?
        .into_iter()
        .zip(&cfg.lambda_ratios)
        .map(|(f, &alpha)| PathFit { alpha, beta: f.beta })
        .collect();

    Ok(ReplicatePaths {
        cenet,
        lasso,
        nonconverged,
    })
}

/// Aggregated results for one (scenario, noise, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub scenario: Scenario,
    pub noise: NoiseFamily,
    pub method: Method,
    pub min_median_error: f64,
    pub min_mean_error: f64,
    pub auc: f64,
    pub error_curve: ErrorCurve,
    pub roc: AveragedRoc,
}

impl CellResult {
    pub fn stem(&self) -> String {
        format!("{}-{}-{}", self.scenario, self.noise, self.method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResults {
    pub cells: Vec<CellResult>,
    pub nonconverged_fits: usize,
}

impl BenchResults {
    pub fn cell(&self, scenario: Scenario, noise: NoiseFamily, method: Method) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.noise == noise && c.method == method)
    }
}

fn summarize(
    scenario: Scenario,
    noise: NoiseFamily,
    method: Method,
    paths: &[Vec<PathFit>],
    truth: &[f64],
) -> Result<CellResult> {
    let error_curve = error_vs_nnz(paths, truth)?;
    let curves = paths
        .iter()
        .map(|path| roc_from_path(path, truth))
        .collect::<cenet_core::Result<Vec<Vec<RocPoint>>>>()?;
    let roc = average_roc(&curves, &default_fpr_grid())?;
    Ok(CellResult {
        scenario,
        noise,
        method,
        min_median_error: error_curve.min_median_error(),
        min_mean_error: error_curve.min_mean_error(),
        auc: roc.auc,
        error_curve,
        roc,
    })
}

/// Runs every (scenario, noise) cell. Replicates run on the current rayon
/// pool; replicate `r` of every cell uses the same derived seed, so designs
/// are shared across cells.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchResults> {
    cfg.validate()?;
    let truth = beta_star(cfg.p);
    let mut cells = Vec::new();
    let mut nonconverged_fits = 0;
    for &scenario in &cfg.scenarios {
        for &noise in &cfg.noises {
            let spec = cfg.sim_spec(scenario, noise);
            let reps = (0..cfg.reps as u64)
                .into_par_iter()
                .map(|r| run_replicate(cfg, &spec.replicate(r)))
                .collect::<Result<Vec<_>>>()?;
            nonconverged_fits += reps.iter().map(|r| r.nonconverged).sum::<usize>();
            let (cenet, lasso): (Vec<_>, Vec<_>) = reps.into_iter().map(|r| (r.cenet, r.lasso)).unzip();
            cells.push(summarize(scenario, noise, Method::Cenet, &cenet, &truth)?);
            cells.push(summarize(scenario, noise, Method::Lasso, &lasso, &truth)?);
        }
    }
    Ok(BenchResults {
        cells,
        nonconverged_fits,
    })
}
