use std::path::PathBuf;
use std::str::FromStr;

use cenet_core::stability::log_grid;
use cenet_core::{NoiseFamily, Scenario};
use clap::{ArgAction, Args, Parser, Subcommand};

/// A descending tuning grid, written either as a comma list
/// (`0.1,0.05,0.01`) or as `high:low:count` for log spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() == 3 {
            let high: f64 = parts[0]
                .trim()
                .parse()
                .map_err(|_| format!("bad grid start '{}'", parts[0]))?;
            let low: f64 = parts[1]
                .trim()
                .parse()
                .map_err(|_| format!("bad grid end '{}'", parts[1]))?;
            let len: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| format!("bad grid length '{}'", parts[2]))?;
            return log_grid(high, low, len).map(Grid).map_err(|e| e.to_string());
        }
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad grid value '{v}'")))
            .collect::<Result<Vec<_>, _>>()?;
        if values.windows(2).any(|w| !(w[0] > w[1])) {
            return Err("grid must be strictly descending".into());
        }
        Ok(Grid(values))
    }
}

#[derive(Debug, Parser)]
#[command(name = "cenet", version, about = "Rank-correlation constrained elastic net")]
pub struct Cli {
    /// Worker threads for replicate-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit CENet at a single (alpha1, alpha2).
    Fit(FitArgs),
    /// Fit CENet along a descending alpha1 grid.
    Path(PathArgs),
    /// Monte Carlo comparison of CENet and the lasso on simulated data.
    Bench(BenchArgs),
    /// Bootstrap selection frequencies along an alpha1 grid.
    Stability(StabilityArgs),
    /// Error and ROC curves of saved paths against a known truth.
    Eval(EvalArgs),
    /// Draw one synthetic dataset.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    pub response: String,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub alpha2: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// JSON solver settings; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Absolute alpha1 values; defaults to 30 log-spaced points from
    /// alpha_max down to alpha_max / 1000.
    #[arg(long)]
    pub alpha1_grid: Option<Grid>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Population R² of the latent model.
    #[arg(long)]
    pub rsq: Option<f64>,
    /// Required unless given in --config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    #[arg(long)]
    pub scenario: Option<Scenario>,
    #[arg(long)]
    pub noise: Option<NoiseFamily>,
    /// JSON simulation spec; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub design: DesignArgs,
    /// Scenarios to run (repeatable; default: all).
    #[arg(long)]
    pub scenario: Vec<Scenario>,
    /// Noise families to run (repeatable; default: all).
    #[arg(long)]
    pub noise: Vec<NoiseFamily>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// CENet grid as ratios of each replicate's alpha_max.
    #[arg(long)]
    pub alpha1_grid: Option<Grid>,
    /// Lasso grid as ratios of each replicate's lambda_max.
    #[arg(long)]
    pub lambda_grid: Option<Grid>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// JSON bench configuration; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Bootstrap replicates [default: 1000].
    #[arg(long)]
    pub b: Option<usize>,
    /// Predictors kept per replicate by |Kendall tau| [default: min(50, p)].
    #[arg(long)]
    pub screen_k: Option<usize>,
    /// Absolute alpha1 values [default: 1e-2:1e-6:30].
    #[arg(long)]
    pub alpha1_grid: Option<Grid>,
    /// [default: 1e-8]
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Required unless given in --config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Standardize predictors after each resample.
    #[arg(long, action = ArgAction::Set)]
    pub standardize: Option<bool>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// JSON stability spec; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Path reports written by `cenet path` (repeatable, one per replicate).
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Truth file written by `cenet simulate`.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_syntax() {
        assert_eq!("0.5, 0.1,1e-3".parse::<Grid>().unwrap(), Grid(vec![0.5, 0.1, 1e-3]));
        let g = "1e-2:1e-6:30".parse::<Grid>().unwrap();
        assert_eq!(g.0.len(), 30);
        assert!("0.1,0.5".parse::<Grid>().is_err());
        assert!("a,b".parse::<Grid>().is_err());
        assert!("1e-6:1e-2:5".parse::<Grid>().is_err());
    }

    #[test]
    fn parses_enum_flags() {
        let cli = Cli::try_parse_from([
            "cenet",
            "bench",
            "--seed",
            "1",
            "--scenario",
            "cube-root",
            "--noise",
            "contaminated-normal",
            "--out-dir",
            "x",
        ])
        .unwrap();
        let Command::Bench(b) = cli.command else { panic!() };
        assert_eq!(b.scenario, vec![Scenario::CubeRoot]);
        assert_eq!(b.noise, vec![NoiseFamily::ContaminatedNormal]);
    }
}
