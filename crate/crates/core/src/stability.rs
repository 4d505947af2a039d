//! Bootstrap stability selection: per-variable selection frequencies along
//! an α₁ grid.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, invalid_input, Result};
use crate::rank::{rank_cross_cov, screen_top_k, Dataset};
use crate::simulate::replicate_seed;
use crate::solver::{cenet_path, check_descending_grid, CenetConfig};

pub const DEFAULT_GRID_LEN: usize = 30;
pub const DEFAULT_GRID_HIGH: f64 = 1e-2;
pub const DEFAULT_GRID_LOW: f64 = 1e-6;

/// Log-spaced descending grid from `high` to `low` inclusive.
pub fn log_grid(high: f64, low: f64, len: usize) -> Result<Vec<f64>> {
    if !(high > low && low > 0.0) || !high.is_finite() || len < 2 {
        return Err(invalid_input("log grid needs high > low > 0 and at least two points"));
    }
    let (a, b) = (high.log10(), low.log10());
    let step = (b - a) / (len - 1) as f64;
    let mut grid: Vec<f64> = (0..len).map(|k| 10f64.powf(a + step * k as f64)).collect();
    grid[0] = high;
    grid[len - 1] = low;
    Ok(grid)
}

/// 30 log-spaced values from 1e-2 down to 1e-6.
pub fn default_alpha1_grid() -> Vec<f64> {
    log_grid(DEFAULT_GRID_HIGH, DEFAULT_GRID_LOW, DEFAULT_GRID_LEN).expect("constant grid is valid")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilitySpec {
    /// Number of bootstrap replicates.
    pub b: usize,
    pub screen_k: usize,
    pub alpha1_grid: Vec<f64>,
    pub alpha2: f64,
    pub seed: u64,
    /// Standardize predictors after each resample.
    pub standardize: bool,
    pub solver: CenetConfig,
}

impl Default for StabilitySpec {
    fn default() -> Self {
        Self {
            b: 1000,
            screen_k: 50,
            alpha1_grid: default_alpha1_grid(),
            alpha2: 1e-8,
            seed: 0,
            standardize: true,
            solver: CenetConfig::default(),
        }
    }
}

impl StabilitySpec {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.b == 0 {
            return Err(invalid_config("b must be at least 1"));
        }
        if self.screen_k == 0 || self.screen_k > p {
            return Err(invalid_config(format!(
                "screen_k must lie in [1, {p}], got {}",
                self.screen_k
            )));
        }
        if !(self.alpha2 > 0.0) {
            return Err(invalid_config(format!("alpha2 must be > 0, got {}", self.alpha2)));
        }
        check_descending_grid(&self.alpha1_grid, "alpha1")?;
        Ok(())
    }
}

/// Selection counts per variable and grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityPaths {
    pub grid: Vec<f64>,
    pub b: usize,
    /// `counts[j][g]`: replicates selecting variable `j` at grid point `g`.
    pub counts: Vec<Vec<u32>>,
    /// Replicates whose resampled response was constant.
    pub degenerate_replicates: usize,
    /// Path fits that hit the iteration cap.
    pub nonconverged_fits: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopVariable {
    pub index: usize,
    pub max_frequency: f64,
}

impl StabilityPaths {
    pub fn p(&self) -> usize {
        self.counts.len()
    }

    pub fn frequency(&self, j: usize, g: usize) -> f64 {
        self.counts[j][g] as f64 / self.b as f64
    }

    pub fn frequencies(&self) -> Vec<Vec<f64>> {
        (0..self.p())
            .map(|j| (0..self.grid.len()).map(|g| self.frequency(j, g)).collect())
            .collect()
    }

    pub fn max_frequency(&self, j: usize) -> f64 {
        self.counts[j].iter().copied().max().unwrap_or(0) as f64 / self.b as f64
    }

    /// The `limit` variables with the highest maximum frequency, ties by index.
    pub fn top_variables(&self, limit: usize) -> Vec<TopVariable> {
        let mut order: Vec<usize> = (0..self.p()).collect();
        order.sort_by_key(|&j| (std::cmp::Reverse(self.counts[j].iter().copied().max().unwrap_or(0)), j));
        order
            .into_iter()
            .take(limit)
            .map(|j| TopVariable {
                index: j,
                max_frequency: self.max_frequency(j),
            })
            .collect()
    }

    /// One row per variable, one column per grid value.
    pub fn to_csv(&self, names: &[String]) -> Result<String> {
        if names.len() != self.p() {
            return Err(invalid_input("variable name count does not match p"));
        }
        let mut s = String::from("variable");
        for a in &self.grid {
            write!(s, ",{a}").unwrap();
        }
        s.push('\n');
        for (j, name) in names.iter().enumerate() {
            s.push_str(name);
            for g in 0..self.grid.len() {
                write!(s, ",{}", self.frequency(j, g)).unwrap();
            }
            s.push('\n');
        }
        Ok(s)
    }
}

struct ReplicateOutcome {
    /// Selected original indices per grid point.
    selected: Vec<Vec<usize>>,
    degenerate: bool,
    nonconverged: usize,
}

fn run_replicate(data: &Dataset, spec: &StabilitySpec, stream_seed: u64) -> Result<ReplicateOutcome> {
    let n = data.n();
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed);
    let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
    let mut sample = data.select_rows(&rows);
    if sample.response_is_constant() {
        return Ok(ReplicateOutcome {
            selected: vec![Vec::new(); spec.alpha1_grid.len()],
            degenerate: true,
            nonconverged: 0,
        });
    }
    if spec.standardize {
        sample = sample.standardized();
    }
    let keep = screen_top_k(&sample, spec.screen_k)?;
    let moments = rank_cross_cov(&sample.select_columns(&keep))?;
    let path = cenet_path(&moments, &spec.alpha1_grid, spec.alpha2, &spec.solver)?;
    let nonconverged = path.iter().filter(|f| !f.converged).count();
    let selected = path
        .iter()
        .map(|fit| {
            fit.beta
                .iter()
                .zip(&keep)
                .filter(|(b, _)| **b != 0.0)
                .map(|(_, &j)| j)
                .collect()
        })
        .collect();
    Ok(ReplicateOutcome {
        selected,
        degenerate: false,
        nonconverged,
    })
}

pub(crate) fn stability_paths_with_streams(
    data: &Dataset,
    spec: &StabilitySpec,
    stream_seed: impl Fn(u64) -> u64 + Sync,
) -> Result<StabilityPaths> {
    spec.validate(data.p())?;
    let outcomes = (0..spec.b as u64)
        .into_par_iter()
        .map(|r| run_replicate(data, spec, stream_seed(r)))
        .collect::<Result<Vec<_>>>()?;

    let mut counts = vec![vec![0u32; spec.alpha1_grid.len()]; data.p()];
    let mut degenerate_replicates = 0;
    let mut nonconverged_fits = 0;
    for outcome in &outcomes {
        degenerate_replicates += usize::from(outcome.degenerate);
        nonconverged_fits += outcome.nonconverged;
        for (g, selected) in outcome.selected.iter().enumerate() {
            for &j in selected {
                counts[j][g] += 1;
            }
        }
    }
    Ok(StabilityPaths {
        grid: spec.alpha1_grid.clone(),
        b: spec.b,
        counts,
        degenerate_replicates,
        nonconverged_fits,
    })
}

/// Runs `spec.b` bootstrap replicates (in parallel on the current rayon
/// pool) and counts how often each variable enters the CENet path.
pub fn stability_paths(data: &Dataset, spec: &StabilitySpec) -> Result<StabilityPaths> {
    let seed = spec.seed;
    stability_paths_with_streams(data, spec, move |r| replicate_seed(seed, r))
}
