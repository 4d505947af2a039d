//! Fixtures shared by the benchmarks.

use cenet_core::simulate::generate_dataset;
use cenet_core::{Dataset, NoiseFamily, Scenario, SimSpec};

/// A simulated dataset with the default AR(0.3) design and R² = 0.6.
pub fn fixture(n: usize, p: usize, seed: u64) -> Dataset {
    let spec = SimSpec {
        n,
        p,
        rho: 0.3,
        r_squared: 0.6,
        scenario: Scenario::Identity,
        noise: NoiseFamily::Normal,
        seed,
    };
    generate_dataset(&spec).expect("fixture spec is valid").0
}
