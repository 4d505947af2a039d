//! Synthetic data for the transformation model `h(y) = xᵀβ* + ε`.
//!
//! Designs are Gaussian with AR(1) covariance `Σᵢⱼ = ρ^|i-j|`, the slope is
//! `β* = (1, 2, 3, 4, 0, …, 0)`, and the noise scale is calibrated to a
//! target `R² = Var(xᵀβ*) / (Var(xᵀβ*) + σ²)`.
//!
//! Random streams: every dataset draws from a `ChaCha8Rng` seeded with
//! `SimSpec::seed`. Normals come from `rand_distr::StandardNormal`
//! (ziggurat), gammas from `rand_distr::Gamma` (Marsaglia–Tsang) and
//! Cauchy variates from `tan(π(U - ½))`. Replicate `r` of an experiment
//! with base seed `s` uses seed [`replicate_seed`]`(s, r)`, so replicates
//! can be generated in any order or in parallel.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};
use crate::linalg::{cholesky, SymMatrix};
use crate::rank::Dataset;

/// Leading non-zero entries of the true slope.
pub const BETA_STAR_HEAD: [f64; 4] = [1.0, 2.0, 3.0, 4.0];

/// How the observed response relates to the latent linear predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// `y = t`.
    Identity,
    /// `y = t³`, i.e. `h(y) = y^{1/3}`.
    CubeRoot,
}

impl Scenario {
    pub const ALL: [Scenario; 2] = [Scenario::Identity, Scenario::CubeRoot];

    pub fn apply(self, t: f64) -> f64 {
        match self {
            Scenario::Identity => t,
            Scenario::CubeRoot => t * t * t,
        }
    }

    /// The transformation `h` that maps `y` back to the latent scale.
    pub fn inverse(self, y: f64) -> f64 {
        match self {
            Scenario::Identity => y,
            Scenario::CubeRoot => y.cbrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseFamily {
    /// `N(0, σ²)`.
    Normal,
    /// `0.8 N(0, σ²) + 0.2 Cauchy(0, 10σ)`.
    ContaminatedNormal,
    /// `0.5 N(-3, σ²) + 0.5 N(3, σ²)`.
    MixtureNormal,
    /// `σ(z - √3)` with `z ~ Gamma(shape 3, rate √3)`.
    CentralizedGamma,
}

impl NoiseFamily {
    pub const ALL: [NoiseFamily; 4] = [
        NoiseFamily::Normal,
        NoiseFamily::ContaminatedNormal,
        NoiseFamily::MixtureNormal,
        NoiseFamily::CentralizedGamma,
    ];
}

macro_rules! kebab_enum {
    ($ty:ty { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $(Self::$variant => $name),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name | stringify!($variant) => Ok(Self::$variant),)+
                    other => Err(invalid_input(format!(
                        concat!("unknown ", stringify!($ty), " '{}', expected one of: ", $($name, " "),+),
                        other
                    ))),
                }
            }
        }
    };
}

kebab_enum!(Scenario { Identity => "identity", CubeRoot => "cube-root" });
kebab_enum!(NoiseFamily {
    Normal => "normal",
    ContaminatedNormal => "contaminated-normal",
    MixtureNormal => "mixture-normal",
    CentralizedGamma => "centralized-gamma",
});

/// Everything needed to reproduce one synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub r_squared: f64,
    pub scenario: Scenario,
    pub noise: NoiseFamily,
    pub seed: u64,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid_input(format!("n must be >= 2, got {}", self.n)));
        }
        if self.p < BETA_STAR_HEAD.len() {
            return Err(invalid_input(format!("p must be >= 4, got {}", self.p)));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(invalid_input(format!("rho must lie in (-1, 1), got {}", self.rho)));
        }
        if !(self.r_squared > 0.0 && self.r_squared < 1.0) {
            return Err(invalid_input(format!(
                "r_squared must lie in (0, 1), got {}",
                self.r_squared
            )));
        }
        Ok(())
    }

    /// Copy of this spec for replicate `r`.
    pub fn replicate(&self, r: u64) -> Self {
        Self {
            seed: replicate_seed(self.seed, r),
            ..self.clone()
        }
    }
}

/// Population quantities behind a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub beta_star: Vec<f64>,
    /// Noise scale σ (not the variance).
    pub sigma: f64,
    pub sigma_xx: SymMatrix,
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `r` derived from a base seed.
pub fn replicate_seed(seed: u64, r: u64) -> u64 {
    mix64(mix64(seed).wrapping_add(r.wrapping_mul(0x9e37_79b9_7f4a_7c15)) ^ 0x5851_f42d_4c95_7f2d)
}

/// Generator for replicate `r` of base seed `seed`.
pub fn stream_rng(seed: u64, r: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replicate_seed(seed, r))
}

/// `Σᵢⱼ = ρ^|i-j|`.
pub fn ar1_covariance(p: usize, rho: f64) -> Result<SymMatrix> {
    if !(rho.abs() < 1.0) {
        return Err(invalid_input(format!("rho must lie in (-1, 1), got {rho}")));
    }
    if p == 0 {
        return Err(invalid_input("dimension must be positive"));
    }
    Ok(SymMatrix::from_fn(p, |i, j| rho.powi((j - i) as i32)))
}

/// `β* = (1, 2, 3, 4, 0, …, 0)`.
pub fn beta_star(p: usize) -> Vec<f64> {
    let mut b = vec![0.0; p];
    let k = p.min(BETA_STAR_HEAD.len());
    b[..k].copy_from_slice(&BETA_STAR_HEAD[..k]);
    b
}

/// Noise variance giving the requested `R²`: `σ² = β*ᵀΣβ* (1 - R²) / R²`.
pub fn calibrate_sigma(sigma_xx: &SymMatrix, beta_star: &[f64], r_squared: f64) -> Result<f64> {
    if !(r_squared > 0.0 && r_squared < 1.0) {
        return Err(invalid_input(format!("r_squared must lie in (0, 1), got {r_squared}")));
    }
    if beta_star.len() != sigma_xx.dim() {
        return Err(invalid_input("beta_star and sigma_xx dimensions differ"));
    }
    let signal = sigma_xx.quad_form(beta_star);
    if !(signal > 0.0) {
        return Err(invalid_input("signal variance β*ᵀΣβ* must be positive"));
    }
    Ok(signal * (1.0 - r_squared) / r_squared)
}

fn standard_normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn standard_cauchy(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    (PI * (u - 0.5)).tan()
}

/// Draws `n` noise values with scale `sigma`.
pub fn sample_noise(noise: NoiseFamily, sigma: f64, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid_input(format!("noise scale must be positive, got {sigma}")));
    }
    let gamma = Gamma::new(3.0, 1.0 / 3f64.sqrt()).expect("valid gamma parameters");
    let sqrt3 = 3f64.sqrt();
    let draws = (0..n)
        .map(|_| match noise {
            NoiseFamily::Normal => sigma * standard_normal(rng),
            NoiseFamily::ContaminatedNormal => {
                if rng.random::<f64>() < 0.8 {
                    sigma * standard_normal(rng)
                } else {
                    10.0 * sigma * standard_cauchy(rng)
                }
            }
            NoiseFamily::MixtureNormal => {
                let centre = if rng.random::<f64>() < 0.5 { -3.0 } else { 3.0 };
                centre + sigma * standard_normal(rng)
            }
            NoiseFamily::CentralizedGamma => sigma * (gamma.sample(rng) - sqrt3),
        })
        .collect();
    Ok(draws)
}

/// Draws a dataset and returns it with its generating model.
pub fn generate_dataset(spec: &SimSpec) -> Result<(Dataset, TrueModel)> {
    generate(spec, true)
}

/// Like [`generate_dataset`] but with `ε ≡ 0`; the design and the random
/// stream consumed for it are identical.
pub fn generate_noise_free(spec: &SimSpec) -> Result<(Dataset, TrueModel)> {
    generate(spec, false)
}

fn generate(spec: &SimSpec, with_noise: bool) -> Result<(Dataset, TrueModel)> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let sigma_xx = ar1_covariance(p, spec.rho)?;
    let beta = beta_star(p);
    let sigma = calibrate_sigma(&sigma_xx, &beta, spec.r_squared)?.sqrt();
    let chol = cholesky(&sigma_xx)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = Array2::<f64>::zeros((n, p));
    let mut z = vec![0.0; p];
    for mut row in x.rows_mut() {
        for zi in z.iter_mut() {
            *zi = standard_normal(&mut rng);
        }
        for (dst, v) in row.iter_mut().zip(chol.mul_vec(&z)) {
            *dst = v;
        }
    }
    let eps = sample_noise(spec.noise, sigma, n, &mut rng)?;
    let latent = x.dot(&Array1::from(beta.clone()));
    let y: Array1<f64> = latent
        .iter()
        .zip(&eps)
        .map(|(t, e)| spec.scenario.apply(if with_noise { t + e } else { *t }))
        .collect();

    let data = Dataset::new(x, y)?;
    Ok((
        data,
        TrueModel {
            beta_star: beta,
            sigma,
            sigma_xx,
        },
    ))
}
