//! Rank-correlation constrained elastic net (CENet) for sparse slope
//! estimation in linear transformation models `h(y) = xᵀβ + ε` with an
//! unknown increasing `h`.
//!
//! The usual pipeline is [`Dataset`] → [`rank_cross_cov`] → [`cenet_fit`]
//! or [`cenet_path`].

pub mod baseline;
pub mod error;
pub mod evaluate;
pub mod linalg;
pub mod rank;
pub mod simulate;
pub mod solver;
pub mod stability;

pub use baseline::{lasso_fit, lasso_lambda_max, lasso_path, LassoFit};
pub use error::{Error, Result};
pub use evaluate::{
    average_roc, error_vs_nnz, est_error, roc_from_path, tpr_fpr, AveragedRoc, Coefficients, ErrorCurve, ErrorPoint,
    PathFit, RocPoint,
};
pub use linalg::SymMatrix;
pub use rank::{rank_cross_cov, Dataset, RankMoments};
pub use simulate::{generate_dataset, NoiseFamily, Scenario, SimSpec, TrueModel};
pub use solver::{alpha_max, cenet_fit, cenet_path, kkt_residual, CenetConfig, CenetFit};
pub use stability::{stability_paths, StabilityPaths, StabilitySpec};
