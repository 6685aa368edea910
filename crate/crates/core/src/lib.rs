//! Inverse sampling intensity weighting (ISIW) for geostatistical inference
//! and prediction under preferential sampling.
//!
//! The crate simulates Matérn Gaussian fields and preferentially sampled
//! point patterns, estimates sampling intensities with kernel smoothers,
//! fits exact, pairwise-marginal and Vecchia likelihoods with winsorized
//! inverse-intensity weights, and predicts by plug-in kriging. The
//! [`experiment`] module ties these together into a reproducible
//! simulation harness.

pub mod bessel;
pub mod error;
pub mod linalg;
pub mod model;

pub use error::{Error, Result};
pub use model::{
    build_cov_matrix, matern_cov, microergodic, CovParams, Dataset, Domain, Location, MaternKernel,
    ModelParams,
};
pub mod field;
pub mod rng;

pub use field::{observe, simulate_field, FieldRealization, FieldSimulator, GridSpec};
pub use rng::SeedStream;
pub mod point_process;

pub use point_process::{
    compute_intensity, sample_conditioned, sample_points, sample_thomas, CellIntensity, SamplerKind,
    SamplerSpec,
};
pub mod intensity;

pub use intensity::{
    estimate_intensity, select_bandwidth, weights_from_intensity, BandwidthMethod, BandwidthSpec, Evaluation,
    IntensityEstimate, WeightVector,
};
pub mod likelihood;

pub use likelihood::{
    exact_nll, gaussian_kl, maxmin_order, nn_conditioning_sets, pairwise_marginal_nll, vecchia_implied_cov,
    vecchia_nll, Objective, ObjectiveKind, VecchiaPlan,
};
pub mod inference;

pub use inference::{default_init, fit, FitConfig, FitResult};
pub mod kriging;

pub use kriging::{krige, KrigingOutput};
pub mod experiment;

pub use experiment::{run_experiment, run_replicate, Experiment, ExperimentConfig, MetricsRow};
