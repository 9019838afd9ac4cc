//! Bayesian parameter estimation and the recovery harness.
//!
//! The likelihood replays a subject's observed choices through the engine's
//! update rules and scores each choice under the fused softmax policy.
//! Sampling is adaptive Metropolis-within-Gibbs in an unconstrained
//! reparameterization, with split-R-hat and effective-sample-size
//! diagnostics. The recovery harness simulates subjects from known
//! parameters, fits each one, and correlates truth with the recovered
//! point estimates.

mod diagnostics;
mod likelihood;
mod recovery;
mod sampler;
mod transforms;

pub use diagnostics::{effective_sample_size, split_r_hat};
pub use likelihood::{log_likelihood, OrlTarget, SubjectData};
pub use recovery::{run_recovery, RecoveryConfig, RecoveryReport, RecoveryRow, TruthRanges};
pub use sampler::{
    point_estimate, sample_posterior, Diagnostics, FitSettings, ParameterPriors, PointEstimate,
    PosteriorSamples,
};
pub use transforms::{constrain, unconstrain, N_FREE_PARAMS};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("subject '{0}' has no trials")]
    EmptySubject(String),
    #[error("subject '{subject}' trial {trial}: action {action} out of range")]
    BadAction {
        subject: String,
        trial: usize,
        action: usize,
    },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("recovery needs at least 2 subjects, got {0}")]
    CohortTooSmall(usize),
    #[error("no posterior draws")]
    NoDraws,
    #[error(transparent)]
    Fusion(#[from] crate::fusion::FusionError),
}
