//! Hybrid decision-agent toolkit.
//!
//! An agent's per-trial utility is the convex blend of two drives: an
//! interpretable reinforcement-learning engine that learns from outcomes
//! (`engines`), and a static external utility prior distilled from recorded
//! choice policies (`prior`). The `fusion` module combines the two and runs
//! the simulation loop; `inference` fits engine parameters to observed
//! choice data by MCMC and checks identifiability by parameter recovery;
//! `netsim` scales single agents up to networked communities under
//! intervention strategies; `analysis` holds the evaluation metrics and
//! experiment drivers; `dataset`, `config`, and `output` cover ingestion,
//! run configuration, and plot-ready result files.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod engines;
pub mod env;
pub mod fusion;
pub mod inference;
pub mod netsim;
pub mod output;
pub mod prior;
pub mod types;

pub use types::{
    AgentState, OrlParameters, ParameterViolation, PriorVector, TrialRecord, UtilityVector,
};
