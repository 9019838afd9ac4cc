//! Stochastic task environments, each a single-state MDP: the four-deck
//! gambling task and the intertemporal-choice generator.

mod delay;
mod igt;

pub use delay::{dd_generate_trials, DdGridConfig, DelayChoice, DelayEnvironment};
pub use igt::{
    igt_block_statistics, DeckBlockStats, DeckSchedule, IgtEnvironment, IgtPayoffSchedule,
    LossEvent, LossPlacement,
};

use crate::types::TrialRecord;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("deck index {0} out of range 0..4")]
    InvalidDeck(usize),
    #[error("action index {0} out of range for {1}-action task")]
    InvalidAction(usize, usize),
    #[error("degenerate grid: delayed amount {delayed} <= immediate amount {immediate}")]
    DegenerateGrid { immediate: f64, delayed: f64 },
    #[error("empty {0} grid")]
    EmptyGrid(&'static str),
    #[error("grid amounts and delays must be positive")]
    NonPositiveGrid,
    #[error("payoff schedule invalid: {0}")]
    BadSchedule(String),
}

/// A task environment an agent interacts with, one instance per agent.
///
/// Each trial presents a stimulus (trivial for the gambling task, the
/// offered choice pair for intertemporal choice), then resolves the chosen
/// action into a [`TrialRecord`]. Randomness comes only from the injected
/// seeded stream, so paired-seed comparisons stay aligned.
pub trait Task {
    type Stimulus;

    fn action_count(&self) -> usize;

    /// The stimulus shown on the next trial.
    fn stimulus(&mut self, rng: &mut ChaCha8Rng) -> Self::Stimulus;

    /// Resolves the chosen action into an outcome.
    fn outcome(
        &mut self,
        stimulus: &Self::Stimulus,
        action: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<TrialRecord, EnvError>;
}
