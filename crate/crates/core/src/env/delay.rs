//! Intertemporal-choice trial generator: smaller-sooner vs larger-later
//! offers built from amount/delay grids.

use super::{EnvError, Task};
use crate::types::TrialRecord;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Action indices for the two-option intertemporal task.
pub const IMMEDIATE: usize = 0;
pub const DELAYED: usize = 1;

/// One offered choice: an immediate amount against a larger amount after a
/// delay in days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayChoice {
    pub immediate_amount: f64,
    pub delayed_amount: f64,
    pub delay_days: f64,
}

/// Amount/delay grids whose cartesian product forms the trial list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdGridConfig {
    pub immediate_amounts: Vec<f64>,
    pub delayed_amounts: Vec<f64>,
    pub delays_days: Vec<f64>,
}

/// Cartesian product of the three grids, order shuffled by `rng`.
///
/// The grids must be non-empty and positive, and every delayed amount must
/// exceed every immediate amount so each generated choice is a genuine
/// smaller-sooner/larger-later conflict.
pub fn dd_generate_trials(
    config: &DdGridConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DelayChoice>, EnvError> {
    if config.immediate_amounts.is_empty() {
        return Err(EnvError::EmptyGrid("immediate_amounts"));
    }
    if config.delayed_amounts.is_empty() {
        return Err(EnvError::EmptyGrid("delayed_amounts"));
    }
    if config.delays_days.is_empty() {
        return Err(EnvError::EmptyGrid("delays_days"));
    }
    let positive = |values: &[f64]| values.iter().all(|v| *v > 0.0);
    if !positive(&config.immediate_amounts)
        || !positive(&config.delayed_amounts)
        || !positive(&config.delays_days)
    {
        return Err(EnvError::NonPositiveGrid);
    }
    let mut trials = Vec::with_capacity(
        config.immediate_amounts.len() * config.delayed_amounts.len() * config.delays_days.len(),
    );
    for &immediate_amount in &config.immediate_amounts {
        for &delayed_amount in &config.delayed_amounts {
            if delayed_amount <= immediate_amount {
                return Err(EnvError::DegenerateGrid {
                    immediate: immediate_amount,
                    delayed: delayed_amount,
                });
            }
            for &delay_days in &config.delays_days {
                trials.push(DelayChoice {
                    immediate_amount,
                    delayed_amount,
                    delay_days,
                });
            }
        }
    }
    trials.shuffle(rng);
    Ok(trials)
}

/// Per-agent intertemporal-choice environment cycling through a fixed
/// trial list. The outcome records the nominal amount of whichever option
/// was taken; there is nothing to learn from it.
#[derive(Debug, Clone)]
pub struct DelayEnvironment {
    trials: Vec<DelayChoice>,
    next: usize,
}

impl DelayEnvironment {
    pub fn new(trials: Vec<DelayChoice>) -> Result<Self, EnvError> {
        if trials.is_empty() {
            return Err(EnvError::EmptyGrid("trials"));
        }
        Ok(Self { trials, next: 0 })
    }

    pub fn from_grid(config: &DdGridConfig, rng: &mut ChaCha8Rng) -> Result<Self, EnvError> {
        Self::new(dd_generate_trials(config, rng)?)
    }

    pub fn trials(&self) -> &[DelayChoice] {
        &self.trials
    }
}

impl Task for DelayEnvironment {
    type Stimulus = DelayChoice;

    fn action_count(&self) -> usize {
        2
    }

    fn stimulus(&mut self, _rng: &mut ChaCha8Rng) -> Self::Stimulus {
        let choice = self.trials[self.next % self.trials.len()];
        self.next += 1;
        choice
    }

    fn outcome(
        &mut self,
        stimulus: &Self::Stimulus,
        action: usize,
        _rng: &mut ChaCha8Rng,
    ) -> Result<TrialRecord, EnvError> {
        let amount = match action {
            IMMEDIATE => stimulus.immediate_amount,
            DELAYED => stimulus.delayed_amount,
            other => return Err(EnvError::InvalidAction(other, 2)),
        };
        Ok(TrialRecord::new(action, amount, 0.0))
    }
}
