//! Four-deck gambling-task payoff generator.
//!
//! Decks A and B pay high per-pick gains but lose over a whole block; C and
//! D pay half as much and win over a block. A and C lose on 50% of picks,
//! B and D on 10%. Amounts are configurable; the shipped default is the
//! classic schedule (A/B gain 100, C/D gain 50; A: five -250 per block,
//! B: one -1250, C: five -50, D: one -250, block length 10).

use super::{EnvError, Task};
use crate::types::{TrialRecord, IGT_ACTIONS};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A scheduled loss within a deck's block: position in `0..block_length`
/// and a non-positive amount. Positions only matter in deterministic mode;
/// shuffle mode re-permutes them each block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEvent {
    pub position: usize,
    pub amount: f64,
}

/// One deck's payoff structure: a fixed gain per pick plus scheduled losses
/// within each block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeckSchedule {
    pub gain_per_pick: f64,
    pub loss_events: Vec<LossEvent>,
}

impl DeckSchedule {
    fn new(gain: f64, positions: &[usize], amount: f64) -> Self {
        Self {
            gain_per_pick: gain,
            loss_events: positions
                .iter()
                .map(|&position| LossEvent { position, amount })
                .collect(),
        }
    }

    fn block_net(&self, block_length: usize) -> f64 {
        block_length as f64 * self.gain_per_pick
            + self.loss_events.iter().map(|e| e.amount).sum::<f64>()
    }
}

/// How losses land within a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossPlacement {
    /// Losses at the schedule's canonical positions; fully reproducible
    /// without randomness.
    Deterministic,
    /// Loss positions permuted once per block per deck.
    #[default]
    Shuffle,
}

/// Full task schedule: one [`DeckSchedule`] per deck plus the block length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgtPayoffSchedule {
    pub decks: Vec<DeckSchedule>,
    pub block_length: usize,
}

impl Default for IgtPayoffSchedule {
    fn default() -> Self {
        Self {
            decks: vec![
                DeckSchedule::new(100.0, &[1, 3, 5, 7, 9], -250.0),
                DeckSchedule::new(100.0, &[9], -1250.0),
                DeckSchedule::new(50.0, &[1, 3, 5, 7, 9], -50.0),
                DeckSchedule::new(50.0, &[9], -250.0),
            ],
            block_length: 10,
        }
    }
}

impl IgtPayoffSchedule {
    /// Enforces the task's structural contract: four decks, in-range unique
    /// loss positions, non-positive loss amounts, 50% loss frequency on
    /// A/C and 10% on B/D, and block nets negative on A/B, positive on C/D.
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.decks.len() != IGT_ACTIONS {
            return Err(EnvError::BadSchedule(format!(
                "expected {} decks, found {}",
                IGT_ACTIONS,
                self.decks.len()
            )));
        }
        if self.block_length == 0 {
            return Err(EnvError::BadSchedule("block_length must be positive".into()));
        }
        for (deck, sched) in self.decks.iter().enumerate() {
            let label = crate::types::deck_label(deck);
            let mut seen = vec![false; self.block_length];
            for event in &sched.loss_events {
                if event.position >= self.block_length {
                    return Err(EnvError::BadSchedule(format!(
                        "deck {label}: loss position {} outside block of {}",
                        event.position, self.block_length
                    )));
                }
                if std::mem::replace(&mut seen[event.position], true) {
                    return Err(EnvError::BadSchedule(format!(
                        "deck {label}: duplicate loss position {}",
                        event.position
                    )));
                }
                if event.amount > 0.0 {
                    return Err(EnvError::BadSchedule(format!(
                        "deck {label}: loss amount {} is positive",
                        event.amount
                    )));
                }
            }
            let expected_losses = if deck == 0 || deck == 2 {
                self.block_length.div_ceil(2)
            } else {
                self.block_length.div_ceil(10)
            };
            if sched.loss_events.len() != expected_losses {
                return Err(EnvError::BadSchedule(format!(
                    "deck {label}: {} loss events per block, expected {expected_losses}",
                    sched.loss_events.len()
                )));
            }
            let net = sched.block_net(self.block_length);
            let advantageous = deck >= 2;
            if advantageous && net <= 0.0 {
                return Err(EnvError::BadSchedule(format!(
                    "deck {label}: block net {net} must be positive"
                )));
            }
            if !advantageous && net >= 0.0 {
                return Err(EnvError::BadSchedule(format!(
                    "deck {label}: block net {net} must be negative"
                )));
            }
        }
        Ok(())
    }

    /// Loss amount (or 0) at a canonical block position in deterministic mode.
    pub fn loss_at(&self, deck: usize, position: usize) -> Result<f64, EnvError> {
        let sched = self.decks.get(deck).ok_or(EnvError::InvalidDeck(deck))?;
        let position = position % self.block_length;
        Ok(sched
            .loss_events
            .iter()
            .find(|e| e.position == position)
            .map_or(0.0, |e| e.amount))
    }
}

/// Per-deck loss frequency and expected net over one whole block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeckBlockStats {
    pub loss_frequency: f64,
    pub expected_net_per_block: f64,
}

/// Loss frequency and expected block net for every deck.
pub fn igt_block_statistics(schedule: &IgtPayoffSchedule) -> Vec<DeckBlockStats> {
    schedule
        .decks
        .iter()
        .map(|deck| DeckBlockStats {
            loss_frequency: deck.loss_events.len() as f64 / schedule.block_length as f64,
            expected_net_per_block: deck.block_net(schedule.block_length),
        })
        .collect()
}

/// Stateful per-agent deck environment. Tracks each deck's draw count and,
/// in shuffle mode, re-permutes loss positions at every block boundary.
#[derive(Debug, Clone)]
pub struct IgtEnvironment {
    schedule: IgtPayoffSchedule,
    placement: LossPlacement,
    draw_counts: Vec<usize>,
    current_block: Vec<Vec<f64>>,
}

impl IgtEnvironment {
    pub fn new(schedule: IgtPayoffSchedule, placement: LossPlacement) -> Result<Self, EnvError> {
        schedule.validate()?;
        let decks = schedule.decks.len();
        Ok(Self {
            schedule,
            placement,
            draw_counts: vec![0; decks],
            current_block: vec![Vec::new(); decks],
        })
    }

    pub fn with_defaults() -> Self {
        Self::new(IgtPayoffSchedule::default(), LossPlacement::default())
            .expect("default schedule is valid")
    }

    pub fn schedule(&self) -> &IgtPayoffSchedule {
        &self.schedule
    }

    /// Total draws taken from a deck so far.
    pub fn draw_count(&self, deck: usize) -> usize {
        self.draw_counts[deck]
    }

    fn block_layout(&self, deck: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut losses = vec![0.0; self.schedule.block_length];
        for event in &self.schedule.decks[deck].loss_events {
            losses[event.position] = event.amount;
        }
        if self.placement == LossPlacement::Shuffle {
            losses.shuffle(rng);
        }
        losses
    }

    /// Draws the next card from `deck`: fixed gain, loss from the deck's
    /// block layout at the current within-block position.
    pub fn draw(&mut self, deck: usize, rng: &mut ChaCha8Rng) -> Result<TrialRecord, EnvError> {
        if deck >= self.schedule.decks.len() {
            return Err(EnvError::InvalidDeck(deck));
        }
        let position = self.draw_counts[deck] % self.schedule.block_length;
        if position == 0 {
            self.current_block[deck] = self.block_layout(deck, rng);
        }
        let loss = self.current_block[deck][position];
        self.draw_counts[deck] += 1;
        Ok(TrialRecord::new(
            deck,
            self.schedule.decks[deck].gain_per_pick,
            loss,
        ))
    }
}

impl Task for IgtEnvironment {
    type Stimulus = ();

    fn action_count(&self) -> usize {
        self.schedule.decks.len()
    }

    fn stimulus(&mut self, _rng: &mut ChaCha8Rng) -> Self::Stimulus {}

    fn outcome(
        &mut self,
        _stimulus: &Self::Stimulus,
        action: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<TrialRecord, EnvError> {
        self.draw(action, rng)
    }
}
