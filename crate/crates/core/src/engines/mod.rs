//! Internal RL engines behind one pluggable interface.
//!
//! An engine turns its learned state (plus the trial's stimulus, when the
//! task has one) into an action-utility vector, and folds an observed
//! outcome into a new state. Swapping engines requires no change anywhere
//! else: the fusion loop, fitting, and analysis consume utility vectors
//! only.

mod hyperbolic;
mod orl;
pub mod presets;

pub use hyperbolic::{
    hyperbolic_get_utility, HyperbolicEngine, HyperbolicParameters, HyperbolicState,
};
pub use orl::{orl_get_utility, orl_update_ef, orl_update_ev, orl_update_ps, OrlEngine};

use crate::types::{TrialRecord, UtilityVector};

/// Behavior contract for an internal RL engine.
///
/// `utility` is pure: it never mutates state, and identical inputs yield
/// identical vectors. `update` leaves its input untouched and returns the
/// successor state.
pub trait RlEngine {
    type State: Clone + Send;
    type Stimulus;

    /// Engine name as used in run configs.
    fn id(&self) -> &'static str;

    fn action_count(&self) -> usize;

    /// Fresh pre-task state.
    fn init_state(&self) -> Self::State;

    /// Action utilities for the current state and stimulus.
    fn utility(&self, state: &Self::State, stimulus: &Self::Stimulus) -> UtilityVector;

    /// Successor state after observing the chosen action's outcome.
    fn update(
        &self,
        state: &Self::State,
        stimulus: &Self::Stimulus,
        action: usize,
        outcome: &TrialRecord,
    ) -> Self::State;
}
