//! Outcome-representation learner.
//!
//! Tracks three per-deck quantities: expected value (delta rule on the net
//! outcome), expected win/loss frequency (delta rule on the outcome's
//! sign), and a perseveration weight (decay everything, then pin the chosen
//! deck at 1). Gains and losses learn at separate rates. Decision utility
//! is the linear read-out `ev + beta_f * ef + beta_p * ps`.
//!
//! Only the chosen deck's value and frequency entries move; there are no
//! counterfactual updates for unchosen decks.

use super::RlEngine;
use crate::types::{AgentState, OrlParameters, TrialRecord, UtilityVector, IGT_ACTIONS};

/// Delta-rule step toward `target` at the gain rate for non-negative
/// outcomes, else the loss rate.
fn asymmetric_step(current: f64, target: f64, net: f64, p: &OrlParameters) -> f64 {
    let rate = if net >= 0.0 { p.a_rew } else { p.a_pun };
    current + rate * (target - current)
}

/// Expected-value update for the chosen deck; other decks unchanged.
/// Does not advance `trial_index`.
pub fn orl_update_ev(
    state: &AgentState,
    action: usize,
    net: f64,
    p: &OrlParameters,
) -> AgentState {
    let mut next = state.clone();
    next.ev[action] = asymmetric_step(state.ev[action], net, net, p);
    next
}

/// Expected-frequency update for the chosen deck: the target is the sign
/// of the net outcome (1, 0, or -1). Other decks unchanged.
pub fn orl_update_ef(
    state: &AgentState,
    action: usize,
    net: f64,
    p: &OrlParameters,
) -> AgentState {
    let target = if net > 0.0 {
        1.0
    } else if net < 0.0 {
        -1.0
    } else {
        0.0
    };
    let mut next = state.clone();
    next.ef[action] = asymmetric_step(state.ef[action], target, net, p);
    next
}

/// Perseveration update: every deck's weight decays by `1 / (1 + k)`,
/// then the chosen deck is reset to exactly 1.
pub fn orl_update_ps(state: &AgentState, action: usize, p: &OrlParameters) -> AgentState {
    let decay = 1.0 / (1.0 + p.k);
    let mut next = state.clone();
    for w in &mut next.ps {
        *w *= decay;
    }
    next.ps[action] = 1.0;
    next
}

/// Linear utility read-out: `ev + beta_f * ef + beta_p * ps` per deck.
pub fn orl_get_utility(state: &AgentState, p: &OrlParameters) -> UtilityVector {
    let values = (0..state.action_count())
        .map(|a| state.ev[a] + p.beta_f * state.ef[a] + p.beta_p * state.ps[a])
        .collect();
    UtilityVector::new(values)
}

/// Conventional rescaling of raw payoffs into model units (payoffs are in
/// points of ~100s; learned values then stay commensurate with the
/// unit-scale frequency, perseveration, and prior terms).
pub const DEFAULT_OUTCOME_SCALE: f64 = 0.01;

/// The outcome-representation engine over four decks.
#[derive(Debug, Clone)]
pub struct OrlEngine {
    params: OrlParameters,
    outcome_scale: f64,
}

impl OrlEngine {
    pub fn new(params: OrlParameters) -> Self {
        Self {
            params,
            outcome_scale: DEFAULT_OUTCOME_SCALE,
        }
    }

    pub fn with_outcome_scale(params: OrlParameters, outcome_scale: f64) -> Self {
        Self {
            params,
            outcome_scale,
        }
    }

    pub fn params(&self) -> &OrlParameters {
        &self.params
    }

    pub fn outcome_scale(&self) -> f64 {
        self.outcome_scale
    }
}

impl RlEngine for OrlEngine {
    type State = AgentState;
    type Stimulus = ();

    fn id(&self) -> &'static str {
        "orl"
    }

    fn action_count(&self) -> usize {
        IGT_ACTIONS
    }

    fn init_state(&self) -> AgentState {
        AgentState::new(IGT_ACTIONS)
    }

    fn utility(&self, state: &AgentState, _stimulus: &()) -> UtilityVector {
        orl_get_utility(state, &self.params)
    }

    fn update(
        &self,
        state: &AgentState,
        _stimulus: &(),
        action: usize,
        outcome: &TrialRecord,
    ) -> AgentState {
        let net = outcome.net * self.outcome_scale;
        let mut next = orl_update_ev(state, action, net, &self.params);
        next = orl_update_ef(&next, action, net, &self.params);
        next = orl_update_ps(&next, action, &self.params);
        next.trial_index = state.trial_index + 1;
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(a_rew: f64, a_pun: f64, k: f64, beta_f: f64, beta_p: f64) -> OrlParameters {
        OrlParameters {
            a_rew,
            a_pun,
            k,
            beta_f,
            beta_p,
            theta: 1.0,
            omega: 0.0,
        }
    }

    #[test]
    fn ev_step_from_zero() {
        let p = params(0.5, 0.2, 1.0, 0.0, 0.0);
        let state = AgentState::new(4);
        let next = orl_update_ev(&state, 0, 100.0, &p);
        assert_eq!(next.ev, vec![50.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn ev_punishment_step() {
        let p = params(0.5, 0.2, 1.0, 0.0, 0.0);
        let mut state = AgentState::new(4);
        state.ev[1] = 50.0;
        let next = orl_update_ev(&state, 1, -250.0, &p);
        // 50 + 0.2 * (-250 - 50) = -10
        assert!((next.ev[1] - (-10.0)).abs() < 1e-12);
    }

    #[test]
    fn ev_fixed_point_at_zero_prediction_error() {
        let p = params(0.7, 0.3, 1.0, 0.0, 0.0);
        let mut state = AgentState::new(4);
        state.ev[2] = 42.0;
        let next = orl_update_ev(&state, 2, 42.0, &p);
        assert_eq!(next.ev[2], 42.0);
    }

    #[test]
    fn ef_step_and_zero_outcome() {
        let p = params(0.3, 0.2, 1.0, 0.0, 0.0);
        let state = AgentState::new(4);
        let next = orl_update_ef(&state, 0, 100.0, &p);
        assert!((next.ef[0] - 0.3).abs() < 1e-15);
        let still = orl_update_ef(&state, 0, 0.0, &p);
        assert_eq!(still.ef[0], 0.0);
    }

    #[test]
    fn ef_saturates_at_one() {
        let p = params(0.4, 0.2, 1.0, 0.0, 0.0);
        let mut state = AgentState::new(4);
        state.ef[0] = 1.0;
        for _ in 0..5 {
            state = orl_update_ef(&state, 0, 10.0, &p);
        }
        assert_eq!(state.ef[0], 1.0);
    }

    #[test]
    fn ps_decay_then_reset_order() {
        let p = params(0.5, 0.5, 1.0, 0.0, 0.0);
        let state = AgentState::new(4);
        let after_first = orl_update_ps(&state, 0, &p);
        assert_eq!(after_first.ps, vec![1.0, 0.0, 0.0, 0.0]);
        // Decay-then-reset: prior weight halves before deck 1 is pinned.
        let after_second = orl_update_ps(&after_first, 1, &p);
        assert_eq!(after_second.ps, vec![0.5, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn ps_zero_decay_keeps_alternating_decks_at_one() {
        let p = params(0.5, 0.5, 0.0, 0.0, 0.0);
        let mut state = AgentState::new(4);
        for trial in 0..6 {
            state = orl_update_ps(&state, trial % 2, &p);
        }
        assert_eq!(state.ps[0], 1.0);
        assert_eq!(state.ps[1], 1.0);
    }

    #[test]
    fn utility_readout() {
        let p = params(0.5, 0.5, 1.0, 2.0, 3.0);
        let mut state = AgentState::new(4);
        state.ev[0] = 10.0;
        state.ef[0] = 1.0;
        state.ps[0] = 1.0;
        let u = orl_get_utility(&state, &p);
        assert_eq!(u.values, vec![15.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn utility_is_zero_at_origin_and_reduces_to_ev() {
        let p = params(0.5, 0.5, 1.0, 0.0, 0.0);
        let zero = orl_get_utility(&AgentState::new(4), &p);
        assert_eq!(zero.values, vec![0.0; 4]);
        let mut state = AgentState::new(4);
        state.ev = vec![1.0, -2.0, 3.0, 0.5];
        state.ef = vec![0.4, 0.4, 0.4, 0.4];
        state.ps = vec![0.1, 0.3, 0.0, 1.0];
        assert_eq!(orl_get_utility(&state, &p).values, state.ev);
    }

    #[test]
    fn engine_update_composes_and_advances_trial_index() {
        let p = params(0.5, 0.2, 1.0, 1.0, 1.0);
        let engine = OrlEngine::with_outcome_scale(p, 1.0);
        let state = engine.init_state();
        let outcome = TrialRecord::new(0, 100.0, 0.0);
        let next = engine.update(&state, &(), 0, &outcome);
        assert_eq!(next.ev[0], 50.0);
        assert_eq!(next.ef[0], 0.5);
        assert_eq!(next.ps[0], 1.0);
        assert_eq!(next.trial_index, 1);
        // Input state untouched.
        assert_eq!(state.ev, vec![0.0; 4]);
    }

    #[test]
    fn engine_scales_outcomes_into_model_units() {
        let p = params(0.5, 0.2, 1.0, 0.0, 0.0);
        let engine = OrlEngine::new(p);
        let next = engine.update(&engine.init_state(), &(), 0, &TrialRecord::new(0, 100.0, 0.0));
        assert!((next.ev[0] - 0.5).abs() < 1e-15);
    }

    proptest! {
        // Update locality: only the chosen deck's ev/ef entries move.
        #[test]
        fn updates_touch_only_the_chosen_deck(
            seq in proptest::collection::vec((0usize..4, -1300.0f64..150.0), 1..40),
            a_rew in 0.0f64..=1.0,
            a_pun in 0.0f64..=1.0,
            k in 0.0f64..=5.0,
        ) {
            let p = params(a_rew, a_pun, k, 0.5, 0.5);
            let mut state = AgentState::new(4);
            for (action, net) in seq {
                let next_ev = orl_update_ev(&state, action, net, &p);
                let next_ef = orl_update_ef(&next_ev, action, net, &p);
                for deck in 0..4 {
                    if deck != action {
                        prop_assert_eq!(next_ev.ev[deck], state.ev[deck]);
                        prop_assert_eq!(next_ef.ef[deck], state.ef[deck]);
                    }
                }
                state = orl_update_ps(&next_ef, action, &p);
                // Reset lands exactly at 1; decay keeps everything in [0, 1].
                prop_assert_eq!(state.ps[action], 1.0);
                for &w in &state.ps {
                    prop_assert!((0.0..=1.0).contains(&w));
                }
                for &f in &state.ef {
                    prop_assert!((-1.0..=1.0).contains(&f));
                }
            }
        }

        // Purity: repeated read-outs of the same state are identical.
        #[test]
        fn utility_is_pure(
            ev in proptest::collection::vec(-20.0f64..20.0, 4),
            beta_f in -5.0f64..5.0,
            beta_p in -5.0f64..5.0,
        ) {
            let p = params(0.5, 0.5, 1.0, beta_f, beta_p);
            let mut state = AgentState::new(4);
            state.ev = ev;
            let a = orl_get_utility(&state, &p);
            let b = orl_get_utility(&state, &p);
            prop_assert_eq!(a.values, b.values);
        }
    }
}
