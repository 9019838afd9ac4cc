//! Hyperbolic discounter for the intertemporal-choice task.
//!
//! The delayed option's value is `A / (1 + k * delay)`; the immediate
//! option keeps its face value. There is no trial-to-trial learning, so
//! the state is trivial; the utility depends only on the offered choice.

use super::RlEngine;
use crate::env::DelayChoice;
use crate::types::{TrialRecord, UtilityVector};
use serde::{Deserialize, Serialize};

/// Parameters of the hyperbolic-discounting engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicParameters {
    /// Per-day discount rate, positive.
    pub k_discount: f64,
    /// Softmax inverse temperature, non-negative.
    pub theta: f64,
    /// External-prior fusion weight, in [0, 1].
    pub omega: f64,
}

impl HyperbolicParameters {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.k_discount > 0.0) {
            return Err(format!("k_discount must be positive, got {}", self.k_discount));
        }
        if !(self.theta >= 0.0) {
            return Err(format!("theta must be non-negative, got {}", self.theta));
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(format!("omega must be in [0, 1], got {}", self.omega));
        }
        Ok(())
    }
}

/// Two-entry utility `[immediate, delayed]` for one offered choice, on the
/// raw amount scale.
pub fn hyperbolic_get_utility(choice: &DelayChoice, p: &HyperbolicParameters) -> UtilityVector {
    UtilityVector::new(vec![
        choice.immediate_amount,
        choice.delayed_amount / (1.0 + p.k_discount * choice.delay_days),
    ])
}

/// Trivial engine state: the discounter carries nothing between trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HyperbolicState;

/// Conventional rescaling of offer amounts (tens of points) into model
/// units commensurate with a unit-scale prior.
pub const DEFAULT_VALUE_SCALE: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct HyperbolicEngine {
    params: HyperbolicParameters,
    value_scale: f64,
}

impl HyperbolicEngine {
    pub fn new(params: HyperbolicParameters) -> Self {
        Self {
            params,
            value_scale: DEFAULT_VALUE_SCALE,
        }
    }

    pub fn with_value_scale(params: HyperbolicParameters, value_scale: f64) -> Self {
        Self {
            params,
            value_scale,
        }
    }

    pub fn params(&self) -> &HyperbolicParameters {
        &self.params
    }
}

impl RlEngine for HyperbolicEngine {
    type State = HyperbolicState;
    type Stimulus = DelayChoice;

    fn id(&self) -> &'static str {
        "hyperbolic"
    }

    fn action_count(&self) -> usize {
        2
    }

    fn init_state(&self) -> HyperbolicState {
        HyperbolicState
    }

    fn utility(&self, _state: &HyperbolicState, stimulus: &DelayChoice) -> UtilityVector {
        let raw = hyperbolic_get_utility(stimulus, &self.params);
        UtilityVector::new(raw.values.iter().map(|v| v * self.value_scale).collect())
    }

    fn update(
        &self,
        _state: &HyperbolicState,
        _stimulus: &DelayChoice,
        _action: usize,
        _outcome: &TrialRecord,
    ) -> HyperbolicState {
        HyperbolicState
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k_discount: f64) -> HyperbolicParameters {
        HyperbolicParameters {
            k_discount,
            theta: 1.0,
            omega: 0.0,
        }
    }

    fn choice(immediate: f64, delayed: f64, delay: f64) -> DelayChoice {
        DelayChoice {
            immediate_amount: immediate,
            delayed_amount: delayed,
            delay_days: delay,
        }
    }

    #[test]
    fn indifference_point() {
        // 20 / (1 + 0.1 * 10) = 10: exactly the immediate amount.
        let u = hyperbolic_get_utility(&choice(10.0, 20.0, 10.0), &params(0.1));
        assert_eq!(u.values, vec![10.0, 10.0]);
    }

    #[test]
    fn vanishing_delay_recovers_face_value() {
        let mut delay = 1.0;
        let mut last = 0.0;
        for _ in 0..12 {
            delay /= 10.0;
            last = hyperbolic_get_utility(&choice(10.0, 20.0, delay), &params(0.1)).values[1];
        }
        assert!((last - 20.0).abs() < 1e-9);
    }

    #[test]
    fn extreme_discounting_kills_the_delayed_option() {
        let u = hyperbolic_get_utility(&choice(10.0, 20.0, 30.0), &params(1e12));
        assert!(u.values[1] < 1e-9);
        assert_eq!(u.argmax(), 0);
    }

    #[test]
    fn steeper_discounting_lowers_delayed_utility() {
        let c = choice(10.0, 30.0, 30.0);
        let mut previous = f64::INFINITY;
        for k in [0.005, 0.01, 0.05, 0.1, 0.5] {
            let v = hyperbolic_get_utility(&c, &params(k)).values[1];
            assert!(v < previous);
            previous = v;
        }
    }

    #[test]
    fn engine_scales_and_never_learns() {
        let engine = HyperbolicEngine::new(params(0.1));
        let c = choice(10.0, 20.0, 10.0);
        let state = engine.init_state();
        let u = engine.utility(&state, &c);
        assert_eq!(u.values, vec![1.0, 1.0]);
        let next = engine.update(&state, &c, 1, &TrialRecord::new(1, 20.0, 0.0));
        assert_eq!(engine.utility(&next, &c).values, u.values);
    }

    #[test]
    fn parameter_validation() {
        assert!(params(0.1).validate().is_ok());
        assert!(params(0.0).validate().is_err());
        assert!(HyperbolicParameters {
            k_discount: 0.1,
            theta: -0.5,
            omega: 0.0
        }
        .validate()
        .is_err());
    }
}
