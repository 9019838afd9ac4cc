//! Shared domain types: engine parameters, evolving agent state, trial
//! outcomes, and the utility/prior vector wrappers used across the crate.
//!
//! Deck/action indexing is fixed: A=0, B=1, C=2, D=3. Serialized output
//! always uses the letter labels. Payoffs are abstract integer points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Action count of the four-deck gambling task.
pub const IGT_ACTIONS: usize = 4;

/// Letter labels for the four decks, in index order.
pub const DECK_LABELS: [char; IGT_ACTIONS] = ['A', 'B', 'C', 'D'];

/// Letter label for a deck index. Panics if `action > 3`.
pub fn deck_label(action: usize) -> char {
    DECK_LABELS[action]
}

/// Parses a deck code: letters `A`..`D` (any case) or numerals `1`..`4`.
pub fn parse_deck_code(code: &str) -> Option<usize> {
    match code.trim() {
        "1" => Some(0),
        "2" => Some(1),
        "3" => Some(2),
        "4" => Some(3),
        s => match s.to_ascii_uppercase().as_str() {
            "A" => Some(0),
            "B" => Some(1),
            "C" => Some(2),
            "D" => Some(3),
            _ => None,
        },
    }
}

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("prior vector mean is {mean:e}, expected 0 within 1e-9")]
    PriorNotCentered { mean: f64 },
    #[error("vector entry {index} is not finite: {value}")]
    NonFiniteEntry { index: usize, value: f64 },
}

/// Free parameters of the outcome-representation learner plus the softmax
/// inverse temperature and the internal/external fusion weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrlParameters {
    /// Reward learning rate, in [0, 1].
    pub a_rew: f64,
    /// Punishment learning rate, in [0, 1].
    pub a_pun: f64,
    /// Perseveration decay, in [0, 5].
    pub k: f64,
    /// Frequency weight, unconstrained.
    pub beta_f: f64,
    /// Perseveration weight, unconstrained.
    pub beta_p: f64,
    /// Inverse temperature, non-negative.
    pub theta: f64,
    /// External-prior fusion weight, in [0, 1].
    pub omega: f64,
}

/// Parameter names in canonical report order.
pub const PARAMETER_NAMES: [&str; 7] = ["a_rew", "a_pun", "k", "beta_f", "beta_p", "theta", "omega"];

/// One range violation found by [`OrlParameters::validate`]. Violations are
/// data, not failures: an empty list means the parameter set is valid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterViolation {
    pub parameter: &'static str,
    pub message: String,
}

impl std::fmt::Display for ParameterViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl OrlParameters {
    /// Checks every documented range; range endpoints are legal.
    pub fn validate(&self) -> Vec<ParameterViolation> {
        let mut violations = Vec::new();
        let mut check = |parameter: &'static str, value: f64, lo: f64, hi: f64| {
            if !value.is_finite() {
                violations.push(ParameterViolation {
                    parameter,
                    message: format!("{parameter} is not finite"),
                });
            } else if value < lo {
                violations.push(ParameterViolation {
                    parameter,
                    message: format!("{parameter} < {lo}"),
                });
            } else if value > hi {
                violations.push(ParameterViolation {
                    parameter,
                    message: format!("{parameter} > {hi}"),
                });
            }
        };
        check("a_rew", self.a_rew, 0.0, 1.0);
        check("a_pun", self.a_pun, 0.0, 1.0);
        check("k", self.k, 0.0, 5.0);
        check("theta", self.theta, 0.0, f64::INFINITY);
        check("omega", self.omega, 0.0, 1.0);
        for (parameter, value) in [("beta_f", self.beta_f), ("beta_p", self.beta_p)] {
            if !value.is_finite() {
                violations.push(ParameterViolation {
                    parameter,
                    message: format!("{parameter} is not finite"),
                });
            }
        }
        violations
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Values in [`PARAMETER_NAMES`] order.
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.a_rew, self.a_pun, self.k, self.beta_f, self.beta_p, self.theta, self.omega,
        ]
    }
}

/// Per-deck learned state of the outcome-representation engine: expected
/// value, expected win/loss frequency, and perseveration weight.
///
/// All three vectors have one entry per action. The neutral start is all
/// zeros, which makes the first-trial softmax uniform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub ev: Vec<f64>,
    pub ef: Vec<f64>,
    pub ps: Vec<f64>,
    pub trial_index: usize,
}

impl AgentState {
    pub fn new(action_count: usize) -> Self {
        Self {
            ev: vec![0.0; action_count],
            ef: vec![0.0; action_count],
            ps: vec![0.0; action_count],
            trial_index: 0,
        }
    }

    pub fn action_count(&self) -> usize {
        self.ev.len()
    }
}

/// One trial's chosen action and objective outcome, in integer points.
/// `gain` is non-negative, `loss` non-positive, and `net = gain + loss`
/// by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub action: usize,
    pub gain: f64,
    pub loss: f64,
    pub net: f64,
}

impl TrialRecord {
    pub fn new(action: usize, gain: f64, loss: f64) -> Self {
        Self {
            action,
            gain,
            loss,
            net: gain + loss,
        }
    }
}

/// Action utilities on an arbitrary real scale, one entry per action.
/// Entries are finite; engine and fusion arithmetic preserve this.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityVector {
    pub values: Vec<f64>,
}

impl UtilityVector {
    pub fn new(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn zeros(action_count: usize) -> Self {
        Self {
            values: vec![0.0; action_count],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the largest entry, first on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// A static utility-scale prior over actions, centered so the entries sum
/// to zero. Entry signs read as preference for or aversion to an action
/// relative to the average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorVector {
    values: Vec<f64>,
}

/// Tolerance for the mean-zero invariant of [`PriorVector`].
pub const PRIOR_CENTER_TOL: f64 = 1e-9;

impl PriorVector {
    /// Accepts only vectors already centered within [`PRIOR_CENTER_TOL`].
    pub fn try_new(values: Vec<f64>) -> Result<Self, CoreError> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(CoreError::NonFiniteEntry { index, value });
            }
        }
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        if mean.abs() > PRIOR_CENTER_TOL {
            return Err(CoreError::PriorNotCentered { mean });
        }
        Ok(Self { values })
    }

    /// Centers the vector by subtracting its mean.
    pub fn recentered(values: Vec<f64>) -> Self {
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        Self {
            values: values.iter().map(|v| v - mean).collect(),
        }
    }

    pub fn zeros(action_count: usize) -> Self {
        Self {
            values: vec![0.0; action_count],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }

    /// Index of the largest entry, first on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Sign-flipped copy (a deliberately wrong prior for robustness checks).
    pub fn flipped(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interior() -> OrlParameters {
        OrlParameters {
            a_rew: 0.5,
            a_pun: 0.5,
            k: 1.0,
            beta_f: 0.0,
            beta_p: 0.0,
            theta: 1.0,
            omega: 0.25,
        }
    }

    #[test]
    fn interior_point_is_valid() {
        assert!(interior().validate().is_empty());
    }

    #[test]
    fn out_of_range_learning_rate_is_reported() {
        let p = OrlParameters {
            a_rew: 1.2,
            ..interior()
        };
        let violations = p.validate();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].parameter, "a_rew");
        assert_eq!(violations[0].message, "a_rew > 1");
    }

    #[test]
    fn closed_boundaries_are_valid() {
        let p = OrlParameters {
            k: 5.0,
            omega: 1.0,
            ..interior()
        };
        assert!(p.validate().is_empty());
    }

    #[test]
    fn multiple_violations_all_reported() {
        let p = OrlParameters {
            a_pun: -0.1,
            k: 7.0,
            theta: -1.0,
            omega: 1.5,
            ..interior()
        };
        let names: Vec<_> = p.validate().iter().map(|v| v.parameter).collect();
        assert_eq!(names, vec!["a_pun", "k", "theta", "omega"]);
    }

    #[test]
    fn initial_state_is_neutral() {
        let s = AgentState::new(4);
        assert_eq!(s.ev, vec![0.0; 4]);
        assert_eq!(s.ef, vec![0.0; 4]);
        assert_eq!(s.ps, vec![0.0; 4]);
        assert_eq!(s.trial_index, 0);
        assert_eq!(AgentState::new(2).action_count(), 2);
    }

    #[test]
    fn trial_record_net_is_gain_plus_loss() {
        let r = TrialRecord::new(1, 100.0, -250.0);
        assert_eq!(r.net, -150.0);
    }

    #[test]
    fn prior_rejects_uncentered_and_recenters() {
        assert!(PriorVector::try_new(vec![0.4, -0.1, -0.1, -0.1]).is_err());
        let p = PriorVector::recentered(vec![0.4, -0.1, -0.1, -0.1]);
        assert!(p.mean().abs() <= PRIOR_CENTER_TOL);
        assert!((p.values()[0] - 0.375).abs() < 1e-12);
        // A vector whose entries cancel exactly is accepted as-is.
        assert!(PriorVector::try_new(vec![0.3, -0.1, -0.1, -0.1]).is_ok());
    }

    #[test]
    fn deck_codes_parse_both_conventions() {
        assert_eq!(parse_deck_code("A"), Some(0));
        assert_eq!(parse_deck_code("d"), Some(3));
        assert_eq!(parse_deck_code("2"), Some(1));
        assert_eq!(parse_deck_code("5"), None);
        assert_eq!(deck_label(2), 'C');
    }
}
