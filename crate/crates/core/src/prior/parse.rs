//! Parser for provider replies carrying a deck probability distribution.
//!
//! Accepts the braced-map form `{A: 0.4, B: 0.1, C: 0.25, D: 0.25}` as well
//! as labeled lines (`A: 0.4` ... one per line). Sums within [0.95, 1.05]
//! are renormalized; anything further off is rejected.

use super::TrialPolicy;
use regex::Regex;
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReplyParseError {
    #[error("no probability for deck {0} in reply")]
    MissingDeck(char),
    #[error("conflicting values for deck {0}")]
    ConflictingDeck(char),
    #[error("probabilities sum to {0:.4}, outside the [0.95, 1.05] tolerance")]
    BadSum(f64),
    #[error("unparseable probability value '{0}'")]
    BadValue(String),
}

fn deck_value_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(?:p[_\s]*)?([ABCD])\b\s*[:=]\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)")
            .expect("static regex compiles")
    })
}

/// Extracts the four deck probabilities from free-form reply text.
pub fn parse_policy_reply(text: &str) -> Result<TrialPolicy, ReplyParseError> {
    let mut values: [Option<f64>; 4] = [None; 4];
    for captures in deck_value_pattern().captures_iter(text) {
        let letter = captures[1].to_ascii_uppercase().chars().next().unwrap();
        let index = (letter as u8 - b'A') as usize;
        let value: f64 = captures[2]
            .parse()
            .map_err(|_| ReplyParseError::BadValue(captures[2].to_string()))?;
        match values[index] {
            None => values[index] = Some(value),
            Some(existing) if (existing - value).abs() <= 1e-9 => {}
            Some(_) => return Err(ReplyParseError::ConflictingDeck(letter)),
        }
    }
    let mut probs = Vec::with_capacity(4);
    for (i, v) in values.iter().enumerate() {
        match v {
            Some(p) => probs.push(*p),
            None => return Err(ReplyParseError::MissingDeck((b'A' + i as u8) as char)),
        }
    }
    let sum: f64 = probs.iter().sum();
    if !(0.95..=1.05).contains(&sum) {
        return Err(ReplyParseError::BadSum(sum));
    }
    let probs: Vec<f64> = probs.iter().map(|p| p / sum).collect();
    Ok(TrialPolicy::try_new(probs).expect("renormalized probabilities sum to 1"))
}
