//! External utility priors.
//!
//! A prior starts life as a per-trial sequence of action probability
//! distributions recorded from some provider (a live chat endpoint, a
//! cached transcript file, or a built-in preset). Averaging the trials
//! gives one stable probability vector; centering and scaling converts it
//! to the utility scale the fusion stage expects. Cached transcripts are
//! the reproducible path; the HTTP provider is an optional transport.

mod http;
mod parse;
mod transcript;

pub use http::{http_prior_provider, HttpProviderConfig};
pub use parse::parse_policy_reply;
pub use transcript::{load_transcript, parse_transcript, save_transcript, write_transcript};

use crate::types::{PriorVector, PRIOR_CENTER_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Bundled transcript: a guidance-trained persona that favors the decks
/// with stable long-term payoffs.
pub const CBT_TRANSCRIPT: &str = include_str!("../../assets/transcripts/cbt.transcript");
/// Bundled transcript: near-uniform choice distributions from an
/// instruction-compliant provider.
pub const COMPLIANT_TRANSCRIPT: &str = include_str!("../../assets/transcripts/compliant.transcript");
/// Bundled transcript: a provider that collapses onto a single action.
pub const BIASED_TRANSCRIPT: &str = include_str!("../../assets/transcripts/biased.transcript");

/// Default system/instruction prompt asking for uniform selection.
pub const NEUTRAL_PROMPT: &str = include_str!("../../assets/prompts/neutral.txt");
/// Default prompt encoding therapeutic guidance toward long-term outcomes.
pub const CBT_PROMPT: &str = include_str!("../../assets/prompts/cbt.txt");

#[derive(Debug, Error)]
pub enum PriorError {
    #[error("transcript has no trials")]
    EmptyTranscript,
    #[error("policy has {0} entries, expected {1}")]
    LengthMismatch(usize, usize),
    #[error("probabilities must be non-negative and sum to 1 within 1e-6 (sum = {0})")]
    NotAProbabilityVector(f64),
    #[error("unknown persona '{name}'; available presets: {available}")]
    UnknownPersona { name: String, available: String },
    #[error("scale factor must be positive, got {0}")]
    BadScaleFactor(f64),
    #[error("prior vector entries must be finite")]
    NonFinite,
    #[error(transparent)]
    Transcript(#[from] transcript::TranscriptError),
    #[error("prior provider: {0}")]
    Provider(String),
}

/// One trial's action probability distribution from a prior provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPolicy {
    probs: Vec<f64>,
}

/// Tolerance on a policy's probability sum.
pub const POLICY_SUM_TOL: f64 = 1e-6;

impl TrialPolicy {
    pub fn try_new(probs: Vec<f64>) -> Result<Self, PriorError> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(PriorError::NotAProbabilityVector(f64::NAN));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > POLICY_SUM_TOL {
            return Err(PriorError::NotAProbabilityVector(sum));
        }
        Ok(Self { probs })
    }

    pub fn uniform(action_count: usize) -> Self {
        Self {
            probs: vec![1.0 / action_count as f64; action_count],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// A persona's full recorded run: ordered per-trial policies plus free-form
/// provider metadata (model name, temperature, warnings, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTranscript {
    pub persona_id: String,
    pub trials: Vec<TrialPolicy>,
    pub provider_metadata: BTreeMap<String, String>,
}

impl PolicyTranscript {
    pub fn new(
        persona_id: impl Into<String>,
        trials: Vec<TrialPolicy>,
        provider_metadata: BTreeMap<String, String>,
    ) -> Result<Self, PriorError> {
        if trials.is_empty() {
            return Err(PriorError::EmptyTranscript);
        }
        let len = trials[0].len();
        for t in &trials {
            if t.len() != len {
                return Err(PriorError::LengthMismatch(t.len(), len));
            }
        }
        Ok(Self {
            persona_id: persona_id.into(),
            trials,
            provider_metadata,
        })
    }

    pub fn action_count(&self) -> usize {
        self.trials[0].len()
    }
}

/// How the centered preference vector is mapped onto the utility scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMethod {
    /// Divide by the population standard deviation of the centered vector.
    UnitStd,
    /// Divide by the largest absolute entry, mapping the strongest
    /// preference to +/-1 (commensurate with the engine's unit-scale
    /// perseveration term).
    #[default]
    MaxAbs,
    /// Multiply by a fixed positive factor.
    FixedFactor,
}

/// Scale method plus the factor used by [`ScaleMethod::FixedFactor`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorScaleConfig {
    pub method: ScaleMethod,
    pub factor: f64,
}

impl Default for PriorScaleConfig {
    fn default() -> Self {
        Self {
            method: ScaleMethod::MaxAbs,
            factor: 1.0,
        }
    }
}

/// Elementwise mean of all trial policies: the persona's stable preference
/// distribution over actions.
pub fn aggregate_prior(transcript: &PolicyTranscript) -> Result<Vec<f64>, PriorError> {
    if transcript.trials.is_empty() {
        return Err(PriorError::EmptyTranscript);
    }
    let n = transcript.action_count();
    let mut mean = vec![0.0; n];
    for policy in &transcript.trials {
        for (m, p) in mean.iter_mut().zip(policy.probs()) {
            *m += p;
        }
    }
    let count = transcript.trials.len() as f64;
    for m in &mut mean {
        *m /= count;
    }
    Ok(mean)
}

/// Converts a probability vector to a centered utility-scale prior.
///
/// A uniform input has nothing to scale; under `unit-std` and `max-abs` it
/// maps to the exact zero vector rather than an error.
pub fn prior_to_utility(
    probs: &[f64],
    cfg: &PriorScaleConfig,
) -> Result<PriorVector, PriorError> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(PriorError::NotAProbabilityVector(f64::NAN));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > POLICY_SUM_TOL {
        return Err(PriorError::NotAProbabilityVector(sum));
    }
    let mean = sum / probs.len() as f64;
    let centered: Vec<f64> = probs.iter().map(|p| p - mean).collect();
    const DEGENERATE: f64 = 1e-12;
    let scaled = match cfg.method {
        ScaleMethod::UnitStd => {
            let var = centered.iter().map(|c| c * c).sum::<f64>() / centered.len() as f64;
            let sd = var.sqrt();
            if sd < DEGENERATE {
                return Ok(PriorVector::zeros(probs.len()));
            }
            centered.iter().map(|c| c / sd).collect()
        }
        ScaleMethod::MaxAbs => {
            let max = centered.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if max < DEGENERATE {
                return Ok(PriorVector::zeros(probs.len()));
            }
            centered.iter().map(|c| c / max).collect()
        }
        ScaleMethod::FixedFactor => {
            if !(cfg.factor > 0.0) {
                return Err(PriorError::BadScaleFactor(cfg.factor));
            }
            centered.iter().map(|c| c * cfg.factor).collect()
        }
    };
    Ok(PriorVector::recentered(scaled))
}

/// Where a static prior comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Persona {
    /// A built-in preset: `neutral`, `cbt`, or `noisy`.
    Named(String),
    /// An explicit utility-scale vector; recentered if its mean is nonzero.
    Explicit(Vec<f64>),
}

/// A constructed prior plus provenance notes.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltPrior {
    pub vector: PriorVector,
    pub source: String,
    /// True when an explicit vector had to be recentered; callers should
    /// surface a warning.
    pub recentered: bool,
}

/// Preset names accepted by [`static_prior`].
pub const PERSONA_PRESETS: [&str; 3] = ["neutral", "cbt", "noisy"];

/// Builds a static prior without network access.
///
/// `neutral` is the zero vector (a uniform preference centers to nothing);
/// `cbt` aggregates the bundled guidance transcript; `noisy` is a seeded
/// random tilt. The scale config applies to the preset pipelines; explicit
/// vectors are taken as already being on the utility scale.
pub fn static_prior(
    persona: &Persona,
    scale: &PriorScaleConfig,
    seed: u64,
) -> Result<BuiltPrior, PriorError> {
    match persona {
        Persona::Named(name) => match name.as_str() {
            "neutral" => Ok(BuiltPrior {
                vector: PriorVector::zeros(crate::types::IGT_ACTIONS),
                source: "preset:neutral".into(),
                recentered: false,
            }),
            "cbt" => {
                let transcript = parse_transcript(CBT_TRANSCRIPT)?;
                let probs = aggregate_prior(&transcript)?;
                Ok(BuiltPrior {
                    vector: prior_to_utility(&probs, scale)?,
                    source: "preset:cbt (bundled transcript)".into(),
                    recentered: false,
                })
            }
            "noisy" => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let normal = Normal::new(0.0, 0.03).expect("finite sd");
                let probs: Vec<f64> = (0..crate::types::IGT_ACTIONS)
                    .map(|_| (0.25_f64 + normal.sample(&mut rng)).max(1e-3))
                    .collect();
                let sum: f64 = probs.iter().sum();
                let probs: Vec<f64> = probs.iter().map(|p| p / sum).collect();
                Ok(BuiltPrior {
                    vector: prior_to_utility(&probs, scale)?,
                    source: format!("preset:noisy (seed {seed})"),
                    recentered: false,
                })
            }
            other => Err(PriorError::UnknownPersona {
                name: other.to_string(),
                available: PERSONA_PRESETS.join(", "),
            }),
        },
        Persona::Explicit(values) => {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(PriorError::NonFinite);
            }
            let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
            if mean.abs() <= PRIOR_CENTER_TOL {
                Ok(BuiltPrior {
                    vector: PriorVector::recentered(values.clone()),
                    source: "explicit".into(),
                    recentered: false,
                })
            } else {
                Ok(BuiltPrior {
                    vector: PriorVector::recentered(values.clone()),
                    source: "explicit (recentered)".into(),
                    recentered: true,
                })
            }
        }
    }
}

/// Parses a bundled transcript by name.
pub fn bundled_transcript(name: &str) -> Option<PolicyTranscript> {
    let text = match name {
        "cbt" => CBT_TRANSCRIPT,
        "compliant" => COMPLIANT_TRANSCRIPT,
        "biased" => BIASED_TRANSCRIPT,
        _ => return None,
    };
    Some(parse_transcript(text).expect("bundled transcripts are well-formed"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn policy(probs: &[f64]) -> TrialPolicy {
        TrialPolicy::try_new(probs.to_vec()).unwrap()
    }

    fn transcript(trials: Vec<TrialPolicy>) -> PolicyTranscript {
        PolicyTranscript::new("test", trials, BTreeMap::new()).unwrap()
    }

    #[test]
    fn aggregate_of_constant_trials() {
        let t = transcript(vec![TrialPolicy::uniform(4); 7]);
        assert_eq!(aggregate_prior(&t).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn aggregate_two_point_mean() {
        let t = transcript(vec![
            policy(&[1.0, 0.0, 0.0, 0.0]),
            policy(&[0.0, 1.0, 0.0, 0.0]),
        ]);
        assert_eq!(aggregate_prior(&t).unwrap(), vec![0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn aggregate_columnwise_mean() {
        let t = transcript(vec![
            policy(&[0.4, 0.2, 0.2, 0.2]),
            policy(&[0.1, 0.3, 0.3, 0.3]),
            policy(&[0.1, 0.1, 0.4, 0.4]),
        ]);
        let agg = aggregate_prior(&t).unwrap();
        for (got, want) in agg.iter().zip([0.2, 0.2, 0.3, 0.3]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_input_centers_to_zero_under_every_method() {
        for method in [ScaleMethod::UnitStd, ScaleMethod::MaxAbs, ScaleMethod::FixedFactor] {
            let cfg = PriorScaleConfig { method, factor: 3.0 };
            let prior = prior_to_utility(&[0.25; 4], &cfg).unwrap();
            assert_eq!(prior.values(), &[0.0; 4]);
        }
    }

    #[test]
    fn max_abs_maps_strongest_preference_to_one() {
        let cfg = PriorScaleConfig::default();
        let prior = prior_to_utility(&[0.1, 0.1, 0.4, 0.4], &cfg).unwrap();
        for (got, want) in prior.values().iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_factor_scaling() {
        let cfg = PriorScaleConfig {
            method: ScaleMethod::FixedFactor,
            factor: 10.0,
        };
        let prior = prior_to_utility(&[0.5, 0.5, 0.0, 0.0], &cfg).unwrap();
        for (got, want) in prior.values().iter().zip([2.5, 2.5, -2.5, -2.5]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_is_preserved_by_every_scale_method() {
        let probs = [0.15, 0.2, 0.05, 0.6];
        for method in [ScaleMethod::UnitStd, ScaleMethod::MaxAbs, ScaleMethod::FixedFactor] {
            let cfg = PriorScaleConfig { method, factor: 2.0 };
            let prior = prior_to_utility(&probs, &cfg).unwrap();
            assert_eq!(prior.argmax(), 3);
        }
    }

    #[test]
    fn rejects_non_probability_input() {
        let cfg = PriorScaleConfig::default();
        assert!(prior_to_utility(&[0.5, 0.5, 0.5, 0.5], &cfg).is_err());
        assert!(prior_to_utility(&[1.2, -0.2, 0.0, 0.0], &cfg).is_err());
    }

    #[test]
    fn neutral_preset_is_zero() {
        let built = static_prior(
            &Persona::Named("neutral".into()),
            &PriorScaleConfig::default(),
            0,
        )
        .unwrap();
        assert_eq!(built.vector.values(), &[0.0; 4]);
    }

    #[test]
    fn cbt_preset_prefers_the_stable_decks() {
        let built = static_prior(
            &Persona::Named("cbt".into()),
            &PriorScaleConfig::default(),
            0,
        )
        .unwrap();
        let v = built.vector.values();
        assert!(v[0] < 0.0 && v[1] < 0.0 && v[2] > 0.0 && v[3] > 0.0, "{v:?}");
        assert!(built.vector.mean().abs() <= PRIOR_CENTER_TOL);
    }

    #[test]
    fn unknown_persona_lists_presets() {
        let err = static_prior(
            &Persona::Named("zen".into()),
            &PriorScaleConfig::default(),
            0,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("neutral") && msg.contains("cbt") && msg.contains("noisy"));
    }

    #[test]
    fn explicit_vector_is_recentered_with_flag() {
        let built = static_prior(
            &Persona::Explicit(vec![0.4, -0.1, -0.1, -0.1]),
            &PriorScaleConfig::default(),
            0,
        )
        .unwrap();
        assert!(built.recentered);
        assert!(built.vector.mean().abs() <= PRIOR_CENTER_TOL);
        assert!((built.vector.values()[0] - 0.375).abs() < 1e-12);
        // Entries that cancel exactly pass through untouched.
        let built = static_prior(
            &Persona::Explicit(vec![0.3, -0.1, -0.1, -0.1]),
            &PriorScaleConfig::default(),
            0,
        )
        .unwrap();
        assert!(!built.recentered);
    }

    #[test]
    fn noisy_preset_is_seed_deterministic() {
        let cfg = PriorScaleConfig::default();
        let a = static_prior(&Persona::Named("noisy".into()), &cfg, 9).unwrap();
        let b = static_prior(&Persona::Named("noisy".into()), &cfg, 9).unwrap();
        let c = static_prior(&Persona::Named("noisy".into()), &cfg, 10).unwrap();
        assert_eq!(a.vector, b.vector);
        assert_ne!(a.vector, c.vector);
    }
}
