//! Population parameter presets.
//!
//! Synthetic cohort distributions for simulation experiments: independent
//! truncated normals per parameter. The healthy preset is
//! punishment-sensitive and settles on the good decks; the clinical preset
//! is reward-driven and punishment-insensitive, the profile reported for
//! addiction populations. Numeric values are hand-specified for this
//! toolkit (provenance is recorded in outputs); override them in config for
//! any substantive use.

use crate::types::OrlParameters;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Provenance string stamped into outputs that used a built-in preset.
pub const PRESET_PROVENANCE: &str = "synthetic-preset-v1";

/// Mean and spread of one parameter, truncated to `[lo, hi]` by resampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamDist {
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

impl ParamDist {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.sd == 0.0 {
            return self.mean.clamp(self.lo, self.hi);
        }
        let normal = Normal::new(self.mean, self.sd).expect("finite sd");
        for _ in 0..64 {
            let v = normal.sample(rng);
            if (self.lo..=self.hi).contains(&v) {
                return v;
            }
        }
        self.mean.clamp(self.lo, self.hi)
    }
}

/// Independent per-parameter distributions describing one population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationPreset {
    pub name: String,
    pub a_rew: ParamDist,
    pub a_pun: ParamDist,
    pub k: ParamDist,
    pub beta_f: ParamDist,
    pub beta_p: ParamDist,
    pub theta: ParamDist,
}

impl PopulationPreset {
    /// One parameter draw; `omega` is set by the caller's fusion config.
    pub fn sample(&self, rng: &mut ChaCha8Rng, omega: f64) -> OrlParameters {
        OrlParameters {
            a_rew: self.a_rew.sample(rng),
            a_pun: self.a_pun.sample(rng),
            k: self.k.sample(rng),
            beta_f: self.beta_f.sample(rng),
            beta_p: self.beta_p.sample(rng),
            theta: self.theta.sample(rng),
            omega,
        }
    }

    /// A whole cohort, one draw per subject.
    pub fn sample_cohort(&self, n: usize, rng: &mut ChaCha8Rng, omega: f64) -> Vec<OrlParameters> {
        (0..n).map(|_| self.sample(rng, omega)).collect()
    }
}

fn dist(mean: f64, sd: f64, lo: f64, hi: f64) -> ParamDist {
    ParamDist { mean, sd, lo, hi }
}

/// Balanced learner: punishment-sensitive, moderate frequency seeking.
pub fn healthy() -> PopulationPreset {
    PopulationPreset {
        name: "healthy".into(),
        a_rew: dist(0.25, 0.10, 0.02, 0.95),
        a_pun: dist(0.45, 0.15, 0.05, 0.95),
        k: dist(1.0, 0.5, 0.0, 5.0),
        beta_f: dist(1.2, 0.5, -5.0, 5.0),
        beta_p: dist(0.8, 0.4, -5.0, 5.0),
        theta: dist(1.6, 0.4, 0.2, 5.0),
    }
}

/// Reward-driven, punishment-insensitive learner with strong perseveration.
pub fn clinical() -> PopulationPreset {
    PopulationPreset {
        name: "clinical".into(),
        a_rew: dist(0.55, 0.15, 0.02, 0.95),
        a_pun: dist(0.06, 0.04, 0.005, 0.3),
        k: dist(1.0, 0.5, 0.0, 5.0),
        beta_f: dist(1.5, 0.6, -5.0, 5.0),
        beta_p: dist(1.0, 0.5, -5.0, 5.0),
        theta: dist(1.2, 0.4, 0.2, 5.0),
    }
}

/// Preset lookup by name.
pub fn by_name(name: &str) -> Option<PopulationPreset> {
    match name {
        "healthy" => Some(healthy()),
        "clinical" => Some(clinical()),
        _ => None,
    }
}

/// Names accepted by [`by_name`].
pub const PRESET_NAMES: [&str; 2] = ["healthy", "clinical"];

/// Hyperbolic-discounting rate presets (per day). Placeholder population
/// values; override in config for any substantive use.
pub fn dd_k_discount(preset: &str) -> Option<f64> {
    match preset {
        "healthy" => Some(0.01),
        "clinical" => Some(0.05),
        _ => None,
    }
}
