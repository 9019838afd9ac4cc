//! Parameter recovery: simulate subjects from known parameters, fit each
//! one, and correlate truth with the recovered point estimates.

use super::likelihood::SubjectData;
use super::sampler::{point_estimate, sample_posterior, FitSettings, PointEstimate};
use super::InferenceError;
use crate::analysis::pearson_r;
use crate::engines::OrlEngine;
use crate::env::{IgtEnvironment, IgtPayoffSchedule, LossPlacement};
use crate::fusion::{simulate_agent, FusionConfig};
use crate::types::{OrlParameters, PriorVector, TrialRecord, PARAMETER_NAMES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Uniform ranges the true parameters are drawn from. The spread is wide
/// on purpose: recovery correlations are only meaningful when the truth
/// varies across its plausible range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruthRanges {
    pub a_rew: (f64, f64),
    pub a_pun: (f64, f64),
    pub k: (f64, f64),
    pub beta_f: (f64, f64),
    pub beta_p: (f64, f64),
    pub theta: (f64, f64),
}

impl Default for TruthRanges {
    fn default() -> Self {
        Self {
            a_rew: (0.05, 0.95),
            a_pun: (0.05, 0.95),
            k: (0.2, 4.5),
            beta_f: (-2.5, 2.5),
            beta_p: (-2.5, 2.5),
            theta: (0.5, 2.5),
        }
    }
}

impl TruthRanges {
    fn sample(&self, rng: &mut ChaCha8Rng) -> OrlParameters {
        let draw = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| rng.random_range(lo..hi);
        OrlParameters {
            a_rew: draw(rng, self.a_rew),
            a_pun: draw(rng, self.a_pun),
            k: draw(rng, self.k),
            beta_f: draw(rng, self.beta_f),
            beta_p: draw(rng, self.beta_p),
            theta: draw(rng, self.theta),
            omega: 0.0,
        }
    }
}

/// Recovery study configuration. Subjects are simulated with a zero prior
/// at omega = 0 (pure engine) so the study isolates the engine parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    pub n_subjects: usize,
    pub trial_count: usize,
    pub seed: u64,
    pub truth: TruthRanges,
    pub fit: FitSettings,
    pub point_estimate: PointEstimate,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            n_subjects: 30,
            trial_count: 100,
            seed: 0,
            truth: TruthRanges::default(),
            fit: FitSettings {
                warmup: 1000,
                draws: 2000,
                ..FitSettings::default()
            },
            point_estimate: PointEstimate::Mean,
        }
    }
}

/// One parameter's truth/estimate pairing across the recovered cohort.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub parameter: String,
    pub truths: Vec<f64>,
    pub estimates: Vec<f64>,
    /// `None` when the correlation is not computable (zero variance).
    pub pearson_r: Option<f64>,
}

/// Recovery study result: one row per parameter (including the fixed
/// fusion weight, whose correlation is never computable by construction).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub rows: Vec<RecoveryRow>,
    pub cohort_size: usize,
    pub excluded_nonconverged: usize,
    pub settings: RecoveryConfig,
}

impl RecoveryReport {
    pub fn row(&self, parameter: &str) -> Option<&RecoveryRow> {
        self.rows.iter().find(|r| r.parameter == parameter)
    }
}

/// Simulates one subject from known parameters with the pure engine.
pub fn simulate_subject(
    params: &OrlParameters,
    trial_count: usize,
    schedule: &IgtPayoffSchedule,
    seed: u64,
) -> Result<SubjectData, InferenceError> {
    let engine = OrlEngine::new(*params);
    let mut env = IgtEnvironment::new(schedule.clone(), LossPlacement::Shuffle)
        .map_err(|e| InferenceError::InvalidParameters(e.to_string()))?;
    let run = simulate_agent(
        &engine,
        &mut env,
        &PriorVector::zeros(4),
        &FusionConfig::linear(0.0),
        params.theta,
        trial_count,
        seed,
    )?;
    let trials: Vec<TrialRecord> = run.records.iter().map(|r| r.outcome).collect();
    SubjectData::new(format!("synthetic-{seed}"), trials)
}

/// Runs the full recovery study: sample truths, simulate, fit, correlate.
/// Non-converged fits are excluded from the correlations and counted.
pub fn run_recovery(config: &RecoveryConfig) -> Result<RecoveryReport, InferenceError> {
    if config.n_subjects < 2 {
        return Err(InferenceError::CohortTooSmall(config.n_subjects));
    }
    let schedule = IgtPayoffSchedule::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let truths: Vec<OrlParameters> = (0..config.n_subjects)
        .map(|_| config.truth.sample(&mut rng))
        .collect();

    let fits: Vec<(OrlParameters, bool)> = truths
        .par_iter()
        .enumerate()
        .map(|(i, truth)| {
            let data = simulate_subject(
                truth,
                config.trial_count,
                &schedule,
                config.seed.wrapping_add(i as u64),
            )?;
            let fit_settings = FitSettings {
                seed: config.seed.wrapping_add(0x1000_0000 + i as u64),
                ..config.fit
            };
            let posterior = sample_posterior(&data, &PriorVector::zeros(4), &fit_settings)?;
            let estimate = point_estimate(&posterior, config.point_estimate)?;
            Ok((estimate, posterior.converged))
        })
        .collect::<Result<_, InferenceError>>()?;

    let excluded_nonconverged = fits.iter().filter(|(_, ok)| !ok).count();
    let mut rows = Vec::with_capacity(PARAMETER_NAMES.len());
    for (index, name) in PARAMETER_NAMES.iter().enumerate() {
        let mut truth_col = Vec::new();
        let mut estimate_col = Vec::new();
        for (truth, (estimate, converged)) in truths.iter().zip(&fits) {
            if *converged {
                truth_col.push(truth.as_array()[index]);
                estimate_col.push(estimate.as_array()[index]);
            }
        }
        rows.push(RecoveryRow {
            parameter: name.to_string(),
            pearson_r: pearson_r(&truth_col, &estimate_col),
            truths: truth_col,
            estimates: estimate_col,
        });
    }

    Ok(RecoveryReport {
        rows,
        cohort_size: config.n_subjects,
        excluded_nonconverged,
        settings: config.clone(),
    })
}
