//! Evaluation metrics and experiment drivers: trajectory goodness-of-fit,
//! correlation, divergence and uniformity statistics, model-consistency
//! analysis, transcript ablation statistics, and the fusion-weight and
//! fusion-mechanism sweeps.

use crate::engines::presets::PopulationPreset;
use crate::engines::OrlEngine;
use crate::env::{IgtEnvironment, IgtPayoffSchedule, LossPlacement};
use crate::fusion::{simulate_agent, FusionConfig, SimulationRun};
use crate::prior::{aggregate_prior, PolicyTranscript};
use crate::types::PriorVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("block structure mismatch: {0} vs {1} blocks")]
    BlockMismatch(usize, usize),
    #[error("cohort mismatch: {0}")]
    CohortMismatch(String),
    #[error("inputs must have equal length >= 2")]
    BadInput,
    #[error("probability vectors must match in length")]
    BadDistribution,
    #[error(transparent)]
    Fusion(#[from] crate::fusion::FusionError),
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len().max(1) as f64
}

/// Sample Pearson correlation; `None` when either side has zero variance
/// (the statistic is undefined there, not zero).
pub fn pearson_r(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Block-level choice summary of a cohort: advantageous choice proportion
/// per block, overall per-deck proportions, and the subject count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub block_advantageous: Vec<f64>,
    pub deck_proportions: Vec<f64>,
    pub subject_count: usize,
}

impl TrajectorySummary {
    /// Summarizes a cohort of runs with a common trial count.
    pub fn from_runs(runs: &[SimulationRun], block_length: usize) -> Self {
        let subject_count = runs.len();
        if subject_count == 0 {
            return Self {
                block_advantageous: Vec::new(),
                deck_proportions: Vec::new(),
                subject_count: 0,
            };
        }
        let trials = runs[0].records.len();
        let action_count = runs[0]
            .records
            .first()
            .map_or(crate::types::IGT_ACTIONS, |r| r.u_rl.len());
        let half = action_count / 2;
        let blocks = trials / block_length;
        let mut block_advantageous = vec![0.0; blocks];
        let mut deck_counts = vec![0usize; action_count];
        let mut total_trials = 0usize;
        for run in runs {
            for (t, record) in run.records.iter().enumerate() {
                deck_counts[record.action] += 1;
                total_trials += 1;
                let block = t / block_length;
                if block < blocks && record.action >= half {
                    block_advantageous[block] += 1.0;
                }
            }
        }
        for b in &mut block_advantageous {
            *b /= (subject_count * block_length) as f64;
        }
        let deck_proportions = deck_counts
            .iter()
            .map(|c| *c as f64 / total_trials.max(1) as f64)
            .collect();
        Self {
            block_advantageous,
            deck_proportions,
            subject_count,
        }
    }

    fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.block_advantageous
            .iter()
            .chain(self.deck_proportions.iter())
            .copied()
    }
}

/// Mean squared deviation between two trajectory summaries, on squared
/// proportion scale, averaged over the block-advantageous entries and the
/// per-deck proportions together.
pub fn msd(sim: &TrajectorySummary, reference: &TrajectorySummary) -> Result<f64, AnalysisError> {
    if sim.block_advantageous.len() != reference.block_advantageous.len() {
        return Err(AnalysisError::BlockMismatch(
            sim.block_advantageous.len(),
            reference.block_advantageous.len(),
        ));
    }
    if sim.deck_proportions.len() != reference.deck_proportions.len() {
        return Err(AnalysisError::BadInput);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (a, b) in sim.entries().zip(reference.entries()) {
        total += (a - b) * (a - b);
        count += 1;
    }
    if count == 0 {
        return Err(AnalysisError::BadInput);
    }
    Ok(total / count as f64)
}

/// Kullback-Leibler divergence in nats with additive smoothing: both
/// distributions get epsilon = 1e-9 added and are renormalized before
/// `sum p ln(p/q)`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, AnalysisError> {
    if p.len() != q.len() || p.is_empty() {
        return Err(AnalysisError::BadDistribution);
    }
    const EPS: f64 = 1e-9;
    let smooth = |v: &[f64]| -> Vec<f64> {
        let sum: f64 = v.iter().map(|x| x + EPS).sum();
        v.iter().map(|x| (x + EPS) / sum).collect()
    };
    let ps = smooth(p);
    let qs = smooth(q);
    Ok(ps
        .iter()
        .zip(&qs)
        .map(|(a, b)| if *a > 0.0 { a * (a / b).ln() } else { 0.0 })
        .sum())
}

// Regularized incomplete gamma, series/continued-fraction hybrid. Used for
// chi-square tail probabilities without a statistics dependency.

/// Lanczos log-gamma (g = 7, n = 9), comfortably beyond the 1e-10 accuracy
/// the 3-dof use needs.
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        return (std::f64::consts::PI / (std::f64::consts::PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut n = a;
    for _ in 0..500 {
        n += 1.0;
        term *= x / n;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma(a)).exp()
}

fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - lower_gamma_series(a, x)).clamp(0.0, 1.0)
    } else {
        upper_gamma_cf(a, x).clamp(0.0, 1.0)
    }
}

/// Chi-square test of uniformity over `counts`. Returns the statistic
/// `sum (O - E)^2 / E` against equal expected counts and the p-value from
/// the chi-square survival function at `k - 1` degrees of freedom.
pub fn chi_square_uniformity(counts: &[u64]) -> Result<(f64, f64), AnalysisError> {
    if counts.len() < 2 {
        return Err(AnalysisError::BadInput);
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(AnalysisError::BadInput);
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic: f64 = counts
        .iter()
        .map(|&o| {
            let diff = o as f64 - expected;
            diff * diff / expected
        })
        .sum();
    let dof = (counts.len() - 1) as f64;
    let p = regularized_gamma_q(dof / 2.0, statistic / 2.0);
    Ok((statistic, p))
}

/// Subject-level agreement between two paired cohorts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    /// Pearson correlation of per-subject advantageous choice rates;
    /// `None` when a cohort is degenerate.
    pub pearson_r: Option<f64>,
    /// Mean absolute difference of the paired per-subject rates.
    pub mae: f64,
    /// Absolute difference of the cohort-mean advantageous rates.
    pub behavioral_difference: f64,
    pub subject_count: usize,
}

/// Compares two cohorts subject by subject on advantageous choice rates.
/// The cohorts must be the same size and pair the same seeds in order.
pub fn consistency_analysis(
    run_a: &[SimulationRun],
    run_b: &[SimulationRun],
) -> Result<ConsistencyReport, AnalysisError> {
    if run_a.len() != run_b.len() || run_a.is_empty() {
        return Err(AnalysisError::CohortMismatch(format!(
            "{} vs {} subjects",
            run_a.len(),
            run_b.len()
        )));
    }
    for (a, b) in run_a.iter().zip(run_b) {
        if a.seed != b.seed {
            return Err(AnalysisError::CohortMismatch(format!(
                "unpaired seeds {} vs {}",
                a.seed, b.seed
            )));
        }
    }
    let rates_a: Vec<f64> = run_a.iter().map(SimulationRun::advantageous_rate).collect();
    let rates_b: Vec<f64> = run_b.iter().map(SimulationRun::advantageous_rate).collect();
    let mae = rates_a
        .iter()
        .zip(&rates_b)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / rates_a.len() as f64;
    Ok(ConsistencyReport {
        pearson_r: pearson_r(&rates_a, &rates_b),
        mae,
        behavioral_difference: (mean(&rates_a) - mean(&rates_b)).abs(),
        subject_count: run_a.len(),
    })
}

/// Simulates a cohort on the gambling task, one run per parameter set,
/// with per-subject seed `base_seed + index` so paired conditions share
/// randomness.
pub fn simulate_igt_cohort(
    params: &[crate::types::OrlParameters],
    prior: &PriorVector,
    fusion: &FusionConfig,
    schedule: &IgtPayoffSchedule,
    placement: LossPlacement,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<SimulationRun>, AnalysisError> {
    params
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let engine = OrlEngine::new(*p);
            let mut env = IgtEnvironment::new(schedule.clone(), placement)?;
            Ok(simulate_agent(
                &engine,
                &mut env,
                prior,
                fusion,
                p.theta,
                trials,
                base_seed + i as u64,
            )?)
        })
        .collect()
}

/// One cell of a fusion-weight sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaSweepRow {
    pub preset: String,
    pub omega: f64,
    /// `as-given` or `flipped` (sign-inverted prior).
    pub prior_variant: String,
    pub mean_advantageous_rate: f64,
}

/// Mean advantageous choice rate per (preset, prior-variant, omega) cell,
/// with paired seeds across cells so only the fusion weight varies.
#[allow(clippy::too_many_arguments)]
pub fn omega_sweep(
    omegas: &[f64],
    prior: &PriorVector,
    presets: &[PopulationPreset],
    cohort_size: usize,
    trials: usize,
    schedule: &IgtPayoffSchedule,
    include_flipped: bool,
    seed: u64,
) -> Result<Vec<OmegaSweepRow>, AnalysisError> {
    let flipped = prior.flipped();
    let mut rows = Vec::new();
    for preset in presets {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cohort = preset.sample_cohort(cohort_size, &mut rng, 0.0);
        let variants: Vec<(&str, &PriorVector)> = if include_flipped {
            vec![("as-given", prior), ("flipped", &flipped)]
        } else {
            vec![("as-given", prior)]
        };
        for (variant, prior_v) in variants {
            for &omega in omegas {
                let fusion = FusionConfig::linear(omega);
                let runs = simulate_igt_cohort(
                    &cohort,
                    prior_v,
                    &fusion,
                    schedule,
                    LossPlacement::Shuffle,
                    trials,
                    seed,
                )?;
                let rates: Vec<f64> =
                    runs.iter().map(SimulationRun::advantageous_rate).collect();
                rows.push(OmegaSweepRow {
                    preset: preset.name.clone(),
                    omega,
                    prior_variant: variant.into(),
                    mean_advantageous_rate: mean(&rates),
                });
            }
        }
    }
    Ok(rows)
}

/// One mechanism's cohort outcome in the fusion comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FusionCompareRow {
    pub mechanism: String,
    pub mean_advantageous_rate: f64,
    pub rates: Vec<f64>,
}

/// Runs the same cohort under each fusion configuration (paired seeds) and
/// reports the advantageous-rate distribution per mechanism.
pub fn fusion_compare(
    configs: &[FusionConfig],
    prior: &PriorVector,
    preset: &PopulationPreset,
    cohort_size: usize,
    trials: usize,
    schedule: &IgtPayoffSchedule,
    seed: u64,
) -> Result<Vec<FusionCompareRow>, AnalysisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cohort = preset.sample_cohort(cohort_size, &mut rng, 0.0);
    configs
        .iter()
        .map(|cfg| {
            let runs = simulate_igt_cohort(
                &cohort,
                prior,
                cfg,
                schedule,
                LossPlacement::Shuffle,
                trials,
                seed,
            )?;
            let rates: Vec<f64> = runs.iter().map(SimulationRun::advantageous_rate).collect();
            Ok(FusionCompareRow {
                mechanism: cfg.mechanism.name().into(),
                mean_advantageous_rate: mean(&rates),
                rates,
            })
        })
        .collect()
}

/// Distribution statistics for one transcript in the prompt-ablation
/// analysis: expected choice counts (rounded column sums of the per-trial
/// policies), the uniformity test over them, divergence of the aggregate
/// from uniform, the spread of the aggregate, and per-block divergences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationReport {
    pub persona_id: String,
    pub trial_count: usize,
    pub expected_counts: Vec<u64>,
    pub chi_square: f64,
    pub chi_square_p: f64,
    pub kl_vs_uniform: f64,
    pub std_dev: f64,
    pub block_kl: Vec<f64>,
}

/// Ablation statistics for one transcript; blocks are `block_length`
/// consecutive trials.
pub fn ablation_statistics(
    transcript: &PolicyTranscript,
    block_length: usize,
) -> Result<AblationReport, AnalysisError> {
    let n = transcript.action_count();
    let uniform = vec![1.0 / n as f64; n];
    let aggregate = aggregate_prior(transcript).map_err(|_| AnalysisError::BadInput)?;

    let mut column_sums = vec![0.0; n];
    for policy in &transcript.trials {
        for (c, p) in column_sums.iter_mut().zip(policy.probs()) {
            *c += p;
        }
    }
    let expected_counts: Vec<u64> = column_sums.iter().map(|c| c.round() as u64).collect();
    let (chi_square, chi_square_p) = chi_square_uniformity(&expected_counts)?;

    let kl_vs_uniform = kl_divergence(&aggregate, &uniform)?;
    let agg_mean = mean(&aggregate);
    let std_dev = (aggregate
        .iter()
        .map(|a| (a - agg_mean) * (a - agg_mean))
        .sum::<f64>()
        / n as f64)
        .sqrt();

    let mut block_kl = Vec::new();
    for chunk in transcript.trials.chunks(block_length) {
        if chunk.len() < block_length {
            break;
        }
        let mut block_mean = vec![0.0; n];
        for policy in chunk {
            for (m, p) in block_mean.iter_mut().zip(policy.probs()) {
                *m += p / chunk.len() as f64;
            }
        }
        block_kl.push(kl_divergence(&block_mean, &uniform)?);
    }

    Ok(AblationReport {
        persona_id: transcript.persona_id.clone(),
        trial_count: transcript.trials.len(),
        expected_counts,
        chi_square,
        chi_square_p,
        kl_vs_uniform,
        std_dev,
        block_kl,
    })
}
