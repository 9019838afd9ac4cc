//! Decision fusion and the per-agent simulation loop.
//!
//! Each trial the engine's utility vector is blended with the static
//! external prior — by default the convex combination
//! `(1 - omega) * u_rl + omega * prior` — then passed through a softmax
//! with inverse temperature `theta`, and an action is sampled from the
//! resulting policy. Four alternative fusion mechanisms are provided for
//! the mechanism-comparison experiment; their formulas are this crate's
//! reconstructions and are documented inline.
//!
//! Action sampling consumes exactly one uniform draw per trial from its
//! own seeded stream, and environment randomness lives on a second stream,
//! so changing `omega` (or the prior) never desynchronizes the outcomes
//! seen by paired-seed comparison runs.

use crate::engines::RlEngine;
use crate::env::{EnvError, Task};
use crate::types::{PriorVector, TrialRecord, UtilityVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("length mismatch: utility has {utility} entries, prior has {prior}")]
    LengthMismatch { utility: usize, prior: usize },
    #[error("fusion weight omega must be in [0, 1], got {0}")]
    BadOmega(f64),
    #[error("fusion mechanism '{mechanism}' requires parameter '{parameter}'")]
    MissingParameter {
        mechanism: &'static str,
        parameter: &'static str,
    },
    #[error("trial {trial}: {source}")]
    Environment {
        trial: usize,
        #[source]
        source: EnvError,
    },
}

/// Available fusion mechanisms. `Linear` is the default and the only one
/// used outside the mechanism-comparison experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionMechanism {
    #[default]
    Linear,
    Multiplicative,
    BayesianAverage,
    Attention,
    Gated,
}

impl FusionMechanism {
    pub fn name(&self) -> &'static str {
        match self {
            FusionMechanism::Linear => "linear",
            FusionMechanism::Multiplicative => "multiplicative",
            FusionMechanism::BayesianAverage => "bayesian-average",
            FusionMechanism::Attention => "attention",
            FusionMechanism::Gated => "gated",
        }
    }
}

/// Mechanism choice plus its parameters. `omega` drives the linear blend;
/// the alternatives read their settings from `params`:
///
/// * `bayesian-average`: `precision_rl`, `precision_prior` (required)
/// * `gated`: `threshold` (required)
/// * `attention`: `sharpness` (optional, default 1.0)
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub mechanism: FusionMechanism,
    pub omega: f64,
    pub params: BTreeMap<String, f64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            mechanism: FusionMechanism::Linear,
            omega: 0.25,
            params: BTreeMap::new(),
        }
    }
}

impl FusionConfig {
    pub fn linear(omega: f64) -> Self {
        Self {
            mechanism: FusionMechanism::Linear,
            omega,
            params: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(FusionError::BadOmega(self.omega));
        }
        Ok(())
    }

    fn param(
        &self,
        mechanism: &'static str,
        parameter: &'static str,
    ) -> Result<f64, FusionError> {
        self.params
            .get(parameter)
            .copied()
            .ok_or(FusionError::MissingParameter {
                mechanism,
                parameter,
            })
    }
}

fn check_lengths(u: &UtilityVector, prior: &PriorVector) -> Result<(), FusionError> {
    if u.len() != prior.len() {
        return Err(FusionError::LengthMismatch {
            utility: u.len(),
            prior: prior.len(),
        });
    }
    Ok(())
}

/// Convex blend `(1 - omega) * u_rl + omega * prior`.
pub fn fuse_linear(
    u_rl: &UtilityVector,
    prior: &PriorVector,
    omega: f64,
) -> Result<UtilityVector, FusionError> {
    check_lengths(u_rl, prior)?;
    if !(0.0..=1.0).contains(&omega) {
        return Err(FusionError::BadOmega(omega));
    }
    Ok(UtilityVector::new(blend(u_rl.values.as_slice(), prior.values(), omega)))
}

/// Elementwise `(1 - w) * a + w * b`.
pub(crate) fn blend(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| (1.0 - w) * x + w * y)
        .collect()
}

/// Softmax policy `P(a) = exp(theta * u[a]) / sum exp(theta * u)`, computed
/// with max-subtraction so large utilities cannot overflow.
pub fn softmax_policy(u: &UtilityVector, theta: f64) -> Vec<f64> {
    softmax_scaled(&u.values, theta)
}

fn softmax_scaled(values: &[f64], theta: f64) -> Vec<f64> {
    let max = values
        .iter()
        .fold(f64::NEG_INFINITY, |m, v| m.max(theta * v));
    let exps: Vec<f64> = values.iter().map(|v| (theta * v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Log of the softmax policy, numerically stable; used by the likelihood.
pub fn log_softmax_policy(u: &UtilityVector, theta: f64) -> Vec<f64> {
    let scaled: Vec<f64> = u.values.iter().map(|v| theta * v).collect();
    let max = scaled.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let log_sum = scaled.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    scaled.iter().map(|v| v - log_sum).collect()
}

/// Samples an action from a probability vector with one uniform draw.
pub fn sample_categorical(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (action, p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return action;
        }
    }
    probs.len() - 1
}

/// The non-linear fusion mechanisms (reconstructions used only by the
/// mechanism-comparison experiment):
///
/// * `multiplicative` — softmax both inputs into policies (unit
///   temperature), multiply elementwise, renormalize, return log-policy as
///   the fused utility.
/// * `bayesian-average` — precision-weighted mean of the two sources.
/// * `attention` — per-action prior weights from a softmax over the
///   prior's magnitudes; each action blends its two sources by its weight.
/// * `gated` — hard switch to the prior when `max |u_rl|` is below the
///   gate threshold (the engine has learned nothing yet), else pure
///   `u_rl`.
pub fn fuse_alternative(
    u_rl: &UtilityVector,
    prior: &PriorVector,
    cfg: &FusionConfig,
) -> Result<UtilityVector, FusionError> {
    check_lengths(u_rl, prior)?;
    let values = match cfg.mechanism {
        FusionMechanism::Linear => {
            return fuse_linear(u_rl, prior, cfg.omega);
        }
        FusionMechanism::Multiplicative => {
            let p_rl = softmax_scaled(&u_rl.values, 1.0);
            let p_prior = softmax_scaled(prior.values(), 1.0);
            let product: Vec<f64> = p_rl.iter().zip(&p_prior).map(|(a, b)| a * b).collect();
            let sum: f64 = product.iter().sum();
            product.iter().map(|p| (p / sum).ln()).collect()
        }
        FusionMechanism::BayesianAverage => {
            let tau_rl = cfg.param("bayesian-average", "precision_rl")?;
            let tau_prior = cfg.param("bayesian-average", "precision_prior")?;
            u_rl.values
                .iter()
                .zip(prior.values())
                .map(|(u, p)| (tau_rl * u + tau_prior * p) / (tau_rl + tau_prior))
                .collect()
        }
        FusionMechanism::Attention => {
            let sharpness = cfg.params.get("sharpness").copied().unwrap_or(1.0);
            let magnitudes: Vec<f64> = prior.values().iter().map(|p| p.abs()).collect();
            let weights = softmax_scaled(&magnitudes, sharpness);
            u_rl.values
                .iter()
                .zip(prior.values())
                .zip(&weights)
                .map(|((u, p), w)| (1.0 - w) * u + w * p)
                .collect()
        }
        FusionMechanism::Gated => {
            let threshold = cfg.param("gated", "threshold")?;
            let max_mag = u_rl.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if max_mag < threshold {
                prior.values().to_vec()
            } else {
                u_rl.values.clone()
            }
        }
    };
    Ok(UtilityVector::new(values))
}

/// Dispatches to [`fuse_linear`] or [`fuse_alternative`] per the config.
pub fn fuse(
    u_rl: &UtilityVector,
    prior: &PriorVector,
    cfg: &FusionConfig,
) -> Result<UtilityVector, FusionError> {
    match cfg.mechanism {
        FusionMechanism::Linear => fuse_linear(u_rl, prior, cfg.omega),
        _ => fuse_alternative(u_rl, prior, cfg),
    }
}

/// Everything logged for one simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub trial: usize,
    pub u_rl: UtilityVector,
    pub u_combined: UtilityVector,
    pub probs: Vec<f64>,
    pub action: usize,
    pub outcome: TrialRecord,
}

/// A completed single-agent run: inputs echoed for reproducibility plus
/// the full per-trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRun {
    pub engine_id: String,
    pub prior: PriorVector,
    pub fusion: FusionConfig,
    pub theta: f64,
    pub trial_count: usize,
    pub seed: u64,
    pub records: Vec<TrialLog>,
}

impl SimulationRun {
    /// Fraction of trials choosing an action in the upper half of the
    /// action set: decks C/D for the gambling task, the delayed option for
    /// intertemporal choice.
    pub fn advantageous_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let half = self.action_count() / 2;
        let good = self.records.iter().filter(|r| r.action >= half).count();
        good as f64 / self.records.len() as f64
    }

    /// `(advantageous choices) - (disadvantageous choices)`.
    pub fn net_score(&self) -> i64 {
        let half = self.action_count() / 2;
        let good = self.records.iter().filter(|r| r.action >= half).count() as i64;
        good * 2 - self.records.len() as i64
    }

    /// Per-action choice proportions.
    pub fn action_proportions(&self) -> Vec<f64> {
        let n = self.action_count();
        let mut counts = vec![0usize; n];
        for r in &self.records {
            counts[r.action] += 1;
        }
        counts
            .iter()
            .map(|c| *c as f64 / self.records.len().max(1) as f64)
            .collect()
    }

    /// Fraction of trials whose action differs from the previous trial's.
    pub fn switch_rate(&self) -> f64 {
        if self.records.len() < 2 {
            return 0.0;
        }
        let switches = self
            .records
            .windows(2)
            .filter(|w| w[0].action != w[1].action)
            .count();
        switches as f64 / (self.records.len() - 1) as f64
    }

    pub fn mean_net(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.outcome.net).sum::<f64>() / self.records.len() as f64
    }

    fn action_count(&self) -> usize {
        self.records
            .first()
            .map_or(crate::types::IGT_ACTIONS, |r| r.u_rl.len())
    }
}

/// One agent's live simulation state: engine state plus the two rng
/// streams (0 = action sampling, 1 = environment).
pub struct AgentRunner<'e, E: RlEngine> {
    engine: &'e E,
    state: E::State,
    action_rng: ChaCha8Rng,
    env_rng: ChaCha8Rng,
    trial: usize,
}

impl<'e, E: RlEngine> AgentRunner<'e, E> {
    pub fn new(engine: &'e E, seed: u64) -> Self {
        let mut action_rng = ChaCha8Rng::seed_from_u64(seed);
        action_rng.set_stream(0);
        let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
        env_rng.set_stream(1);
        Self {
            engine,
            state: engine.init_state(),
            action_rng,
            env_rng,
            trial: 0,
        }
    }

    pub fn state(&self) -> &E::State {
        &self.state
    }

    /// Runs one trial: stimulus, utility, fuse, softmax, sample, outcome,
    /// engine update.
    pub fn step<T>(
        &mut self,
        env: &mut T,
        prior: &PriorVector,
        fusion: &FusionConfig,
        theta: f64,
    ) -> Result<TrialLog, FusionError>
    where
        T: Task<Stimulus = E::Stimulus>,
    {
        let trial = self.trial;
        let stimulus = env.stimulus(&mut self.env_rng);
        let u_rl = self.engine.utility(&self.state, &stimulus);
        let u_combined = fuse(&u_rl, prior, fusion)?;
        let probs = softmax_policy(&u_combined, theta);
        let action = sample_categorical(&probs, &mut self.action_rng);
        let outcome = env
            .outcome(&stimulus, action, &mut self.env_rng)
            .map_err(|source| FusionError::Environment { trial, source })?;
        self.state = self.engine.update(&self.state, &stimulus, action, &outcome);
        self.trial += 1;
        Ok(TrialLog {
            trial,
            u_rl,
            u_combined,
            probs,
            action,
            outcome,
        })
    }
}

/// Runs one agent for `trials` trials and collects the full log.
pub fn simulate_agent<E, T>(
    engine: &E,
    env: &mut T,
    prior: &PriorVector,
    fusion: &FusionConfig,
    theta: f64,
    trials: usize,
    seed: u64,
) -> Result<SimulationRun, FusionError>
where
    E: RlEngine,
    T: Task<Stimulus = E::Stimulus>,
{
    fusion.validate()?;
    let mut runner = AgentRunner::new(engine, seed);
    let mut records = Vec::with_capacity(trials);
    for _ in 0..trials {
        records.push(runner.step(env, prior, fusion, theta)?);
    }
    Ok(SimulationRun {
        engine_id: engine.id().to_string(),
        prior: prior.clone(),
        fusion: fusion.clone(),
        theta,
        trial_count: trials,
        seed,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::{OrlEngine, RlEngine};
    use crate::env::IgtEnvironment;
    use crate::types::OrlParameters;
    use proptest::prelude::*;

    fn utility(values: &[f64]) -> UtilityVector {
        UtilityVector::new(values.to_vec())
    }

    fn prior(values: &[f64]) -> PriorVector {
        PriorVector::recentered(values.to_vec())
    }

    #[test]
    fn linear_endpoints_reproduce_each_source() {
        let u = utility(&[4.0, 0.0, 0.0, 0.0]);
        let p = prior(&[-1.0, -1.0, 1.0, 1.0]);
        assert_eq!(fuse_linear(&u, &p, 0.0).unwrap().values, u.values);
        assert_eq!(fuse_linear(&u, &p, 1.0).unwrap().values, p.values());
    }

    #[test]
    fn linear_interior_blend() {
        // Hand evaluation at omega = 0.25: 0.75 * [4,0,0,0] + 0.25 * [0,0,2,2].
        assert_eq!(
            blend(&[4.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 2.0, 2.0], 0.25),
            vec![3.0, 0.0, 0.5, 0.5]
        );
        let u = utility(&[4.0, 0.0, 0.0, 0.0]);
        let p = prior(&[-1.0, -1.0, 1.0, 1.0]);
        let fused = fuse_linear(&u, &p, 0.25).unwrap();
        assert_eq!(fused.values, vec![2.75, -0.25, 0.25, 0.25]);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let u = utility(&[1.0, 2.0]);
        let p = prior(&[0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            fuse_linear(&u, &p, 0.5),
            Err(FusionError::LengthMismatch { utility: 2, prior: 4 })
        ));
    }

    #[test]
    fn softmax_uniform_cases() {
        let equal = softmax_policy(&utility(&[3.0, 3.0, 3.0, 3.0]), 2.5);
        for p in &equal {
            assert!((p - 0.25).abs() < 1e-15);
        }
        let zero_theta = softmax_policy(&utility(&[9.0, -4.0, 0.5, 2.0]), 0.0);
        for p in &zero_theta {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_direct_evaluation() {
        let probs = softmax_policy(&utility(&[1.0, 0.0, 0.0, 0.0]), 1.0);
        let e = std::f64::consts::E;
        let denom = e + 3.0;
        assert!((probs[0] - e / denom).abs() < 1e-12);
        for p in &probs[1..] {
            assert!((p - 1.0 / denom).abs() < 1e-12);
        }
    }

    #[test]
    fn log_softmax_matches_softmax() {
        let u = utility(&[2.0, -1.0, 0.5, 3.0]);
        let probs = softmax_policy(&u, 1.7);
        let logs = log_softmax_policy(&u, 1.7);
        for (p, l) in probs.iter().zip(&logs) {
            assert!((p.ln() - l).abs() < 1e-12);
        }
    }

    #[test]
    fn multiplicative_with_uniform_prior_policy_matches_bare_softmax() {
        let u = utility(&[0.8, -0.3, 0.1, 0.2]);
        let p = PriorVector::zeros(4);
        let cfg = FusionConfig {
            mechanism: FusionMechanism::Multiplicative,
            omega: 0.25,
            params: BTreeMap::new(),
        };
        let fused = fuse_alternative(&u, &p, &cfg).unwrap();
        // Same policy after the downstream softmax; fused utilities are a
        // shifted copy of u.
        let a = softmax_policy(&fused, 1.3);
        let b = softmax_policy(&u, 1.3);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn bayesian_average_with_equal_precisions_is_linear_half() {
        let u = utility(&[0.8, -0.3, 0.1, 0.2]);
        let p = PriorVector::try_new(vec![-1.0, -1.0, 1.0, 1.0]).unwrap();
        let mut params = BTreeMap::new();
        params.insert("precision_rl".into(), 2.0);
        params.insert("precision_prior".into(), 2.0);
        let cfg = FusionConfig {
            mechanism: FusionMechanism::BayesianAverage,
            omega: 0.0,
            params,
        };
        let fused = fuse_alternative(&u, &p, &cfg).unwrap();
        let linear = fuse_linear(&u, &p, 0.5).unwrap();
        for (x, y) in fused.values.iter().zip(&linear.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gate_trips_on_zero_utility() {
        let u = utility(&[0.0; 4]);
        let p = PriorVector::try_new(vec![-1.0, -1.0, 1.0, 1.0]).unwrap();
        let mut params = BTreeMap::new();
        params.insert("threshold".into(), 0.1);
        let cfg = FusionConfig {
            mechanism: FusionMechanism::Gated,
            omega: 0.0,
            params,
        };
        let fused = fuse_alternative(&u, &p, &cfg).unwrap();
        assert_eq!(fused.values, p.values());
        let learned = utility(&[0.5, 0.0, 0.0, 0.0]);
        let fused = fuse_alternative(&learned, &p, &cfg).unwrap();
        assert_eq!(fused.values, learned.values);
    }

    #[test]
    fn missing_mechanism_parameter_is_named() {
        let u = utility(&[0.0; 4]);
        let p = PriorVector::zeros(4);
        let cfg = FusionConfig {
            mechanism: FusionMechanism::Gated,
            omega: 0.0,
            params: BTreeMap::new(),
        };
        let err = fuse_alternative(&u, &p, &cfg).unwrap_err();
        assert!(err.to_string().contains("'threshold'"));
    }

    fn base_params() -> OrlParameters {
        OrlParameters {
            a_rew: 0.4,
            a_pun: 0.3,
            k: 1.0,
            beta_f: 1.0,
            beta_p: 0.5,
            theta: 1.5,
            omega: 0.0,
        }
    }

    #[test]
    fn simulation_is_seed_deterministic() {
        let engine = OrlEngine::new(base_params());
        let p = PriorVector::zeros(4);
        let cfg = FusionConfig::linear(0.25);
        let run = |seed| {
            let mut env = IgtEnvironment::with_defaults();
            simulate_agent(&engine, &mut env, &p, &cfg, 1.5, 100, seed).unwrap()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7).records, run(8).records);
    }

    #[test]
    fn run_summaries() {
        let engine = OrlEngine::new(base_params());
        let p = PriorVector::zeros(4);
        let cfg = FusionConfig::linear(0.0);
        let mut env = IgtEnvironment::with_defaults();
        let run = simulate_agent(&engine, &mut env, &p, &cfg, 1.5, 100, 3).unwrap();
        assert_eq!(run.records.len(), 100);
        let props = run.action_proportions();
        assert!((props.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let adv = run.advantageous_rate();
        assert!((props[2] + props[3] - adv).abs() < 1e-12);
        assert_eq!(run.net_score(), (200.0 * adv - 100.0).round() as i64);
    }

    #[test]
    fn engine_ids_are_stable() {
        assert_eq!(OrlEngine::new(base_params()).id(), "orl");
    }

    proptest! {
        // fuse_linear is affine in omega: swapping arguments and using
        // 1 - omega gives the same blend.
        #[test]
        fn blend_swap_symmetry(
            a in proptest::collection::vec(-10.0f64..10.0, 4),
            b in proptest::collection::vec(-10.0f64..10.0, 4),
            w in 0.0f64..=1.0,
        ) {
            let x = blend(&a, &b, w);
            let y = blend(&b, &a, 1.0 - w);
            for (u, v) in x.iter().zip(&y) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }

        // Softmax output is a strictly positive distribution and invariant
        // to constant utility shifts.
        #[test]
        fn softmax_distribution_and_shift_invariance(
            values in proptest::collection::vec(-50.0f64..50.0, 2..8),
            theta in 0.0f64..5.0,
            shift in -100.0f64..100.0,
        ) {
            let u = UtilityVector::new(values.clone());
            let probs = softmax_policy(&u, theta);
            let sum: f64 = probs.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(probs.iter().all(|p| *p > 0.0));
            let shifted = UtilityVector::new(values.iter().map(|v| v + shift).collect());
            let probs_shifted = softmax_policy(&shifted, theta);
            for (a, b) in probs.iter().zip(&probs_shifted) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        // Argmax monotonicity: when the engine's utilities dominate the
        // prior and omega < 0.5, fusion cannot change the winner.
        #[test]
        fn argmax_stability_under_dominant_engine(
            mut values in proptest::collection::vec(-8.0f64..8.0, 4),
            w in 0.0f64..0.5,
        ) {
            // Force a clear winner with margin larger than the prior span.
            values[0] += 20.0;
            let u = UtilityVector::new(values);
            let p = PriorVector::try_new(vec![-1.0, -1.0, 1.0, 1.0]).unwrap();
            let fused = fuse_linear(&u, &p, w).unwrap();
            prop_assert_eq!(fused.argmax(), u.argmax());
        }
    }
}
