//! Live prior provider over a plain JSON chat protocol.
//!
//! Runs the complete gambling task with a remote model as the
//! decision-maker: each trial posts the persona prompt plus a short state
//! summary, parses the probability-distribution reply, samples an action
//! from it, and draws the outcome locally. The finished transcript is
//! written to the cache file before returning, so a live run is replayable
//! without further network access.
//!
//! The endpoint only needs to accept `{model, temperature, top_p,
//! messages: [{role, content}, ...]}` and answer with
//! `{choices: [{message: {content: "..."}}]}`; no vendor SDK is assumed.

use super::parse::parse_policy_reply;
use super::transcript::save_transcript;
use super::{PolicyTranscript, PriorError, TrialPolicy};
use crate::env::{IgtEnvironment, IgtPayoffSchedule, LossPlacement};
use crate::types::deck_label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

/// Default per-trial user message; `{trial_index}` and `{history_summary}`
/// are substituted before sending.
pub const TRIAL_TEMPLATE: &str = include_str!("../../assets/prompts/trial_template.txt");

const FORMAT_REMINDER: &str = "Reminder: reply with exactly the format \
{A: p_A, B: p_B, C: p_C, D: p_D} where the four probabilities sum to 1.0.";

/// Connection and sampling settings for the live provider.
#[derive(Debug, Clone)]
pub struct HttpProviderConfig {
    /// Full URL of the chat-completion endpoint.
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub top_p: f64,
    /// Name of the environment variable holding the API key; `None` sends
    /// no authorization header.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    /// Additional attempts after a failed request.
    pub max_retries: u32,
    /// Number of task trials to run against the model.
    pub trial_count: usize,
    /// Transcript cache destination; written before returning.
    pub cache_path: Option<PathBuf>,
}

impl Default for HttpProviderConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: "gpt-4o".into(),
            temperature: 0.5,
            top_p: 0.9,
            api_key_env: Some("COGFUSE_API_KEY".into()),
            timeout_secs: 30,
            max_retries: 3,
            trial_count: 100,
            cache_path: None,
        }
    }
}

fn provider_err(message: impl Into<String>) -> PriorError {
    PriorError::Provider(message.into())
}

fn resolve_api_key(cfg: &HttpProviderConfig) -> Result<Option<String>, PriorError> {
    match &cfg.api_key_env {
        None => Ok(None),
        Some(var) => match std::env::var(var) {
            Ok(key) if !key.is_empty() => Ok(Some(key)),
            _ => Err(provider_err(format!(
                "api key environment variable '{var}' is not set"
            ))),
        },
    }
}

struct ChatClient {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
    max_retries: u32,
}

impl ChatClient {
    fn new(cfg: &HttpProviderConfig) -> Result<Self, PriorError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .build()
            .new_agent();
        Ok(Self {
            agent,
            endpoint: cfg.endpoint.clone(),
            api_key: resolve_api_key(cfg)?,
            max_retries: cfg.max_retries,
        })
    }

    fn complete(&self, body: &serde_json::Value) -> Result<String, PriorError> {
        let mut last_error = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                let backoff = Duration::from_millis(200 * (1 << (attempt - 1).min(4)));
                std::thread::sleep(backoff);
            }
            let mut request = self.agent.post(&self.endpoint);
            if let Some(key) = &self.api_key {
                request = request.header("Authorization", &format!("Bearer {key}"));
            }
            match request.send_json(body) {
                Ok(mut response) => {
                    let value: serde_json::Value = response
                        .body_mut()
                        .read_json()
                        .map_err(|e| provider_err(format!("bad response body: {e}")))?;
                    let content = value
                        .pointer("/choices/0/message/content")
                        .and_then(|c| c.as_str())
                        .ok_or_else(|| {
                            provider_err("response missing choices[0].message.content")
                        })?;
                    return Ok(content.to_string());
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(provider_err(format!(
            "request failed after {} attempts: {last_error}",
            self.max_retries + 1
        )))
    }
}

fn history_summary(history: &[(usize, f64)]) -> String {
    if history.is_empty() {
        return "This is the first trial; there are no outcomes yet.".into();
    }
    let total: f64 = history.iter().map(|(_, net)| net).sum();
    let recent: Vec<String> = history
        .iter()
        .enumerate()
        .rev()
        .take(10)
        .map(|(t, (deck, net))| format!("trial {}: deck {}, net {:+}", t + 1, deck_label(*deck), net))
        .collect();
    format!(
        "Recent outcomes (new to old): {}. Cumulative earnings: {:+}.",
        recent.join("; "),
        total
    )
}

/// Samples one action from a policy using a single uniform draw.
fn sample_policy(policy: &TrialPolicy, rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (action, p) in policy.probs().iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return action;
        }
    }
    policy.len() - 1
}

/// Runs the gambling task with the remote model as decision-maker and
/// returns the recorded policy transcript.
///
/// `persona_prompt` is sent as the system message every trial; the user
/// message comes from `trial_template` with `{trial_index}` (1-based) and
/// `{history_summary}` substituted. Unparseable replies get one re-prompt
/// with a format reminder, then fall back to a uniform policy for that
/// trial with a warning recorded in the transcript metadata.
pub fn http_prior_provider(
    cfg: &HttpProviderConfig,
    persona_id: &str,
    persona_prompt: &str,
    trial_template: &str,
    schedule: IgtPayoffSchedule,
    seed: u64,
) -> Result<PolicyTranscript, PriorError> {
    if cfg.trial_count == 0 {
        return Err(provider_err("trial_count must be positive"));
    }
    let client = ChatClient::new(cfg)?;
    let mut env = IgtEnvironment::new(schedule, LossPlacement::Shuffle)
        .map_err(|e| provider_err(format!("bad schedule: {e}")))?;
    let mut action_rng = ChaCha8Rng::seed_from_u64(seed);
    action_rng.set_stream(0);
    let mut env_rng = ChaCha8Rng::seed_from_u64(seed);
    env_rng.set_stream(1);

    let mut history: Vec<(usize, f64)> = Vec::new();
    let mut trials = Vec::with_capacity(cfg.trial_count);
    let mut metadata = BTreeMap::new();
    metadata.insert("provider".into(), "http".into());
    metadata.insert("endpoint".into(), cfg.endpoint.clone());
    metadata.insert("model".into(), cfg.model.clone());
    metadata.insert("temperature".into(), cfg.temperature.to_string());
    metadata.insert("top_p".into(), cfg.top_p.to_string());
    metadata.insert("seed".into(), seed.to_string());
    let mut fallback_trials = 0usize;

    for trial in 0..cfg.trial_count {
        let user = trial_template
            .replace("{trial_index}", &(trial + 1).to_string())
            .replace("{history_summary}", &history_summary(&history));
        let request = |user_text: &str| {
            json!({
                "model": cfg.model,
                "temperature": cfg.temperature,
                "top_p": cfg.top_p,
                "messages": [
                    {"role": "system", "content": persona_prompt},
                    {"role": "user", "content": user_text},
                ],
            })
        };

        let reply = client.complete(&request(&user))?;
        let policy = match parse_policy_reply(&reply) {
            Ok(policy) => policy,
            Err(first_err) => {
                let reminder = format!("{user}\n\n{FORMAT_REMINDER}");
                let retry_reply = client.complete(&request(&reminder))?;
                match parse_policy_reply(&retry_reply) {
                    Ok(policy) => policy,
                    Err(second_err) => {
                        fallback_trials += 1;
                        metadata.insert(
                            format!("warning.trial.{trial}"),
                            format!(
                                "unparseable reply ({first_err}; retry: {second_err}); \
                                 recorded uniform fallback"
                            ),
                        );
                        TrialPolicy::uniform(4)
                    }
                }
            }
        };

        let action = sample_policy(&policy, &mut action_rng);
        let outcome = env
            .draw(action, &mut env_rng)
            .map_err(|e| provider_err(format!("trial {trial}: {e}")))?;
        history.push((action, outcome.net));
        trials.push(policy);
    }

    if fallback_trials > 0 {
        metadata.insert("fallback_trials".into(), fallback_trials.to_string());
    }
    let transcript = PolicyTranscript::new(persona_id, trials, metadata)?;
    if let Some(path) = &cfg.cache_path {
        save_transcript(&transcript, path)?;
    }
    Ok(transcript)
}
