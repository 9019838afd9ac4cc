//! Transcript file format.
//!
//! Line-oriented UTF-8 text with a versioned header:
//!
//! ```text
//! #cogfuse-transcript v1
//! #persona cbt
//! #meta model=gpt-4o
//! 0<TAB>0.05<TAB>0.05<TAB>0.45<TAB>0.45<TAB>raw={A: 0.05, B: 0.05, C: 0.45, D: 0.45}
//! 1<TAB>...
//! ```
//!
//! Each data record is a 0-based trial index, one probability per action,
//! and an optional trailing `raw=` field holding the provider's verbatim
//! reply. Trial indices must be sequential, and every record must carry
//! the same number of probabilities, each row summing to 1 within 1e-6.

use super::{PolicyTranscript, PriorError, TrialPolicy, POLICY_SUM_TOL};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

const HEADER: &str = "#cogfuse-transcript v1";

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("transcript has no trials")]
    Empty,
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn malformed(line: usize, reason: impl Into<String>) -> TranscriptError {
    TranscriptError::Malformed {
        line,
        reason: reason.into(),
    }
}

/// Parses transcript text. Line numbers in errors are 1-based.
pub fn parse_transcript(text: &str) -> Result<PolicyTranscript, TranscriptError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end() == HEADER => {}
        Some((_, first)) => {
            return Err(malformed(
                1,
                format!("expected header '{HEADER}', found '{first}'"),
            ))
        }
        None => return Err(malformed(1, format!("empty file, expected '{HEADER}'"))),
    }

    let mut persona_id = String::new();
    let mut metadata = BTreeMap::new();
    let mut trials: Vec<TrialPolicy> = Vec::new();
    let mut action_count: Option<usize> = None;

    for (index, raw_line) in lines {
        let line_no = index + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("#persona ") {
            persona_id = rest.trim().to_string();
            continue;
        }
        if let Some(rest) = line.strip_prefix("#meta ") {
            match rest.split_once('=') {
                Some((key, value)) if !key.trim().is_empty() => {
                    metadata.insert(key.trim().to_string(), value.to_string());
                }
                _ => return Err(malformed(line_no, format!("bad metadata entry '{rest}'"))),
            }
            continue;
        }
        if line.starts_with('#') {
            // Unknown comment lines are tolerated for forward compatibility.
            continue;
        }

        let mut fields = line.split('\t');
        let index_field = fields.next().unwrap_or_default();
        let trial_index: usize = index_field
            .parse()
            .map_err(|_| malformed(line_no, format!("bad trial index '{index_field}'")))?;
        if trial_index != trials.len() {
            return Err(malformed(
                line_no,
                format!("trial index {trial_index}, expected {}", trials.len()),
            ));
        }

        let mut probs = Vec::new();
        for field in fields {
            if field.starts_with("raw=") {
                break;
            }
            let p: f64 = field
                .parse()
                .map_err(|_| malformed(line_no, format!("bad probability '{field}'")))?;
            probs.push(p);
        }
        if probs.len() < 2 {
            return Err(malformed(
                line_no,
                format!("found {} probabilities, expected at least 2", probs.len()),
            ));
        }
        if let Some(expected) = action_count {
            if probs.len() != expected {
                return Err(malformed(
                    line_no,
                    format!("found {} probabilities, expected {expected}", probs.len()),
                ));
            }
        } else {
            action_count = Some(probs.len());
        }
        if probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
            return Err(malformed(line_no, "negative or non-finite probability"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > POLICY_SUM_TOL {
            return Err(malformed(
                line_no,
                format!("probabilities sum to {sum}, expected 1 within 1e-6"),
            ));
        }
        trials.push(TrialPolicy::try_new(probs).expect("validated above"));
    }

    if trials.is_empty() {
        return Err(TranscriptError::Empty);
    }
    PolicyTranscript::new(persona_id, trials, metadata)
        .map_err(|_| TranscriptError::Empty)
}

/// Renders a transcript in the v1 file format. Raw replies are not stored
/// on the in-memory type, so written records carry index and probabilities
/// only.
pub fn write_transcript(transcript: &PolicyTranscript) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "#persona {}", transcript.persona_id);
    for (key, value) in &transcript.provider_metadata {
        let value = value.replace(['\n', '\t'], " ");
        let _ = writeln!(out, "#meta {key}={value}");
    }
    for (index, policy) in transcript.trials.iter().enumerate() {
        let _ = write!(out, "{index}");
        for p in policy.probs() {
            let _ = write!(out, "\t{p}");
        }
        let _ = writeln!(out);
    }
    out
}

pub fn save_transcript(transcript: &PolicyTranscript, path: &Path) -> Result<(), PriorError> {
    std::fs::write(path, write_transcript(transcript)).map_err(|source| {
        PriorError::Transcript(TranscriptError::Io {
            path: path.display().to_string(),
            source,
        })
    })
}

pub fn load_transcript(path: &Path) -> Result<PolicyTranscript, PriorError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        PriorError::Transcript(TranscriptError::Io {
            path: path.display().to_string(),
            source,
        })
    })?;
    Ok(parse_transcript(&text)?)
}
