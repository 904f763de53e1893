//! Explanation generation: entailment conversion, prompting, record/replay
//! and response parsing.

mod client;
mod judge;
mod parse;
mod prompt;
mod transcript;

pub use client::{HttpChatClient, LlmClient, ScriptedClient, ScriptedResponse, MAX_ATTEMPTS};
pub use judge::{judge_baseline, parse_verdict};
pub use parse::parse_explanation_response;
pub use prompt::{build_explanation_prompt, build_judge_prompt, question_text, render_explanation};
pub use transcript::{
    fingerprint, normalize_prompt, LlmRequest, StoreMode, TranscriptEntry, TranscriptStore,
};

use serde::{Deserialize, Serialize};

use crate::error::{GenerationError, ModelError};
use crate::model::{CqaExample, Direction, EntailmentHypothesis, StructuredExplanation};

/// Sampling settings shared by generation, formalization and judging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSettings {
    pub model: String,
    pub judge_model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for GenerationSettings {
    fn default() -> Self {
        GenerationSettings {
            model: "gpt-3.5-turbo".into(),
            judge_model: "gpt-3.5-turbo".into(),
            temperature: 0.0,
            max_tokens: 1024,
        }
    }
}

/// Entailment form of one candidate. A cause question takes the candidate
/// as premise and the context as conclusion; an effect question is the
/// reverse.
pub fn to_eev(
    example: &CqaExample,
    candidate_index: usize,
) -> Result<EntailmentHypothesis, ModelError> {
    let candidate =
        example
            .candidates
            .get(candidate_index)
            .ok_or(ModelError::CandidateOutOfRange {
                index: candidate_index,
                len: example.candidates.len(),
            })?;
    let (premise, conclusion) = match example.direction {
        Direction::Cause => (candidate.trim(), example.context.trim()),
        Direction::Effect => (example.context.trim(), candidate.trim()),
    };
    if premise.is_empty() || conclusion.is_empty() {
        return Err(if example.context.trim().is_empty() {
            ModelError::EmptyContext
        } else {
            ModelError::EmptyCandidate(candidate_index)
        });
    }
    Ok(EntailmentHypothesis {
        example_id: example.id.clone(),
        candidate_index,
        premise: premise.to_string(),
        conclusion: conclusion.to_string(),
    })
}

/// One explanation per candidate, in candidate order.
pub fn generate_explanations(
    example: &CqaExample,
    client: Option<&dyn LlmClient>,
    store: &TranscriptStore,
    settings: &GenerationSettings,
) -> Result<Vec<StructuredExplanation>, GenerationError> {
    (0..example.candidates.len())
        .map(|i| {
            generate_one(example, i, client, store, settings).map_err(|e| match e {
                GenerationError::ReplayMiss { fingerprint, .. } => GenerationError::ReplayMiss {
                    fingerprint,
                    candidate: Some(i),
                },
                other => GenerationError::Candidate {
                    candidate: i,
                    source: Box::new(other),
                },
            })
        })
        .collect()
}

fn generate_one(
    example: &CqaExample,
    candidate_index: usize,
    client: Option<&dyn LlmClient>,
    store: &TranscriptStore,
    settings: &GenerationSettings,
) -> Result<StructuredExplanation, GenerationError> {
    let hypothesis = to_eev(example, candidate_index)?;
    let prompt = build_explanation_prompt(example, candidate_index)?;
    let request = LlmRequest::new(
        &settings.model,
        prompt,
        settings.temperature,
        settings.max_tokens,
    )?;
    let raw = store.complete(client, &request)?;
    parse_explanation_response(&raw, &hypothesis)
}
