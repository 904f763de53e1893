//! LLM-as-a-judge comparison baseline.

use std::sync::LazyLock;

use regex::Regex;

use super::client::LlmClient;
use super::prompt::build_judge_prompt;
use super::transcript::{LlmRequest, TranscriptStore};
use super::GenerationSettings;
use crate::error::GenerationError;
use crate::model::{CqaExample, StructuredExplanation};

static NAMED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)explanation\s*#?\s*([12])\b").expect("valid regex"));
static DIGIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b([12])\b").expect("valid regex"));
static ORDINAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(first|second)\b").expect("valid regex"));

/// Reads a 0-based choice out of a judge response.
///
/// Tried in order: the first `Explanation N` mention, a lone `1`/`2` digit,
/// a lone `first`/`second`.
pub fn parse_verdict(raw: &str) -> Result<usize, GenerationError> {
    let unparseable = || GenerationError::UnparseableVerdict {
        raw: raw.to_string(),
    };
    if let Some(c) = NAMED.captures(raw) {
        return Ok(if &c[1] == "1" { 0 } else { 1 });
    }
    let digits: Vec<&str> = DIGIT
        .captures_iter(raw)
        .map(|c| c.get(1).expect("group").as_str())
        .collect();
    if !digits.is_empty() && digits.iter().all(|d| *d == digits[0]) {
        return Ok(if digits[0] == "1" { 0 } else { 1 });
    }
    let ordinals: Vec<String> = ORDINAL
        .captures_iter(raw)
        .map(|c| c[1].to_lowercase())
        .collect();
    if !ordinals.is_empty() && ordinals.iter().all(|o| *o == ordinals[0]) {
        return Ok(if ordinals[0] == "first" { 0 } else { 1 });
    }
    Err(unparseable())
}

/// Asks the judge model to pick the more plausible of two explanations.
pub fn judge_baseline(
    example: &CqaExample,
    explanations: &[StructuredExplanation],
    client: Option<&dyn LlmClient>,
    store: &TranscriptStore,
    settings: &GenerationSettings,
) -> Result<usize, GenerationError> {
    let [first, second] = explanations else {
        return Err(GenerationError::JudgeArity(explanations.len()));
    };
    let prompt = build_judge_prompt(example, first, second);
    let request = LlmRequest::new(
        &settings.judge_model,
        prompt,
        settings.temperature,
        settings.max_tokens,
    )?;
    let raw = store.complete(client, &request)?;
    parse_verdict(&raw)
}
