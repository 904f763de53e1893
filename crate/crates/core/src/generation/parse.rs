//! Post-processing of explanation responses into [`StructuredExplanation`].
//!
//! The expected shape is a sequence of `Step N:` headers, each followed by an
//! `IF ... THEN ...` statement and an optional `Assumption:` line, then a
//! `Summary:` section. Headers may appear mid-line and may be wrapped in
//! markdown bold. Steps that cannot be split into both clauses are dropped
//! with a warning; the parse only fails when no usable step remains.

use std::sync::LazyLock;

use regex::Regex;

use crate::error::GenerationError;
use crate::model::{EntailmentHypothesis, ExplanationStep, StructuredExplanation};

static STEP_HEADER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bstep\s*#?\s*(\d+)\s*[:.)]").expect("valid regex"));
static SUMMARY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:explanation\s+)?summary\s*:").expect("valid regex"));
static ASSUMPTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bassumptions?\s*:").expect("valid regex"));
static IF_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bif\b").expect("valid regex"));
static THEN_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bthen\b").expect("valid regex"));

pub fn parse_explanation_response(
    raw: &str,
    hypothesis: &EntailmentHypothesis,
) -> Result<StructuredExplanation, GenerationError> {
    if raw.trim().is_empty() {
        return Err(GenerationError::EmptyResponse);
    }
    let text = raw.replace("**", "");
    let headers: Vec<(usize, usize, usize)> = STEP_HEADER
        .captures_iter(&text)
        .map(|c| {
            let m = c.get(0).expect("whole match");
            let n = c[1].parse().unwrap_or(0);
            (m.start(), m.end(), n)
        })
        .collect();
    if headers.is_empty() {
        return Err(GenerationError::NoStepsFound);
    }

    let last_body_start = headers.last().expect("nonempty").1;
    let summary_match = SUMMARY.find_at(&text, last_body_start);
    let body_end = summary_match.map_or(text.len(), |m| m.start());

    let mut warnings = Vec::new();
    let mut steps = Vec::new();
    let mut first_malformed = None;
    for (i, &(_, start, number)) in headers.iter().enumerate() {
        let end = headers.get(i + 1).map_or(body_end, |h| h.0);
        let segment = &text[start..end.max(start)];
        match split_step(segment) {
            Some((if_clause, then_clause, assumption)) => {
                if assumption.is_empty() {
                    warnings.push(format!("step {number}: no assumption"));
                }
                steps.push(ExplanationStep {
                    index: steps.len() + 1,
                    if_clause,
                    then_clause,
                    assumption,
                });
            }
            None => {
                first_malformed.get_or_insert(number);
                warnings.push(format!("step {number}: missing IF/THEN clause, dropped"));
            }
        }
    }
    if steps.is_empty() {
        return Err(GenerationError::MalformedStep {
            step: first_malformed.unwrap_or(1),
        });
    }

    let summary = match summary_match {
        Some(m) => clean(&text[m.end()..]),
        None => {
            warnings.push("no summary section".to_string());
            String::new()
        }
    };

    Ok(StructuredExplanation {
        hypothesis: hypothesis.clone(),
        steps,
        summary,
        raw_response: raw.to_string(),
        warnings,
    })
}

/// Splits one step body into (if, then, assumption).
fn split_step(segment: &str) -> Option<(String, String, String)> {
    let (statement, assumption) = match ASSUMPTION.find(segment) {
        Some(m) => (&segment[..m.start()], clean(&segment[m.end()..])),
        None => (segment, String::new()),
    };
    let if_m = IF_MARKER.find(statement)?;
    let then_m = THEN_MARKER.find_at(statement, if_m.end())?;
    let if_clause = clean(&statement[if_m.end()..then_m.start()]);
    let then_clause = clean(&statement[then_m.end()..]);
    if if_clause.is_empty() || then_clause.is_empty() {
        return None;
    }
    Some((if_clause, then_clause, assumption))
}

/// Collapses whitespace and strips surrounding punctuation and quotes.
fn clean(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_matches(|c: char| {
            matches!(c, ',' | '.' | ';' | ':' | '"' | '\'' | '-' | '*') || c.is_whitespace()
        })
        .to_string()
}
