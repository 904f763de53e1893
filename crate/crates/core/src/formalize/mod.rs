//! Translation of structured explanations into logic programs.
//!
//! Two routes produce a [`LogicProgram`]: [`autoformalize`] asks an LLM for a
//! program and parses its answer, [`fallback_formalize`] encodes the text
//! deterministically as propositional clauses.

mod syntax;

pub use syntax::{parse_logic_text, render, snake_case};

use serde::{Deserialize, Serialize};

use crate::error::FormalizeError;
use crate::generation::{GenerationSettings, LlmClient, LlmRequest, TranscriptStore};
use crate::model::{Atom, EntailmentHypothesis, LogicProgram, Rule, StructuredExplanation};

/// Maximum length of a predicate produced by the fallback encoder.
pub const MAX_PREDICATE_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Formalization {
    pub program: LogicProgram,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

const FORMALIZATION_INSTRUCTIONS: &str = "\
Translate the explanation below into a logic program.
- Turn every IF ... THEN ... step into one implication rule written as `then_atom :- if_atom.`
- Turn the premise into one or more ground facts written as `atom.`
- Turn the conclusion into a single query written as `?- atom.`
- Use lowercase snake_case names for predicates and constants. Variables start with an uppercase letter.
- Write one clause per line. Reply with exactly three labeled sections, RULES:, FACTS: and QUERY:, and nothing else.

Example:
Premise: The child pricked the balloon with a needle.
Conclusion: The balloon deflated.
Step 1: IF the child pricked the balloon with a needle, THEN the balloon has a hole.
Step 2: IF the balloon has a hole, THEN the air escapes from the balloon.
Step 3: IF the air escapes from the balloon, THEN the balloon deflated.

RULES:
has_hole(X) :- pricked_with_needle(child, X).
air_escapes(X) :- has_hole(X).
deflated(X) :- air_escapes(X).
FACTS:
pricked_with_needle(child, balloon).
QUERY:
?- deflated(balloon).";

pub fn build_formalization_prompt(
    hypothesis: &EntailmentHypothesis,
    explanation: &StructuredExplanation,
) -> Result<String, FormalizeError> {
    if explanation.steps.is_empty() {
        return Err(FormalizeError::NoSteps);
    }
    let mut prompt = format!(
        "{FORMALIZATION_INSTRUCTIONS}\n\nNow translate the following.\nPremise: {}\nConclusion: {}\n",
        hypothesis.premise, hypothesis.conclusion
    );
    for step in &explanation.steps {
        prompt.push_str(&format!(
            "Step {}: IF {}, THEN {}.\n",
            step.index, step.if_clause, step.then_clause
        ));
    }
    Ok(prompt)
}

/// LLM translation, cached through the transcript store.
pub fn autoformalize(
    hypothesis: &EntailmentHypothesis,
    explanation: &StructuredExplanation,
    client: Option<&dyn LlmClient>,
    store: &TranscriptStore,
    settings: &GenerationSettings,
) -> Result<Formalization, FormalizeError> {
    let prompt = build_formalization_prompt(hypothesis, explanation)?;
    let request = LlmRequest::new(
        &settings.model,
        prompt,
        settings.temperature,
        settings.max_tokens,
    )?;
    let raw = store.complete(client, &request)?;
    let program = parse_logic_text(&raw).map_err(|source| FormalizeError::Parse { source, raw })?;
    let warnings = program.warnings();
    Ok(Formalization { program, warnings })
}

/// Predicate name for a sentence: snake-cased and cut to
/// [`MAX_PREDICATE_LEN`] characters.
pub fn predicate_name(text: &str) -> String {
    let mut name = snake_case(text);
    if name.len() > MAX_PREDICATE_LEN {
        name.truncate(MAX_PREDICATE_LEN);
        while name.ends_with('_') {
            name.pop();
        }
    }
    if name.is_empty() {
        name.push_str("empty_statement");
    }
    name
}

/// Deterministic propositional encoding: the premise becomes a 0-ary fact,
/// each step `IF a THEN b` becomes `b :- a.`, the conclusion becomes the
/// query. Lexical gaps between clauses are left to weak unification.
pub fn fallback_formalize(
    hypothesis: &EntailmentHypothesis,
    explanation: &StructuredExplanation,
) -> Result<Formalization, FormalizeError> {
    if explanation.steps.is_empty() {
        return Err(FormalizeError::NoSteps);
    }
    let mut warnings = Vec::new();
    let rules = explanation
        .steps
        .iter()
        .map(|step| {
            let head = predicate_name(&step.then_clause);
            let body = predicate_name(&step.if_clause);
            if head == body {
                warnings.push(format!(
                    "step {}: self-loop rule `{head} :- {body}.`",
                    step.index
                ));
            }
            Rule {
                head: Atom::prop(head),
                body: vec![Atom::prop(body)],
            }
        })
        .collect();
    let facts = vec![Atom::prop(predicate_name(&hypothesis.premise))];
    let query = Atom::prop(predicate_name(&hypothesis.conclusion));
    let program =
        LogicProgram::new(rules, facts, query).expect("fallback program has one ground fact");
    warnings.extend(program.warnings());
    Ok(Formalization { program, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ExplanationStep;

    fn explanation(steps: &[(&str, &str)]) -> (EntailmentHypothesis, StructuredExplanation) {
        let hypothesis = EntailmentHypothesis {
            example_id: "b".into(),
            candidate_index: 0,
            premise: "The balloon was pricked".into(),
            conclusion: "The balloon deflated".into(),
        };
        let steps = steps
            .iter()
            .enumerate()
            .map(|(i, (a, b))| ExplanationStep {
                index: i + 1,
                if_clause: a.to_string(),
                then_clause: b.to_string(),
                assumption: String::new(),
            })
            .collect();
        let e = StructuredExplanation {
            hypothesis: hypothesis.clone(),
            steps,
            summary: String::new(),
            raw_response: String::new(),
            warnings: vec![],
        };
        (hypothesis, e)
    }

    #[test]
    fn fallback_balloon() {
        let (h, e) = explanation(&[("a balloon is pricked", "the balloon deflates")]);
        let f = fallback_formalize(&h, &e).unwrap();
        assert_eq!(
            render(&f.program),
            "the_balloon_deflates :- a_balloon_is_pricked.\nthe_balloon_was_pricked.\n?- the_balloon_deflated.\n"
        );
        assert!(f.warnings.is_empty());
    }

    #[test]
    fn fallback_self_loop_warns() {
        let (h, e) = explanation(&[("it rains", "It rains.")]);
        let f = fallback_formalize(&h, &e).unwrap();
        assert_eq!(f.program.rules.len(), 1);
        assert!(f.warnings[0].contains("self-loop"));
    }

    #[test]
    fn fallback_one_rule_per_step() {
        let (h, e) = explanation(&[("a", "b"), ("b", "c"), ("c", "d")]);
        let f = fallback_formalize(&h, &e).unwrap();
        assert_eq!(f.program.rules.len(), 3);
        assert!(f.program.rules.iter().all(|r| r.body.len() == 1));
    }

    #[test]
    fn fallback_is_pure() {
        let (h, e) = explanation(&[("x happens", "y happens")]);
        assert_eq!(
            fallback_formalize(&h, &e).unwrap(),
            fallback_formalize(&h, &e).unwrap()
        );
    }

    #[test]
    fn zero_steps_rejected() {
        let (h, e) = explanation(&[]);
        assert!(matches!(
            fallback_formalize(&h, &e),
            Err(FormalizeError::NoSteps)
        ));
        assert!(matches!(
            build_formalization_prompt(&h, &e),
            Err(FormalizeError::NoSteps)
        ));
    }

    #[test]
    fn long_predicates_truncate_cleanly() {
        let long = "word ".repeat(30);
        let name = predicate_name(&long);
        assert!(name.len() <= MAX_PREDICATE_LEN);
        assert!(!name.ends_with('_'));
    }

    #[test]
    fn formalization_prompt_sections() {
        let (h, e) = explanation(&[("a", "b")]);
        let p = build_formalization_prompt(&h, &e).unwrap();
        for label in ["RULES:", "FACTS:", "QUERY:"] {
            assert!(p.contains(label));
        }
        assert_eq!(p, build_formalization_prompt(&h, &e).unwrap());
    }
}
