//! Prompt templates for explanation generation and the judge baseline.

use crate::error::ModelError;
use crate::model::{
    validate_example, CqaExample, Direction, EntailmentHypothesis, StructuredExplanation,
};

const EXPLANATION_INSTRUCTIONS: &str = "\
You will be given a causal question and one answer candidate. Explain how the answer candidate could be the correct answer.

Instructions:
1. Rewrite the question and the answer candidate as an entailment with a Premise and a Conclusion. For a cause question the answer candidate is the premise and the context is the conclusion. For an effect question the context is the premise and the answer candidate is the conclusion.
2. Write a step-by-step explanation that connects the premise to the conclusion. Start every step with the header \"Step N:\" (Step 1:, Step 2:, ...) and write the step as one IF ... THEN ... statement.
3. Below each step, write a line that starts with \"Assumption:\" and states the causal or commonsense assumption the step relies on.
4. End with a \"Summary:\" section that sums up the explanation in one or two sentences.";

// Fixed in-context example (cause direction).
const IN_CONTEXT_EXAMPLE: &str = "\
Example:
Context: The balloon deflated.
Question: What was the cause of this?
Answer candidate: The child pricked the balloon with a needle.

Premise: The child pricked the balloon with a needle.
Conclusion: The balloon deflated.

Step 1: IF the child pricked the balloon with a needle, THEN the balloon has a hole.
Assumption: A needle is sharp enough to puncture the rubber of a balloon.
Step 2: IF the balloon has a hole, THEN the air escapes from the balloon.
Assumption: Air under pressure flows out through an opening.
Step 3: IF the air escapes from the balloon, THEN the balloon deflated.
Assumption: A balloon keeps its shape only while it holds air.
Summary: The needle made a hole in the balloon, so the air escaped and the balloon deflated.";

/// Question wording for a causal direction.
pub fn question_text(direction: Direction) -> &'static str {
    match direction {
        Direction::Cause => "What was the cause of this?",
        Direction::Effect => "What happened as a result?",
    }
}

/// Builds the explanation prompt for one candidate. Deterministic in its
/// inputs.
pub fn build_explanation_prompt(
    example: &CqaExample,
    candidate_index: usize,
) -> Result<String, ModelError> {
    let example = validate_example(example.clone())?;
    let candidate =
        example
            .candidates
            .get(candidate_index)
            .ok_or(ModelError::CandidateOutOfRange {
                index: candidate_index,
                len: example.candidates.len(),
            })?;
    Ok(format!(
        "{EXPLANATION_INSTRUCTIONS}\n\n{IN_CONTEXT_EXAMPLE}\n\nNow do the same for the following.\nContext: {}\nQuestion: {}\nAnswer candidate: {}\n",
        example.context.trim(),
        question_text(example.direction),
        candidate.trim(),
    ))
}

/// Renders an explanation back to the step format used in prompts.
pub fn render_explanation(explanation: &StructuredExplanation) -> String {
    let mut out = String::new();
    for step in &explanation.steps {
        out.push_str(&format!(
            "Step {}: IF {}, THEN {}.\n",
            step.index, step.if_clause, step.then_clause
        ));
        if !step.assumption.is_empty() {
            out.push_str(&format!("Assumption: {}\n", step.assumption));
        }
    }
    if !explanation.summary.is_empty() {
        out.push_str(&format!("Summary: {}\n", explanation.summary));
    }
    out
}

/// Prompt asking a judge model which of two explanations is more plausible.
pub fn build_judge_prompt(
    example: &CqaExample,
    first: &StructuredExplanation,
    second: &StructuredExplanation,
) -> String {
    format!(
        "You are given a causal question and two competing explanations, each arguing for a different answer. \
Decide which explanation is more plausible.\n\n\
Context: {}\nQuestion: {}\n\n\
Explanation 1 (answer: {}):\n{}\n\
Explanation 2 (answer: {}):\n{}\n\
Answer with \"Explanation 1\" or \"Explanation 2\" only.\n",
        example.context.trim(),
        question_text(example.direction),
        answer_side(&first.hypothesis, example.direction),
        render_explanation(first),
        answer_side(&second.hypothesis, example.direction),
        render_explanation(second),
    )
}

// The side of the hypothesis that carries the answer candidate.
fn answer_side(hypothesis: &EntailmentHypothesis, direction: Direction) -> &str {
    match direction {
        Direction::Cause => &hypothesis.premise,
        Direction::Effect => &hypothesis.conclusion,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Source;

    fn example() -> CqaExample {
        CqaExample {
            id: "copa-1".into(),
            context: "My body cast a shadow over the grass.".into(),
            direction: Direction::Cause,
            candidates: vec!["The sun was rising.".into(), "The grass was cut.".into()],
            gold_index: 0,
            source: Source::Copa,
        }
    }

    #[test]
    fn prompt_contains_required_markers() {
        let p = build_explanation_prompt(&example(), 0).unwrap();
        for marker in [
            "Step 1:",
            "IF",
            "THEN",
            "Assumption:",
            "Summary:",
            "Premise",
            "Conclusion",
        ] {
            assert!(p.contains(marker), "missing {marker}");
        }
        assert!(p.ends_with("Answer candidate: The sun was rising.\n"));
    }

    #[test]
    fn prompt_is_deterministic() {
        assert_eq!(
            build_explanation_prompt(&example(), 1).unwrap(),
            build_explanation_prompt(&example(), 1).unwrap()
        );
    }

    #[test]
    fn empty_context_propagates_validation_error() {
        let mut ex = example();
        ex.context = " ".into();
        assert_eq!(
            build_explanation_prompt(&ex, 0).unwrap_err(),
            ModelError::EmptyContext
        );
    }

    #[test]
    fn effect_question_wording() {
        let mut ex = example();
        ex.direction = Direction::Effect;
        assert!(build_explanation_prompt(&ex, 0)
            .unwrap()
            .contains("What happened as a result?"));
    }
}
