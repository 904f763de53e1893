//! Synthetic inputs shared by the benchmarks.

use ibe_core::formalize::parse_logic_text;
use ibe_core::generation::render_explanation;
use ibe_core::{EntailmentHypothesis, ExplanationStep, LogicProgram, StructuredExplanation};

const WORDS: [&str; 12] = [
    "balloon", "needle", "air", "pop", "water", "glass", "ice", "heat", "door", "wind", "rain",
    "floor",
];

fn word(i: usize) -> &'static str {
    WORDS[i % WORDS.len()]
}

/// `q{k} :- q{k-1}. ... q1 :- q0. q0.` queried at `q{k}`.
pub fn chain_program(k: usize) -> LogicProgram {
    let mut text = String::new();
    for i in 1..=k {
        text.push_str(&format!("q{i} :- q{}.\n", i - 1));
    }
    text.push_str(&format!("q0.\n?- q{k}.\n"));
    parse_logic_text(&text).expect("chain program parses")
}

/// Layered program: every atom on a layer has `width` alternative rules
/// drawing on the layer below, and only one leaf is a fact. Predicate names
/// reuse a small vocabulary so weak unification finds partial matches.
pub fn layered_program(width: usize, layers: usize) -> LogicProgram {
    let name = |layer: usize, i: usize| format!("{}_{}_l{layer}", word(i), word(i + layer));
    let mut text = String::new();
    for layer in 1..=layers {
        for i in 0..width {
            for j in 0..width {
                text.push_str(&format!(
                    "{} :- {}, {}.\n",
                    name(layer, i),
                    name(layer - 1, j),
                    name(layer - 1, (j + i) % width)
                ));
            }
        }
    }
    text.push_str(&format!("{}.\n", name(0, 0)));
    text.push_str(&format!("?- {}.\n", name(layers, 0)));
    parse_logic_text(&text).expect("layered program parses")
}

pub fn hypothesis() -> EntailmentHypothesis {
    EntailmentHypothesis {
        example_id: "bench".into(),
        candidate_index: 0,
        premise: "The balloon touched the needle.".into(),
        conclusion: "The balloon popped.".into(),
    }
}

/// Step-formatted response text with `steps` steps.
pub fn explanation_response(steps: usize) -> String {
    let explanation = StructuredExplanation {
        hypothesis: hypothesis(),
        steps: (0..steps)
            .map(|i| ExplanationStep {
                index: i + 1,
                if_clause: format!("the {} meets the {}", word(i), word(i + 1)),
                then_clause: format!("the {} may change the {}", word(i + 1), word(i + 2)),
                assumption: format!("a {} usually affects a {}", word(i + 2), word(i + 3)),
            })
            .collect(),
        summary: "The balloon popped because the needle pierced it.".into(),
        raw_response: String::new(),
        warnings: vec![],
    };
    render_explanation(&explanation)
}
