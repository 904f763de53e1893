//! Explanation features: concept drift, step-wise entailment, linguistic
//! uncertainty, hedge statistics, and assembly of the feature vector.

mod fallback;
mod scorers;
pub mod sidecar;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use fallback::{
    closed_class, density_to_certainty, is_negation, parse_hedge_lexicon, tokenize,
    HedgeDensityCertainty, HeuristicEntailment, Lexicon, LexiconHedgeTagger, LexiconPosTagger,
};
pub use scorers::{
    CertaintyScorer, EntailmentProbs, EntailmentScorer, HedgeLabel, HedgeTagger, Pos, PosTagger,
    ScorerSuite, TaggedToken, WithFallback,
};

use crate::error::{MetricsError, ScorerError};
use crate::logic::consistency;
use crate::model::{
    EntailmentHypothesis, Feature, IbeFeatureVector, ProofResult, StructuredExplanation,
};

/// Which parts of an explanation contribute nouns to drift.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NounScope {
    Clauses,
    #[default]
    ClausesAndAssumptions,
    All,
}

/// How assumption uncertainties are combined before adding the summary's.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyMode {
    #[default]
    Average,
    Sum,
}

impl std::str::FromStr for NounScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clauses" => Ok(NounScope::Clauses),
            "clauses_and_assumptions" => Ok(NounScope::ClausesAndAssumptions),
            "all" => Ok(NounScope::All),
            _ => Err(format!("unknown noun scope `{s}`")),
        }
    }
}

impl std::str::FromStr for UncertaintyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "average" => Ok(UncertaintyMode::Average),
            "sum" => Ok(UncertaintyMode::Sum),
            _ => Err(format!("unknown uncertainty mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsConfig {
    #[serde(default)]
    pub noun_scope: NounScope,
    #[serde(default)]
    pub uncertainty_mode: UncertaintyMode,
}

/// Lowercase lemmas of the tokens tagged as nouns.
pub fn extract_nouns(text: &str, pos: &dyn PosTagger) -> BTreeSet<String> {
    pos.tag(text)
        .into_iter()
        .filter(|t| t.pos == Pos::Noun)
        .map(|t| t.lemma.to_lowercase())
        .collect()
}

fn scoped_texts(explanation: &StructuredExplanation, scope: NounScope) -> Vec<&str> {
    let mut texts = Vec::new();
    for s in &explanation.steps {
        texts.push(s.if_clause.as_str());
        texts.push(s.then_clause.as_str());
        if scope != NounScope::Clauses {
            texts.push(s.assumption.as_str());
        }
    }
    if scope == NounScope::All {
        texts.push(explanation.summary.as_str());
    }
    texts
}

/// Number of explanation nouns found in neither the premise nor the
/// conclusion.
pub fn concept_drift(
    hypothesis: &EntailmentHypothesis,
    explanation: &StructuredExplanation,
    pos: &dyn PosTagger,
    scope: NounScope,
) -> u32 {
    let mut known = extract_nouns(&hypothesis.premise, pos);
    known.extend(extract_nouns(&hypothesis.conclusion, pos));
    let introduced: BTreeSet<String> = scoped_texts(explanation, scope)
        .into_iter()
        .flat_map(|t| extract_nouns(t, pos))
        .collect();
    introduced.difference(&known).count() as u32
}

/// Mean over steps of P(entail) - P(contradiction) between the IF and THEN
/// clauses.
pub fn stepwise_entailment(
    explanation: &StructuredExplanation,
    scorer: &dyn EntailmentScorer,
) -> Result<f64, MetricsError> {
    if explanation.steps.is_empty() {
        return Err(MetricsError::NoSteps);
    }
    let mut total = 0.0;
    for step in &explanation.steps {
        let probs = scorer
            .entail(&step.if_clause, &step.then_clause)
            .and_then(|p| p.check().map(|_| p))
            .map_err(|source| MetricsError::Step {
                step: step.index,
                source,
            })?;
        total += probs.strength();
    }
    Ok((total / explanation.steps.len() as f64).clamp(-1.0, 1.0))
}

fn uncertainty_of(
    sentence: &str,
    scorer: &dyn CertaintyScorer,
    what: &'static str,
) -> Result<f64, MetricsError> {
    let c = scorer
        .certainty(sentence)
        .and_then(|c| {
            if (1.0..=6.0).contains(&c) {
                Ok(c)
            } else {
                Err(ScorerError::Invalid(format!(
                    "certainty {c} outside [1, 6]"
                )))
            }
        })
        .map_err(|source| MetricsError::Scorer { what, source })?;
    Ok(7.0 - c)
}

/// Combined assumption uncertainty plus summary uncertainty, with
/// uncertainty = 7 - certainty. Empty assumptions are skipped; an empty
/// summary contributes 0.
pub fn linguistic_uncertainty(
    explanation: &StructuredExplanation,
    scorer: &dyn CertaintyScorer,
    mode: UncertaintyMode,
) -> Result<f64, MetricsError> {
    if explanation.steps.is_empty() {
        return Err(MetricsError::NoSteps);
    }
    let mut values = Vec::new();
    for step in &explanation.steps {
        if step.assumption.trim().is_empty() {
            continue;
        }
        values.push(uncertainty_of(&step.assumption, scorer, "assumption")?);
    }
    let assumptions = match (mode, values.len()) {
        (_, 0) => 0.0,
        (UncertaintyMode::Average, n) => values.iter().sum::<f64>() / n as f64,
        (UncertaintyMode::Sum, _) => values.iter().sum(),
    };
    let summary = if explanation.summary.trim().is_empty() {
        0.0
    } else {
        uncertainty_of(&explanation.summary, scorer, "summary")?
    };
    Ok(assumptions + summary)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HedgeCounts {
    pub epistemic: u32,
    pub doxatic: u32,
    pub conditional: u32,
    pub tokens: u32,
}

impl HedgeCounts {
    pub fn cues(&self) -> u32 {
        self.epistemic + self.doxatic + self.conditional
    }

    pub fn get(&self, label: HedgeLabel) -> u32 {
        match label {
            HedgeLabel::None => self.tokens - self.cues(),
            HedgeLabel::Epistemic => self.epistemic,
            HedgeLabel::Doxatic => self.doxatic,
            HedgeLabel::Conditional => self.conditional,
        }
    }

    fn add(&mut self, label: HedgeLabel) {
        self.tokens += 1;
        match label {
            HedgeLabel::None => {}
            HedgeLabel::Epistemic => self.epistemic += 1,
            HedgeLabel::Doxatic => self.doxatic += 1,
            HedgeLabel::Conditional => self.conditional += 1,
        }
    }
}

/// Hedge-cue counts over every clause, assumption and the summary.
pub fn classify_hedges(
    explanation: &StructuredExplanation,
    tagger: &dyn HedgeTagger,
) -> Result<HedgeCounts, MetricsError> {
    let mut counts = HedgeCounts::default();
    let mut texts = scoped_texts(explanation, NounScope::All);
    texts.retain(|t| !t.trim().is_empty());
    for text in texts {
        let tags = tagger.tag(text).map_err(|source| MetricsError::Scorer {
            what: "hedge",
            source,
        })?;
        for (_, label) in tags {
            counts.add(label);
        }
    }
    Ok(counts)
}

/// Share of tokens that are hedge cues.
pub fn hedge_ratio(counts: &HedgeCounts) -> Result<f64, MetricsError> {
    if counts.tokens == 0 {
        return Err(MetricsError::ZeroTokens);
    }
    Ok(f64::from(counts.cues()) / f64::from(counts.tokens))
}

/// Depth 1 and no new concepts: the explanation restates the hypothesis.
pub fn is_self_evident(features: &IbeFeatureVector) -> bool {
    features.depth == 1 && features.drift == 0
}

fn tag_feature(feature: Feature) -> impl Fn(MetricsError) -> MetricsError {
    move |e| MetricsError::Feature {
        feature,
        source: Box::new(e),
    }
}

pub fn compute_features(
    hypothesis: &EntailmentHypothesis,
    explanation: &StructuredExplanation,
    proof: &ProofResult,
    scorers: &ScorerSuite,
    config: &MetricsConfig,
) -> Result<IbeFeatureVector, MetricsError> {
    let drift = concept_drift(
        hypothesis,
        explanation,
        scorers.pos.as_ref(),
        config.noun_scope,
    );
    let coherence = stepwise_entailment(explanation, scorers.entailment.as_ref())
        .map_err(tag_feature(Feature::Coherence))?;
    let uncertainty = linguistic_uncertainty(
        explanation,
        scorers.certainty.as_ref(),
        config.uncertainty_mode,
    )
    .map_err(tag_feature(Feature::Uncertainty))?;
    let depth = u32::try_from(proof.depth).expect("proof depth fits in u32");
    Ok(IbeFeatureVector::new(
        consistency(proof),
        depth,
        drift,
        coherence,
        uncertainty,
    )?)
}
