//! Domain types shared by every stage of the pipeline.
//!
//! Types are plain data with validating constructors. Anything that arrives
//! through serde goes through the same validation via `try_from`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Whether a question asks for the cause or the effect of its context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Cause,
    Effect,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Cause => "cause",
            Direction::Effect => "effect",
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "cause" => Ok(Direction::Cause),
            "effect" => Ok(Direction::Effect),
            other => Err(ModelError::BadDirection(other.to_string())),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Copa,
    Ecare,
    Custom,
}

/// A multiple-choice causal question. Candidate indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCqaExample")]
pub struct CqaExample {
    pub id: String,
    pub context: String,
    pub direction: Direction,
    pub candidates: Vec<String>,
    pub gold_index: usize,
    pub source: Source,
}

#[derive(Deserialize)]
struct RawCqaExample {
    id: String,
    context: String,
    direction: Direction,
    candidates: Vec<String>,
    gold_index: usize,
    source: Source,
}

impl TryFrom<RawCqaExample> for CqaExample {
    type Error = ModelError;

    fn try_from(raw: RawCqaExample) -> Result<Self, Self::Error> {
        validate_example(CqaExample {
            id: raw.id,
            context: raw.context,
            direction: raw.direction,
            candidates: raw.candidates,
            gold_index: raw.gold_index,
            source: raw.source,
        })
    }
}

/// Checks every invariant of [`CqaExample`] and hands the example back
/// unchanged, or reports the first violation.
pub fn validate_example(example: CqaExample) -> Result<CqaExample, ModelError> {
    if example.context.trim().is_empty() {
        return Err(ModelError::EmptyContext);
    }
    if example.candidates.len() < 2 {
        return Err(ModelError::TooFewCandidates(example.candidates.len()));
    }
    if let Some(i) = example.candidates.iter().position(|c| c.trim().is_empty()) {
        return Err(ModelError::EmptyCandidate(i));
    }
    if example.gold_index >= example.candidates.len() {
        return Err(ModelError::GoldOutOfRange {
            gold: example.gold_index,
            candidates: example.candidates.len(),
        });
    }
    Ok(example)
}

/// Premise/conclusion form of one question-candidate pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntailmentHypothesis {
    pub example_id: String,
    pub candidate_index: usize,
    pub premise: String,
    pub conclusion: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationStep {
    /// 1-based.
    pub index: usize,
    pub if_clause: String,
    pub then_clause: String,
    pub assumption: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredExplanation {
    pub hypothesis: EntailmentHypothesis,
    pub steps: Vec<ExplanationStep>,
    pub summary: String,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl StructuredExplanation {
    pub fn assumptions(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.assumption.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "lowercase")]
pub enum Term {
    Constant(String),
    Variable(String),
}

impl Term {
    /// Classic definite-clause convention: an initial uppercase letter (or
    /// underscore) marks a variable.
    pub fn from_name(name: &str) -> Term {
        match name.chars().next() {
            Some(c) if c.is_uppercase() || c == '_' => Term::Variable(name.to_string()),
            _ => Term::Constant(name.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Constant(n) | Term::Variable(n) => n,
        }
    }

    pub fn is_variable(&self) -> bool {
        matches!(self, Term::Variable(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Atom {
    pub predicate: String,
    #[serde(default)]
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn prop(predicate: impl Into<String>) -> Self {
        Atom::new(predicate, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_ground(&self) -> bool {
        !self.args.iter().any(Term::is_variable)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(a.name())?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<Atom>,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, b) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str(".")
    }
}

/// Rules, ground facts and a single query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawLogicProgram")]
pub struct LogicProgram {
    pub rules: Vec<Rule>,
    pub facts: Vec<Atom>,
    pub query: Atom,
}

#[derive(Deserialize)]
struct RawLogicProgram {
    rules: Vec<Rule>,
    facts: Vec<Atom>,
    query: Atom,
}

impl TryFrom<RawLogicProgram> for LogicProgram {
    type Error = ModelError;

    fn try_from(raw: RawLogicProgram) -> Result<Self, Self::Error> {
        LogicProgram::new(raw.rules, raw.facts, raw.query)
    }
}

impl LogicProgram {
    pub fn new(rules: Vec<Rule>, facts: Vec<Atom>, query: Atom) -> Result<Self, ModelError> {
        if facts.is_empty() {
            return Err(ModelError::NoFacts);
        }
        if let Some(f) = facts.iter().find(|f| !f.is_ground()) {
            return Err(ModelError::NonGroundFact(f.to_string()));
        }
        if let Some(r) = rules.iter().find(|r| r.body.is_empty()) {
            return Err(ModelError::EmptyRuleBody(r.head.to_string()));
        }
        Ok(LogicProgram {
            rules,
            facts,
            query,
        })
    }

    /// Non-fatal findings: a query that is literally one of the facts.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.facts.contains(&self.query) {
            out.push(format!(
                "query `{}` is stated verbatim as a fact",
                self.query
            ));
        }
        out
    }
}

/// Reference into a [`LogicProgram`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "lowercase")]
pub enum ClauseRef {
    Fact(usize),
    Rule(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProofDiagnostics {
    pub threshold: f64,
    /// Distinct rules used by the accepted proof, before flooring.
    pub rule_count: usize,
    pub expansions: usize,
    pub depth_cutoff: bool,
    pub budget_exhausted: bool,
}

/// Outcome of a proof attempt.
///
/// A satisfied result always carries a nonempty chain whose length equals
/// `depth`. When the query is closed by a fact alone the chain holds that
/// fact, so the depth floors at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProofResult")]
pub struct ProofResult {
    pub satisfied: bool,
    pub proof_score: f64,
    pub depth: usize,
    pub chain: Vec<ClauseRef>,
    pub diagnostics: ProofDiagnostics,
}

#[derive(Deserialize)]
struct RawProofResult {
    satisfied: bool,
    proof_score: f64,
    depth: usize,
    chain: Vec<ClauseRef>,
    diagnostics: ProofDiagnostics,
}

impl TryFrom<RawProofResult> for ProofResult {
    type Error = ModelError;

    fn try_from(r: RawProofResult) -> Result<Self, Self::Error> {
        ProofResult::new(r.satisfied, r.proof_score, r.depth, r.chain, r.diagnostics)
    }
}

impl ProofResult {
    pub fn new(
        satisfied: bool,
        proof_score: f64,
        depth: usize,
        chain: Vec<ClauseRef>,
        diagnostics: ProofDiagnostics,
    ) -> Result<Self, ModelError> {
        if satisfied {
            if depth == 0 || depth != chain.len() {
                return Err(ModelError::InvalidProof(format!(
                    "satisfied proof needs depth = |chain| >= 1 (depth {depth}, chain {})",
                    chain.len()
                )));
            }
            if !(proof_score > diagnostics.threshold && proof_score <= 1.0) {
                return Err(ModelError::InvalidProof(format!(
                    "satisfied proof score {proof_score} not in ({}, 1]",
                    diagnostics.threshold
                )));
            }
        } else if depth != 0 || !chain.is_empty() || proof_score != 0.0 {
            return Err(ModelError::InvalidProof(
                "unsatisfied proof must have depth 0, empty chain and score 0".into(),
            ));
        }
        Ok(ProofResult {
            satisfied,
            proof_score,
            depth,
            chain,
            diagnostics,
        })
    }

    pub fn unsatisfied(diagnostics: ProofDiagnostics) -> Self {
        ProofResult {
            satisfied: false,
            proof_score: 0.0,
            depth: 0,
            chain: Vec::new(),
            diagnostics,
        }
    }
}

/// The five selection criteria, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Consistency,
    Depth,
    Drift,
    Coherence,
    Uncertainty,
}

impl Feature {
    pub const ALL: [Feature; 5] = [
        Feature::Consistency,
        Feature::Depth,
        Feature::Drift,
        Feature::Coherence,
        Feature::Uncertainty,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Consistency => "consistency",
            Feature::Depth => "depth",
            Feature::Drift => "drift",
            Feature::Coherence => "coherence",
            Feature::Uncertainty => "uncertainty",
        }
    }

    /// Row label used in ablation tables.
    pub fn label(self) -> &'static str {
        match self {
            Feature::Consistency => "Consistency",
            Feature::Depth => "Depth (Parsimony)",
            Feature::Drift => "Drift (Parsimony)",
            Feature::Coherence => "Coherence",
            Feature::Uncertainty => "Linguistic Uncertainty",
        }
    }

    pub fn short_label(self) -> &'static str {
        match self {
            Feature::Consistency => "Consistency",
            Feature::Depth => "Depth",
            Feature::Drift => "Drift",
            Feature::Coherence => "Coherence",
            Feature::Uncertainty => "Linguistic Uncertainty",
        }
    }
}

impl std::str::FromStr for Feature {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| ModelError::UnknownFeature(s.to_string()))
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFeatureVector")]
pub struct IbeFeatureVector {
    pub consistency: u8,
    pub depth: u32,
    pub drift: u32,
    pub coherence: f64,
    pub uncertainty: f64,
}

#[derive(Deserialize)]
struct RawFeatureVector {
    consistency: u8,
    depth: u32,
    drift: u32,
    coherence: f64,
    uncertainty: f64,
}

impl TryFrom<RawFeatureVector> for IbeFeatureVector {
    type Error = ModelError;

    fn try_from(r: RawFeatureVector) -> Result<Self, Self::Error> {
        IbeFeatureVector::new(r.consistency, r.depth, r.drift, r.coherence, r.uncertainty)
    }
}

impl IbeFeatureVector {
    pub fn new(
        consistency: u8,
        depth: u32,
        drift: u32,
        coherence: f64,
        uncertainty: f64,
    ) -> Result<Self, ModelError> {
        if consistency > 1 {
            return Err(ModelError::InvalidFeatures(format!(
                "consistency must be 0 or 1, got {consistency}"
            )));
        }
        if consistency == 0 && depth != 0 {
            return Err(ModelError::InvalidFeatures(
                "inconsistent explanation with nonzero depth".into(),
            ));
        }
        if !(-1.0..=1.0).contains(&coherence) {
            return Err(ModelError::InvalidFeatures(format!(
                "coherence {coherence} outside [-1, 1]"
            )));
        }
        if !uncertainty.is_finite() || uncertainty < 0.0 {
            return Err(ModelError::InvalidFeatures(format!(
                "uncertainty {uncertainty} must be finite and non-negative"
            )));
        }
        Ok(IbeFeatureVector {
            consistency,
            depth,
            drift,
            coherence,
            uncertainty,
        })
    }

    pub fn get(&self, feature: Feature) -> f64 {
        match feature {
            Feature::Consistency => f64::from(self.consistency),
            Feature::Depth => f64::from(self.depth),
            Feature::Drift => f64::from(self.drift),
            Feature::Coherence => self.coherence,
            Feature::Uncertainty => self.uncertainty,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub candidate_index: usize,
    pub features: IbeFeatureVector,
    pub plausibility: f64,
    pub selected: bool,
}

/// Per-feature mean and standard deviation from the training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: BTreeMap<String, f64>,
    pub stds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// The normal equations were singular and a 1e-8 ridge was added.
    pub ridge_applied: bool,
    /// Every label was identical; the fit collapsed to the intercept.
    pub constant_labels: bool,
    pub n_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLinearModel")]
pub struct LinearModel {
    pub feature_order: Vec<Feature>,
    pub weights: BTreeMap<Feature, f64>,
    pub intercept: f64,
    #[serde(default)]
    pub standardization: Option<Standardization>,
    #[serde(default)]
    pub training_fingerprint: String,
    #[serde(default)]
    pub diagnostics: FitDiagnostics,
}

#[derive(Deserialize)]
struct RawLinearModel {
    feature_order: Vec<Feature>,
    weights: BTreeMap<Feature, f64>,
    intercept: f64,
    #[serde(default)]
    standardization: Option<Standardization>,
    #[serde(default)]
    training_fingerprint: String,
    #[serde(default)]
    diagnostics: FitDiagnostics,
}

impl TryFrom<RawLinearModel> for LinearModel {
    type Error = ModelError;

    fn try_from(r: RawLinearModel) -> Result<Self, Self::Error> {
        let model = LinearModel {
            feature_order: r.feature_order,
            weights: r.weights,
            intercept: r.intercept,
            standardization: r.standardization,
            training_fingerprint: r.training_fingerprint,
            diagnostics: r.diagnostics,
        };
        model.check()?;
        Ok(model)
    }
}

impl LinearModel {
    pub fn new(weights: Vec<(Feature, f64)>, intercept: f64) -> Result<Self, ModelError> {
        let model = LinearModel {
            feature_order: weights.iter().map(|(f, _)| *f).collect(),
            weights: weights.into_iter().collect(),
            intercept,
            standardization: None,
            training_fingerprint: String::new(),
            diagnostics: FitDiagnostics::default(),
        };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), ModelError> {
        let mut order: Vec<_> = self.feature_order.clone();
        order.sort();
        order.dedup();
        let keys: Vec<_> = self.weights.keys().copied().collect();
        if order.len() != self.feature_order.len() || order != keys {
            return Err(ModelError::WeightMismatch);
        }
        Ok(())
    }
}

/// Significance marker for a p-value: `***` below 0.001, `**` below 0.01,
/// `*` below 0.05.
pub fn significance_marker(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionEntry {
    pub feature: Feature,
    pub coefficient: f64,
    pub intercept: f64,
    pub std_error: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub significance: String,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub standardized: bool,
    pub entries: Vec<RegressionEntry>,
    /// Features left out of the report, with the reason.
    pub skipped: Vec<(Feature, String)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(candidates: &[&str], gold: usize) -> CqaExample {
        CqaExample {
            id: "t1".into(),
            context: "The man broke his toe.".into(),
            direction: Direction::Cause,
            candidates: candidates.iter().map(|s| s.to_string()).collect(),
            gold_index: gold,
            source: Source::Custom,
        }
    }

    #[test]
    fn minimal_valid_example() {
        let ex = example(
            &[
                "He dropped a hammer on his foot.",
                "He got a hole in his sock.",
            ],
            1,
        );
        assert_eq!(validate_example(ex.clone()).unwrap(), ex);
    }

    #[test]
    fn gold_out_of_range() {
        let err = validate_example(example(&["a", "b"], 2)).unwrap_err();
        assert!(err.to_string().contains("gold index out of range"), "{err}");
    }

    #[test]
    fn empty_candidate() {
        let err = validate_example(example(&["a", "  "], 0)).unwrap_err();
        assert!(err.to_string().contains("empty candidate"), "{err}");
    }

    #[test]
    fn bad_direction_rejected_on_decode() {
        let json = r#"{"id":"x","context":"c","direction":"reason","candidates":["a","b"],"gold_index":0,"source":"copa"}"#;
        let err = serde_json::from_str::<CqaExample>(json).unwrap_err();
        assert!(err.to_string().contains("reason"), "{err}");
    }

    #[test]
    fn satisfied_proof_with_zero_depth_rejected() {
        let diag = ProofDiagnostics {
            threshold: 0.13,
            ..Default::default()
        };
        assert!(ProofResult::new(true, 0.9, 0, vec![], diag.clone()).is_err());
        assert!(ProofResult::new(true, 0.9, 1, vec![ClauseRef::Rule(0)], diag.clone()).is_ok());
        assert!(ProofResult::new(true, 0.1, 1, vec![ClauseRef::Rule(0)], diag).is_err());
    }

    #[test]
    fn proof_result_decode_validates() {
        let json = r#"{"satisfied":true,"proof_score":0.5,"depth":0,"chain":[],"diagnostics":{"threshold":0.13,"rule_count":0,"expansions":1,"depth_cutoff":false,"budget_exhausted":false}}"#;
        assert!(serde_json::from_str::<ProofResult>(json).is_err());
    }

    #[test]
    fn features_reject_depth_without_consistency() {
        assert!(IbeFeatureVector::new(0, 2, 0, 0.0, 1.0).is_err());
        assert!(IbeFeatureVector::new(1, 2, 0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn significance_thresholds() {
        assert_eq!(significance_marker(0.0005), "***");
        assert_eq!(significance_marker(0.001), "**");
        assert_eq!(significance_marker(0.049), "*");
        assert_eq!(significance_marker(0.05), "");
    }

    #[test]
    fn linear_model_keys_must_match_order() {
        let json = r#"{"feature_order":["depth"],"weights":{"drift":1.0},"intercept":0.0}"#;
        assert!(serde_json::from_str::<LinearModel>(json).is_err());
    }

    #[test]
    fn term_case_convention() {
        assert!(Term::from_name("X").is_variable());
        assert!(Term::from_name("_tmp").is_variable());
        assert!(!Term::from_name("balloon").is_variable());
    }
}
