use thiserror::Error;

use crate::model::Feature;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("empty context")]
    EmptyContext,
    #[error("need at least 2 candidates, got {0}")]
    TooFewCandidates(usize),
    #[error("empty candidate at index {0}")]
    EmptyCandidate(usize),
    #[error("gold index out of range: {gold} with {candidates} candidates")]
    GoldOutOfRange { gold: usize, candidates: usize },
    #[error("bad direction `{0}` (expected cause or effect)")]
    BadDirection(String),
    #[error("candidate index {index} out of range ({len} candidates)")]
    CandidateOutOfRange { index: usize, len: usize },
    #[error("program has no facts")]
    NoFacts,
    #[error("fact `{0}` is not ground")]
    NonGroundFact(String),
    #[error("rule `{0}` has an empty body")]
    EmptyRuleBody(String),
    #[error("invalid proof result: {0}")]
    InvalidProof(String),
    #[error("invalid feature vector: {0}")]
    InvalidFeatures(String),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature_order does not match weight keys")]
    WeightMismatch,
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no `Step N:` headers found in response")]
    NoStepsFound,
    #[error("step {step} has neither IF nor THEN marker")]
    MalformedStep { step: usize },
    #[error("empty response")]
    EmptyResponse,
    #[error("replay miss for fingerprint {fingerprint}{}", candidate.map(|c| format!(" (candidate {c})")).unwrap_or_default())]
    ReplayMiss {
        fingerprint: String,
        candidate: Option<usize>,
    },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unparseable judge verdict: {raw:?}")]
    UnparseableVerdict { raw: String },
    #[error("judge needs exactly two explanations, got {0}")]
    JudgeArity(usize),
    #[error("candidate {candidate}: {source}")]
    Candidate {
        candidate: usize,
        #[source]
        source: Box<GenerationError>,
    },
    #[error("transcript store: {0}")]
    Store(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl GenerationError {
    /// True for failures of the remote service rather than of the data.
    pub fn is_upstream(&self) -> bool {
        match self {
            GenerationError::Transport(_) => true,
            GenerationError::Candidate { source, .. } => source.is_upstream(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogicParseError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("no query (`?- atom.`) found")]
    MissingQuery,
    #[error("more than one query (second at line {line})")]
    MultipleQueries { line: usize },
    #[error("no facts found")]
    NoFacts,
    #[error("fact at line {line} is not ground")]
    NonGroundFact { line: usize },
    #[error("empty program text")]
    Empty,
}

#[derive(Debug, Error)]
pub enum FormalizeError {
    #[error("explanation has no steps")]
    NoSteps,
    #[error("{source}; raw response: {raw:?}")]
    Parse {
        #[source]
        source: LogicParseError,
        raw: String,
    },
    #[error(transparent)]
    Generation(#[from] GenerationError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScorerError {
    #[error("scorer capability unavailable: {0}")]
    Unavailable(String),
    #[error("scorer transport: {0}")]
    Transport(String),
    #[error("scorer returned invalid output: {0}")]
    Invalid(String),
    #[error("scorer rejected input: {0}")]
    Rejected(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("explanation has no steps")]
    NoSteps,
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: ScorerError,
    },
    #[error("{what}: {source}")]
    Scorer {
        what: &'static str,
        #[source]
        source: ScorerError,
    },
    #[error("{feature}: {source}")]
    Feature {
        feature: Feature,
        #[source]
        source: Box<MetricsError>,
    },
    #[error("hedge ratio undefined for zero tokens")]
    ZeroTokens,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl MetricsError {
    pub fn is_upstream(&self) -> bool {
        match self {
            MetricsError::Step { source, .. } | MetricsError::Scorer { source, .. } => {
                matches!(
                    source,
                    ScorerError::Transport(_) | ScorerError::Unavailable(_)
                )
            }
            MetricsError::Feature { source, .. } => source.is_upstream(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty feature subset")]
    EmptySubset,
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("feature has zero variance")]
    ZeroVariance,
    #[error("missing feature `{0}`")]
    MissingFeature(Feature),
    #[error("need at least 2 candidates")]
    TooFewCandidates,
    #[error("empty input")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
}
