//! Pluggable scorer boundaries and the suite that bundles them.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::ScorerError;

/// Entailment / neutral / contradiction probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntailmentProbs {
    pub entail: f64,
    pub neutral: f64,
    pub contradiction: f64,
}

impl EntailmentProbs {
    pub const SUM_TOLERANCE: f64 = 1e-6;

    pub fn new(entail: f64, neutral: f64, contradiction: f64) -> Result<Self, ScorerError> {
        let p = EntailmentProbs {
            entail,
            neutral,
            contradiction,
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), ScorerError> {
        let parts = [self.entail, self.neutral, self.contradiction];
        if parts.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(ScorerError::Invalid(format!(
                "probability outside [0, 1]: {self:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(ScorerError::Invalid(format!("probabilities sum to {sum}")));
        }
        Ok(())
    }

    /// Entailment minus contradiction, in [-1, 1].
    pub fn strength(&self) -> f64 {
        self.entail - self.contradiction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HedgeLabel {
    None,
    Epistemic,
    Doxatic,
    Conditional,
}

impl HedgeLabel {
    pub const CUES: [HedgeLabel; 3] = [
        HedgeLabel::Epistemic,
        HedgeLabel::Doxatic,
        HedgeLabel::Conditional,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HedgeLabel::None => "none",
            HedgeLabel::Epistemic => "epistemic",
            HedgeLabel::Doxatic => "doxatic",
            HedgeLabel::Conditional => "conditional",
        }
    }
}

impl std::str::FromStr for HedgeLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(HedgeLabel::None),
            "epistemic" => Ok(HedgeLabel::Epistemic),
            "doxatic" | "doxastic" => Ok(HedgeLabel::Doxatic),
            "conditional" => Ok(HedgeLabel::Conditional),
            other => Err(format!("unknown hedge category `{other}`")),
        }
    }
}

/// Coarse part-of-speech classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Noun,
    Verb,
    Aux,
    Adj,
    Adv,
    Det,
    Pron,
    Adp,
    Conj,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub text: String,
    pub pos: Pos,
    pub lemma: String,
}

pub trait EntailmentScorer: Send + Sync {
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentProbs, ScorerError>;
    fn name(&self) -> String;
}

/// Sentence certainty on a 1 (least certain) to 6 (most certain) scale.
pub trait CertaintyScorer: Send + Sync {
    fn certainty(&self, sentence: &str) -> Result<f64, ScorerError>;
    fn name(&self) -> String;
}

pub trait HedgeTagger: Send + Sync {
    fn tag(&self, sentence: &str) -> Result<Vec<(String, HedgeLabel)>, ScorerError>;
    fn name(&self) -> String;
}

pub trait PosTagger: Send + Sync {
    fn tag(&self, sentence: &str) -> Vec<TaggedToken>;
    fn name(&self) -> String;
}

/// The four scorers used by feature extraction.
#[derive(Clone)]
pub struct ScorerSuite {
    pub entailment: Arc<dyn EntailmentScorer>,
    pub certainty: Arc<dyn CertaintyScorer>,
    pub hedge: Arc<dyn HedgeTagger>,
    pub pos: Arc<dyn PosTagger>,
    substitutions: Arc<Mutex<Vec<String>>>,
}

impl ScorerSuite {
    pub fn new(
        entailment: Arc<dyn EntailmentScorer>,
        certainty: Arc<dyn CertaintyScorer>,
        hedge: Arc<dyn HedgeTagger>,
        pos: Arc<dyn PosTagger>,
    ) -> Self {
        ScorerSuite {
            entailment,
            certainty,
            hedge,
            pos,
            substitutions: Arc::default(),
        }
    }

    /// Shared log that [`WithFallback`] wrappers append to.
    pub fn substitution_log(&self) -> Arc<Mutex<Vec<String>>> {
        Arc::clone(&self.substitutions)
    }

    pub fn with_substitution_log(mut self, log: Arc<Mutex<Vec<String>>>) -> Self {
        self.substitutions = log;
        self
    }

    /// Scorers that were swapped for a fallback at runtime.
    pub fn substitutions(&self) -> Vec<String> {
        self.substitutions
            .lock()
            .expect("substitution log poisoned")
            .clone()
    }

    /// `op -> scorer name` for run manifests.
    pub fn describe(&self) -> Vec<(&'static str, String)> {
        vec![
            ("entail", self.entailment.name()),
            ("certainty", self.certainty.name()),
            ("hedge", self.hedge.name()),
            ("pos", self.pos.name()),
        ]
    }
}

impl std::fmt::Debug for ScorerSuite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map().entries(self.describe()).finish()
    }
}

/// Calls `primary` until it reports a capability error, then switches to
/// `fallback` for good and records the switch.
pub struct WithFallback<S: ?Sized> {
    primary: Arc<S>,
    fallback: Arc<S>,
    op: &'static str,
    tripped: AtomicBool,
    log: Arc<Mutex<Vec<String>>>,
}

impl<S: ?Sized> WithFallback<S> {
    pub fn new(
        primary: Arc<S>,
        fallback: Arc<S>,
        op: &'static str,
        log: Arc<Mutex<Vec<String>>>,
    ) -> Self {
        WithFallback {
            primary,
            fallback,
            op,
            tripped: AtomicBool::new(false),
            log,
        }
    }

    fn run<R>(
        &self,
        f: impl Fn(&S) -> Result<R, ScorerError>,
        names: impl Fn() -> (String, String),
    ) -> Result<R, ScorerError> {
        if !self.tripped.load(Ordering::Acquire) {
            match f(&self.primary) {
                Err(ScorerError::Unavailable(reason)) => {
                    if !self.tripped.swap(true, Ordering::AcqRel) {
                        let (p, fb) = names();
                        let note = format!("{}: {p} unavailable ({reason}); using {fb}", self.op);
                        log::warn!("{note}");
                        self.log
                            .lock()
                            .expect("substitution log poisoned")
                            .push(note);
                    }
                }
                other => return other,
            }
        }
        f(&self.fallback)
    }
}

impl EntailmentScorer for WithFallback<dyn EntailmentScorer> {
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentProbs, ScorerError> {
        self.run(
            |s| s.entail(premise, hypothesis),
            || (self.primary.name(), self.fallback.name()),
        )
    }

    fn name(&self) -> String {
        format!(
            "{} (fallback {})",
            self.primary.name(),
            self.fallback.name()
        )
    }
}

impl CertaintyScorer for WithFallback<dyn CertaintyScorer> {
    fn certainty(&self, sentence: &str) -> Result<f64, ScorerError> {
        self.run(
            |s| s.certainty(sentence),
            || (self.primary.name(), self.fallback.name()),
        )
    }

    fn name(&self) -> String {
        format!(
            "{} (fallback {})",
            self.primary.name(),
            self.fallback.name()
        )
    }
}

impl HedgeTagger for WithFallback<dyn HedgeTagger> {
    fn tag(&self, sentence: &str) -> Result<Vec<(String, HedgeLabel)>, ScorerError> {
        self.run(
            |s| s.tag(sentence),
            || (self.primary.name(), self.fallback.name()),
        )
    }

    fn name(&self) -> String {
        format!(
            "{} (fallback {})",
            self.primary.name(),
            self.fallback.name()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    struct Fixed(Result<f64, ScorerError>, AtomicUsize);

    impl CertaintyScorer for Fixed {
        fn certainty(&self, _: &str) -> Result<f64, ScorerError> {
            self.1.fetch_add(1, Ordering::SeqCst);
            self.0.clone()
        }
        fn name(&self) -> String {
            "fixed".into()
        }
    }

    #[test]
    fn probs_validate() {
        assert!(EntailmentProbs::new(0.9, 0.05, 0.05).is_ok());
        assert!(EntailmentProbs::new(0.9, 0.2, 0.05).is_err());
        assert!(EntailmentProbs::new(1.1, -0.05, -0.05).is_err());
        assert_eq!(
            EntailmentProbs::new(0.2, 0.1, 0.7).unwrap().strength(),
            0.2 - 0.7
        );
    }

    #[test]
    fn fallback_trips_once_on_capability_error() {
        let log = Arc::new(Mutex::new(Vec::new()));
        let primary = Arc::new(Fixed(
            Err(ScorerError::Unavailable("disabled".into())),
            AtomicUsize::new(0),
        ));
        let w = WithFallback::<dyn CertaintyScorer>::new(
            primary.clone(),
            Arc::new(Fixed(Ok(4.0), AtomicUsize::new(0))),
            "certainty",
            log.clone(),
        );
        assert_eq!(w.certainty("a").unwrap(), 4.0);
        assert_eq!(w.certainty("b").unwrap(), 4.0);
        assert_eq!(primary.1.load(Ordering::SeqCst), 1);
        assert_eq!(log.lock().unwrap().len(), 1);
    }

    #[test]
    fn other_errors_propagate() {
        let w = WithFallback::<dyn CertaintyScorer>::new(
            Arc::new(Fixed(
                Err(ScorerError::Transport("down".into())),
                AtomicUsize::new(0),
            )),
            Arc::new(Fixed(Ok(4.0), AtomicUsize::new(0))),
            "certainty",
            Arc::default(),
        );
        assert!(matches!(w.certainty("a"), Err(ScorerError::Transport(_))));
    }

    #[test]
    fn hedge_label_parsing() {
        assert_eq!(
            "Doxastic".parse::<HedgeLabel>().unwrap(),
            HedgeLabel::Doxatic
        );
        assert!("vague".parse::<HedgeLabel>().is_err());
    }
}
