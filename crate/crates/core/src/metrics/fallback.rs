//! Lexicon-based scorers that run without any model.
//!
//! These are heuristics: a noun/verb lexicon with suffix rules for POS, a
//! cue lexicon for hedges, hedge density for certainty, and token overlap
//! plus embedding cosine for entailment. Reports label them as fallbacks.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::{Arc, LazyLock};

use regex::Regex;

use super::scorers::{
    CertaintyScorer, EntailmentProbs, EntailmentScorer, HedgeLabel, HedgeTagger, Pos, PosTagger,
    ScorerSuite, TaggedToken,
};
use crate::error::ScorerError;
use crate::logic::{cosine, EmbeddingTable};

static TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[A-Za-z]+(?:'[A-Za-z]+)*|[0-9]+").unwrap());

/// Word tokens of a sentence, surface form preserved.
pub fn tokenize(text: &str) -> Vec<&str> {
    TOKEN.find_iter(text).map(|m| m.as_str()).collect()
}

const DETERMINERS: &str =
    "the a an this that these those some any no every each all both either neither another \
                           such what which whose my your his her its our their";
const PRONOUNS: &str = "i me you he him she it we us they them myself yourself himself herself itself ourselves \
                        themselves someone something anyone anything everyone everything nobody nothing who whom \
                        mine yours hers ours theirs";
const ADPOSITIONS: &str = "in on at by for from with without about of to into onto over under through during before \
                           after above below between among against across along around behind beyond near off out \
                           up down upon within toward towards since until than";
const CONJUNCTIONS: &str =
    "and or but nor so yet because although though while if unless whether when whenever \
                            where once as";
const AUXILIARIES: &str = "is am are was were be been being has have had having do does did will would shall should \
                           can could may might must isn't aren't wasn't weren't hasn't haven't hadn't don't doesn't \
                           didn't won't wouldn't can't couldn't shouldn't cannot";
const ADVERBS: &str =
    "not never very too also just only still already even then there here now again ever always \
                       often sometimes quite rather almost soon later however therefore thus";
const NEGATIONS: &str = "not no never nothing none nobody neither nor cannot without";

static CLOSED_CLASS: LazyLock<HashMap<&'static str, Pos>> = LazyLock::new(|| {
    let mut m = HashMap::new();
    // Later lists win for words listed twice.
    for (words, pos) in [
        (ADVERBS, Pos::Adv),
        (ADPOSITIONS, Pos::Adp),
        (CONJUNCTIONS, Pos::Conj),
        (DETERMINERS, Pos::Det),
        (PRONOUNS, Pos::Pron),
        (AUXILIARIES, Pos::Aux),
    ] {
        for w in words.split_whitespace() {
            m.insert(w, pos);
        }
    }
    m
});

static IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("children", "child"),
    ("men", "man"),
    ("women", "woman"),
    ("people", "person"),
    ("feet", "foot"),
    ("teeth", "tooth"),
    ("mice", "mouse"),
    ("leaves", "leaf"),
    ("knives", "knife"),
    ("wives", "wife"),
    ("lives", "life"),
    ("shelves", "shelf"),
    ("fungi", "fungus"),
];

const NOUN_SUFFIXES: &[&str] = &[
    "tion", "sion", "ment", "ness", "ity", "ance", "ence", "ship", "ism",
];
const ADJ_SUFFIXES: &[&str] = &["ous", "ful", "able", "ible", "ive", "less", "al", "ic"];

/// Closed-class part of speech, if the word is a function word.
pub fn closed_class(word: &str) -> Option<Pos> {
    CLOSED_CLASS.get(word).copied()
}

pub fn is_negation(word: &str) -> bool {
    word.ends_with("n't") || NEGATIONS.split_whitespace().any(|n| n == word)
}

fn word_list(text: &str) -> HashSet<String> {
    text.lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(str::to_lowercase)
        .collect()
}

/// Parses `token<TAB>category` lines; `#` starts a comment line.
pub fn parse_hedge_lexicon(text: &str) -> Result<HashMap<String, HedgeLabel>, String> {
    let mut out = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let (token, cat) = line
            .split_once('\t')
            .ok_or_else(|| format!("hedge lexicon line {}: expected token<TAB>category", i + 1))?;
        let label: HedgeLabel = cat
            .parse()
            .map_err(|e| format!("hedge lexicon line {}: {e}", i + 1))?;
        if label == HedgeLabel::None {
            continue;
        }
        out.insert(token.trim().to_lowercase(), label);
    }
    Ok(out)
}

/// Word lists backing the fallback scorers.
#[derive(Debug, Clone)]
pub struct Lexicon {
    nouns: HashSet<String>,
    verbs: HashSet<String>,
    hedges: HashMap<String, HedgeLabel>,
}

static BUNDLED: LazyLock<Arc<Lexicon>> = LazyLock::new(|| {
    Arc::new(Lexicon {
        nouns: word_list(include_str!("../../data/nouns.txt")),
        verbs: word_list(include_str!("../../data/verbs.txt")),
        hedges: parse_hedge_lexicon(include_str!("../../data/hedge_cues.tsv"))
            .expect("bundled hedge lexicon"),
    })
});

impl Lexicon {
    pub fn bundled() -> Arc<Lexicon> {
        Arc::clone(&BUNDLED)
    }

    /// The bundled word lists with a hedge lexicon read from `path`.
    pub fn with_hedge_file(path: &Path) -> Result<Lexicon, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Lexicon {
            hedges: parse_hedge_lexicon(&text)?,
            ..(*BUNDLED).as_ref().clone()
        })
    }

    pub fn hedge(&self, word: &str) -> HedgeLabel {
        self.hedges
            .get(&word.to_lowercase())
            .copied()
            .unwrap_or(HedgeLabel::None)
    }

    /// Singular form if `word` is a known noun or a regular plural of one.
    pub fn noun_lemma(&self, word: &str) -> Option<String> {
        if let Some((_, lemma)) = IRREGULAR_PLURALS.iter().find(|(p, _)| *p == word) {
            return Some(lemma.to_string());
        }
        if self.nouns.contains(word) {
            return Some(word.to_string());
        }
        let candidates = [
            word.strip_suffix("ies").map(|s| format!("{s}y")),
            word.strip_suffix("es").map(str::to_string),
            word.strip_suffix('s')
                .filter(|s| !s.ends_with('s'))
                .map(str::to_string),
        ];
        candidates
            .into_iter()
            .flatten()
            .find(|c| self.nouns.contains(c))
    }

    /// Base form if `word` is a known verb or a regular inflection of one.
    pub fn verb_lemma(&self, word: &str) -> Option<String> {
        if self.verbs.contains(word) {
            return Some(word.to_string());
        }
        let undouble = |s: &str| {
            let b = s.as_bytes();
            (b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2]).then(|| s[..s.len() - 1].to_string())
        };
        let mut candidates: Vec<String> = Vec::new();
        if let Some(s) = word.strip_suffix("ies") {
            candidates.push(format!("{s}y"));
        }
        if let Some(s) = word.strip_suffix("es") {
            candidates.push(s.to_string());
        }
        if let Some(s) = word.strip_suffix('s') {
            candidates.push(s.to_string());
        }
        if let Some(s) = word.strip_suffix("ied") {
            candidates.push(format!("{s}y"));
        }
        if let Some(s) = word.strip_suffix("ed") {
            candidates.push(s.to_string());
            candidates.push(format!("{s}e"));
            candidates.extend(undouble(s));
        }
        if let Some(s) = word.strip_suffix("ing") {
            candidates.push(s.to_string());
            candidates.push(format!("{s}e"));
            candidates.extend(undouble(s));
        }
        candidates.into_iter().find(|c| self.verbs.contains(c))
    }
}

/// Lexicon tagger with suffix rules and a one-token context rule for words
/// that are both nouns and verbs.
#[derive(Debug, Clone)]
pub struct LexiconPosTagger {
    lexicon: Arc<Lexicon>,
}

impl LexiconPosTagger {
    pub fn new(lexicon: Arc<Lexicon>) -> Self {
        LexiconPosTagger { lexicon }
    }

    fn open_class(&self, word: &str, prev: Option<(&str, Pos)>) -> (Pos, String) {
        let noun = self.lexicon.noun_lemma(word);
        let verb = self.lexicon.verb_lemma(word);
        match (noun, verb) {
            (Some(n), None) => (Pos::Noun, n),
            (None, Some(v)) => (Pos::Verb, v),
            (Some(n), Some(v)) => {
                let verbal = match prev {
                    Some(("to", _)) => true,
                    Some((_, Pos::Pron | Pos::Aux)) => true,
                    Some((_, Pos::Noun)) => word != n,
                    _ => false,
                };
                if verbal {
                    (Pos::Verb, v)
                } else {
                    (Pos::Noun, n)
                }
            }
            (None, None) => suffix_guess(word),
        }
    }
}

fn suffix_guess(word: &str) -> (Pos, String) {
    if word.chars().all(|c| c.is_ascii_digit()) {
        return (Pos::Other, word.to_string());
    }
    if word.len() > 4 {
        let singular = word.strip_suffix('s').unwrap_or(word);
        if NOUN_SUFFIXES.iter().any(|s| singular.ends_with(s)) {
            return (Pos::Noun, singular.to_string());
        }
        if word.ends_with("ly") {
            return (Pos::Adv, word.to_string());
        }
        if word.ends_with("ing") || word.ends_with("ed") {
            return (Pos::Verb, word.to_string());
        }
        if ADJ_SUFFIXES.iter().any(|s| word.ends_with(s)) {
            return (Pos::Adj, word.to_string());
        }
    }
    (Pos::Other, word.to_string())
}

impl PosTagger for LexiconPosTagger {
    fn tag(&self, sentence: &str) -> Vec<TaggedToken> {
        let mut out: Vec<TaggedToken> = Vec::new();
        for tok in tokenize(sentence) {
            let lower = tok.to_lowercase();
            let (pos, lemma) = match closed_class(&lower) {
                Some(pos) => (pos, lower.clone()),
                None => {
                    let prev = out.last().map(|t| (t.lemma.as_str(), t.pos));
                    self.open_class(&lower, prev)
                }
            };
            out.push(TaggedToken {
                text: tok.to_string(),
                pos,
                lemma,
            });
        }
        out
    }

    fn name(&self) -> String {
        "fallback-lexicon-pos".into()
    }
}

#[derive(Debug, Clone)]
pub struct LexiconHedgeTagger {
    lexicon: Arc<Lexicon>,
}

impl LexiconHedgeTagger {
    pub fn new(lexicon: Arc<Lexicon>) -> Self {
        LexiconHedgeTagger { lexicon }
    }
}

impl HedgeTagger for LexiconHedgeTagger {
    fn tag(&self, sentence: &str) -> Result<Vec<(String, HedgeLabel)>, ScorerError> {
        Ok(tokenize(sentence)
            .into_iter()
            .map(|t| (t.to_string(), self.lexicon.hedge(t)))
            .collect())
    }

    fn name(&self) -> String {
        "fallback-hedge-lexicon".into()
    }
}

/// Certainty from hedge-cue density: density 0 maps to 6, density 0.2 or
/// more maps to 1, linearly in between.
#[derive(Debug, Clone)]
pub struct HedgeDensityCertainty {
    lexicon: Arc<Lexicon>,
}

impl HedgeDensityCertainty {
    pub fn new(lexicon: Arc<Lexicon>) -> Self {
        HedgeDensityCertainty { lexicon }
    }
}

pub fn density_to_certainty(density: f64) -> f64 {
    (6.0 - 25.0 * density).clamp(1.0, 6.0)
}

impl CertaintyScorer for HedgeDensityCertainty {
    fn certainty(&self, sentence: &str) -> Result<f64, ScorerError> {
        let toks = tokenize(sentence);
        if toks.is_empty() {
            return Err(ScorerError::Rejected("empty sentence".into()));
        }
        let cues = toks
            .iter()
            .filter(|t| self.lexicon.hedge(t) != HedgeLabel::None)
            .count();
        Ok(density_to_certainty(cues as f64 / toks.len() as f64))
    }

    fn name(&self) -> String {
        "fallback-hedge-density".into()
    }
}

/// Overlap and embedding-cosine heuristic. Support is the mean of the share
/// of hypothesis content words found in the premise and the clamped cosine
/// of their mean vectors. A negation parity mismatch turns support into
/// contradiction.
#[derive(Debug, Clone)]
pub struct HeuristicEntailment {
    lexicon: Arc<Lexicon>,
    embeddings: Arc<EmbeddingTable>,
}

impl HeuristicEntailment {
    pub fn new(lexicon: Arc<Lexicon>, embeddings: Arc<EmbeddingTable>) -> Self {
        HeuristicEntailment {
            lexicon,
            embeddings,
        }
    }

    fn content(&self, text: &str) -> (Vec<String>, usize) {
        let mut words = Vec::new();
        let mut negations = 0;
        for tok in tokenize(text) {
            let w = tok.to_lowercase();
            if is_negation(&w) {
                negations += 1;
            }
            if closed_class(&w).is_some() || self.lexicon.hedge(&w) != HedgeLabel::None {
                continue;
            }
            let lemma = self
                .lexicon
                .noun_lemma(&w)
                .or_else(|| self.lexicon.verb_lemma(&w))
                .unwrap_or(w);
            words.push(lemma);
        }
        (words, negations)
    }
}

impl EntailmentScorer for HeuristicEntailment {
    fn entail(&self, premise: &str, hypothesis: &str) -> Result<EntailmentProbs, ScorerError> {
        let (p, p_neg) = self.content(premise);
        let (h, h_neg) = self.content(hypothesis);
        let p_set: HashSet<&str> = p.iter().map(String::as_str).collect();
        let h_set: HashSet<&str> = h.iter().map(String::as_str).collect();
        let overlap = if h_set.is_empty() {
            0.0
        } else {
            h_set.intersection(&p_set).count() as f64 / h_set.len() as f64
        };
        let cos = match (
            self.embeddings.mean_vector(p.iter().map(String::as_str)),
            self.embeddings.mean_vector(h.iter().map(String::as_str)),
        ) {
            (Some(a), Some(b)) => cosine(&a, &b).clamp(0.0, 1.0),
            _ => 0.0,
        };
        let support = 0.5 * overlap + 0.5 * cos;
        let strong = 0.05 + 0.9 * support;
        let rest = 1.0 - strong;
        let weak = 0.25 * rest;
        let neutral = rest - weak;
        let (entail, contradiction) = if p_neg % 2 != h_neg % 2 {
            (weak, strong)
        } else {
            (strong, weak)
        };
        EntailmentProbs::new(entail, neutral, contradiction)
    }

    fn name(&self) -> String {
        "fallback-overlap-cosine".into()
    }
}

impl ScorerSuite {
    /// All-fallback suite over the given lexicon and embedding table.
    pub fn fallback(lexicon: Arc<Lexicon>, embeddings: Arc<EmbeddingTable>) -> ScorerSuite {
        ScorerSuite::new(
            Arc::new(HeuristicEntailment::new(Arc::clone(&lexicon), embeddings)),
            Arc::new(HedgeDensityCertainty::new(Arc::clone(&lexicon))),
            Arc::new(LexiconHedgeTagger::new(Arc::clone(&lexicon))),
            Arc::new(LexiconPosTagger::new(lexicon)),
        )
    }
}
