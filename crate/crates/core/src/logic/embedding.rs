//! Static word-vector tables and symbol similarity.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, LazyLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding table: missing `d=<dim>` header")]
    MissingHeader,
    #[error("embedding table line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("embedding table: {0}")]
    Io(#[from] std::io::Error),
}

/// Similarity between two symbol names (predicates or constants), in [0, 1].
pub trait SymbolSimilarity: Send + Sync {
    fn similarity(&self, a: &str, b: &str) -> f64;
}

/// Exact string matching: 1 for equal names, 0 otherwise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatch;

impl SymbolSimilarity for ExactMatch {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        if a == b {
            1.0
        } else {
            0.0
        }
    }
}

/// Token → vector lookup with a fixed dimension.
///
/// Out-of-vocabulary tokens map to a pseudo-random unit vector seeded by the
/// SHA-256 of the token, so lookups are total and reproducible.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

static TOY: LazyLock<Arc<EmbeddingTable>> = LazyLock::new(|| {
    Arc::new(
        EmbeddingTable::parse(include_str!("../../data/toy_embeddings.txt"))
            .expect("bundled toy table is well-formed"),
    )
});

impl EmbeddingTable {
    /// The small table bundled with the crate.
    pub fn toy() -> Arc<EmbeddingTable> {
        Arc::clone(&TOY)
    }

    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Text format: a `d=<dim>` header line, then `token v1 ... vd` per line.
    pub fn parse(text: &str) -> Result<Self, EmbeddingError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(EmbeddingError::MissingHeader)?;
        let dim: usize = header
            .trim()
            .strip_prefix("d=")
            .and_then(|d| d.parse().ok())
            .filter(|&d| d > 0)
            .ok_or(EmbeddingError::MissingHeader)?;
        let mut vectors = HashMap::new();
        for (idx, line) in lines {
            let mut parts = line.split_whitespace();
            let token = parts.next().expect("nonblank line").to_lowercase();
            let values = parts
                .map(|p| p.parse::<f32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EmbeddingError::BadLine {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            if values.len() != dim {
                return Err(EmbeddingError::BadLine {
                    line: idx + 1,
                    message: format!("expected {dim} values, got {}", values.len()),
                });
            }
            vectors.insert(token, values);
        }
        Ok(EmbeddingTable { dim, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vectors.contains_key(&token.to_lowercase())
    }

    pub fn vector(&self, token: &str) -> Vec<f32> {
        let token = token.to_lowercase();
        match self.vectors.get(&token) {
            Some(v) => v.clone(),
            None => oov_vector(&token, self.dim),
        }
    }

    /// Mean of the token vectors; `None` for an empty token list.
    pub fn mean_vector<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Option<Vec<f64>> {
        let mut sum = vec![0.0f64; self.dim];
        let mut n = 0usize;
        for t in tokens {
            for (s, x) in sum.iter_mut().zip(self.vector(t)) {
                *s += f64::from(x);
            }
            n += 1;
        }
        (n > 0).then(|| sum.into_iter().map(|s| s / n as f64).collect())
    }
}

fn oov_vector(token: &str, dim: usize) -> Vec<f32> {
    let digest = Sha256::digest(token.as_bytes());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(seed);
    let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = raw
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    raw.into_iter().map(|x| (x / norm) as f32).collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Underscore-separated words of a symbol name.
pub fn symbol_tokens(name: &str) -> impl Iterator<Item = &str> {
    name.split('_').filter(|t| !t.is_empty())
}

impl SymbolSimilarity for EmbeddingTable {
    /// Cosine of the mean token vectors, with negative values clamped to 0.
    fn similarity(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        match (
            self.mean_vector(symbol_tokens(a)),
            self.mean_vector(symbol_tokens(b)),
        ) {
            (Some(va), Some(vb)) => cosine(&va, &vb).clamp(0.0, 1.0),
            _ => 0.0,
        }
    }
}

impl<T: SymbolSimilarity + ?Sized> SymbolSimilarity for Arc<T> {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        (**self).similarity(a, b)
    }
}
