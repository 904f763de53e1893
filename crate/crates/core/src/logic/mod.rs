//! Backward-chaining prover with embedding-based weak unification.

mod embedding;
mod prover;

pub use embedding::{
    cosine, symbol_tokens, EmbeddingError, EmbeddingTable, ExactMatch, SymbolSimilarity,
};
pub use prover::{
    consistency, prove, weak_unify, ProverConfig, DEFAULT_MAX_DEPTH, DEFAULT_MAX_EXPANSIONS,
    DEFAULT_THRESHOLD,
};
