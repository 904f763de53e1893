//! Scoring competing natural-language explanations by inference to the best
//! explanation.
//!
//! The pipeline turns a causal question into one entailment hypothesis per
//! answer candidate, asks a language model for a step-wise explanation,
//! translates it into a small logic program, proves it with a weak-unification
//! prover, and computes explicit features of the explanation. A linear model
//! over those features picks the answer.

pub mod error;
pub mod formalize;
pub mod generation;
pub mod logic;
pub mod metrics;
pub mod model;
pub mod scoring;

pub use error::*;
pub use model::*;
