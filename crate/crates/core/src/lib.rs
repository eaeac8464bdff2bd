//! Competence-based curriculum sampling for parallel-corpus training.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`corpus`] ingests aligned sentence pairs, builds a vocabulary and the
//!    relative word-frequency table.
//! 2. [`difficulty`] scores each sample (sentence length or sentence rarity)
//!    and converts the raw scores into empirical-CDF ranks in `(0, 1]`.
//! 3. [`competence`] maps a training step to the fraction of the ranked
//!    corpus the learner may draw from.
//! 4. [`sampler`] gates the corpus by competence and emits token-budgeted
//!    batches drawn uniformly from the eligible pool.
//!
//! [`toytrain`] is a small, fully deterministic harness that drives the loop
//! end to end on a synthetic word-aligned translation task.

pub mod competence;
pub mod corpus;
pub mod difficulty;
mod error;
pub mod memory;
pub mod numfmt;
pub mod sampler;
pub mod toytrain;

pub use error::{Error, Result};

/// Initial competence used throughout unless overridden.
pub const DEFAULT_INITIAL_COMPETENCE: f64 = 0.01;
/// Maximum summed source+target tokens per batch.
pub const DEFAULT_TOKEN_BUDGET: u32 = 5120;
/// Number of vocabulary entries kept by default.
pub const DEFAULT_VOCAB_SIZE: usize = 20_000;
/// Tokens seen fewer times than this are folded into the unknown symbol.
pub const DEFAULT_MIN_COUNT: u64 = 5;
/// Source sentences longer than this are dropped at ingestion.
pub const DEFAULT_MAX_LENGTH: usize = 200;
