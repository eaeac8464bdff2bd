use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;

use crate::corpus::{Corpus, Lexicon, TokenId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Permutation {
    Identity,
    /// Seeded shuffle of the vocabulary.
    Random,
}

/// Zipf-distributed source sentences translated token by token through a
/// fixed bijection of the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    pub min_length: usize,
    pub max_length: usize,
    pub train_size: usize,
    pub heldout_size: usize,
    pub permutation: Permutation,
    pub seed: u64,
}

impl Default for SyntheticTask {
    fn default() -> Self {
        Self {
            vocab_size: 100,
            zipf_exponent: 1.0,
            min_length: 2,
            max_length: 20,
            train_size: 10_000,
            heldout_size: 1_000,
            permutation: Permutation::Random,
            seed: 0,
        }
    }
}

impl SyntheticTask {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(Error::param("synthetic vocabulary needs at least 2 tokens"));
        }
        if !(self.zipf_exponent > 0.0 && self.zipf_exponent.is_finite()) {
            return Err(Error::param("zipf exponent must be positive"));
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return Err(Error::param(
                "sentence length range must satisfy 1 <= min <= max",
            ));
        }
        if self.train_size < 10 {
            return Err(Error::param("synthetic corpus needs at least 10 samples"));
        }
        if self.heldout_size == 0 {
            return Err(Error::param("held-out set must not be empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TaskData {
    pub train: Corpus,
    pub heldout: Corpus,
    /// `mapping[s]` is the target token index for source token index `s`.
    pub mapping: Vec<usize>,
}

/// Token `k` is spelled `w{k}` and has Zipf rank `k + 1`; both corpora share
/// the same lexicon layout, so token ids equal token indices.
pub fn generate_task(task: &SyntheticTask) -> Result<TaskData> {
    task.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);

    let mut mapping: Vec<usize> = (0..task.vocab_size).collect();
    if task.permutation == Permutation::Random {
        mapping.shuffle(&mut rng);
    }
    let zipf = Zipf::new(task.vocab_size as f64, task.zipf_exponent)
        .map_err(|e| Error::param(format!("zipf: {e}")))?;

    let draw_corpus = |size: usize, rng: &mut ChaCha8Rng| {
        let samples = (0..size)
            .map(|_| {
                let len =
                    rng.random_range(task.min_length as u64..=task.max_length as u64) as usize;
                let source: Vec<TokenId> = (0..len)
                    .map(|_| TokenId(rng.sample(zipf) as u32 - 1))
                    .collect();
                let target = source
                    .iter()
                    .map(|t| TokenId(mapping[t.index()] as u32))
                    .collect();
                (source, target)
            })
            .collect();
        Corpus::from_samples(lexicon(task.vocab_size), samples)
    };
    let train = draw_corpus(task.train_size, &mut rng)?;
    let heldout = draw_corpus(task.heldout_size, &mut rng)?;
    Ok(TaskData {
        train,
        heldout,
        mapping,
    })
}

fn lexicon(vocab_size: usize) -> Lexicon {
    let mut lex = Lexicon::new();
    for k in 0..vocab_size {
        lex.intern(&format!("w{k}"));
    }
    lex
}
