//! Competence-gated, token-budgeted batch sampling.
//!
//! At step `t` the eligible pool is every sample with `cdf <= c(t)`. Batches
//! are filled by uniform draws with replacement from that pool until the next
//! draw would overflow the token budget; the overflowing draw becomes the
//! first sample of the following batch, so the underlying draw stream is
//! never discarded.
//!
//! Draws use ChaCha8 seeded through `SeedableRng::seed_from_u64` and indices
//! are sampled as `u64`, so batch sequences are identical across platforms.

mod stream;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::competence::CompetenceSchedule;
use crate::difficulty::ScoredCorpus;
use crate::{Error, Result, DEFAULT_TOKEN_BUDGET};

pub use stream::{read_binary, read_jsonl, write_binary, write_jsonl, BatchRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub schedule: CompetenceSchedule,
    pub token_budget: u32,
    pub seed: u64,
    /// Lower bound on the pool size; smaller pools are padded with the next
    /// easiest samples and flagged as clamped.
    pub min_pool: usize,
}

impl SamplerConfig {
    pub fn new(schedule: CompetenceSchedule) -> Self {
        Self {
            schedule,
            token_budget: DEFAULT_TOKEN_BUDGET,
            seed: 0,
            min_pool: 1,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_token_budget(mut self, budget: u32) -> Self {
        self.token_budget = budget;
        self
    }

    pub fn with_min_pool(mut self, min_pool: usize) -> Self {
        self.min_pool = min_pool;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EligiblePool {
    /// Eligible sample ids, ascending.
    pub ids: Vec<usize>,
    pub clamped: bool,
}

/// All samples with `cdf <= c`, or the `min_pool` easiest ones (ties by id)
/// when fewer qualify.
pub fn eligible_pool(scored: &ScoredCorpus, c: f64, min_pool: usize) -> EligiblePool {
    let eligible = scored.eligible_count(c);
    let min_pool = min_pool.clamp(1, scored.len());
    let clamped = eligible < min_pool;
    let mut ids = scored.easy_order()[..eligible.max(min_pool)].to_vec();
    ids.sort_unstable();
    EligiblePool { ids, clamped }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub step: u64,
    pub competence: f64,
    pub sample_ids: Vec<usize>,
    pub token_count: u32,
    pub pool_size: usize,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Gate {
    Competence(CompetenceSchedule),
    /// No curriculum: the whole corpus is always eligible.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    step: u64,
    rng: ChaCha8Rng,
    // length of the easy-first prefix currently held in `pool`
    prefix_len: usize,
    pool: Vec<usize>,
    pending: Option<usize>,
}

impl SamplerState {
    fn new(seed: u64) -> Self {
        Self {
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            prefix_len: 0,
            pool: Vec::new(),
            pending: None,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    /// Draw carried over from the previous batch, if any.
    pub fn pending(&self) -> Option<usize> {
        self.pending
    }
}

#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    scored: &'a ScoredCorpus,
    gate: Gate,
    token_budget: u32,
    min_pool: usize,
    state: SamplerState,
}

impl<'a> Sampler<'a> {
    pub fn new(scored: &'a ScoredCorpus, config: &SamplerConfig) -> Result<Self> {
        Self::build(
            scored,
            Gate::Competence(config.schedule),
            config.token_budget,
            config.seed,
            config.min_pool,
        )
    }

    /// Sampler without a curriculum, drawing from the whole corpus.
    pub fn uniform(scored: &'a ScoredCorpus, token_budget: u32, seed: u64) -> Result<Self> {
        Self::build(scored, Gate::Full, token_budget, seed, 1)
    }

    fn build(
        scored: &'a ScoredCorpus,
        gate: Gate,
        token_budget: u32,
        seed: u64,
        min_pool: usize,
    ) -> Result<Self> {
        if min_pool == 0 || min_pool > scored.len() {
            return Err(Error::param(format!(
                "min_pool must be in 1..={}, got {min_pool}",
                scored.len()
            )));
        }
        if let Some(s) = scored
            .samples()
            .iter()
            .find(|s| s.token_cost > token_budget)
        {
            return Err(Error::Budget {
                sample_id: s.sample_id,
                cost: s.token_cost,
                budget: token_budget,
            });
        }
        Ok(Self {
            scored,
            gate,
            token_budget,
            min_pool,
            state: SamplerState::new(seed),
        })
    }

    pub fn state(&self) -> &SamplerState {
        &self.state
    }

    pub fn step(&self) -> u64 {
        self.state.step
    }

    pub fn competence(&self, t: u64) -> f64 {
        match self.gate {
            Gate::Competence(schedule) => schedule.at(t),
            Gate::Full => 1.0,
        }
    }

    /// A no-curriculum sampler continuing from this sampler's exact
    /// generator state.
    pub fn fork_uniform(&self) -> Sampler<'a> {
        let mut fork = self.clone();
        fork.gate = Gate::Full;
        fork.min_pool = 1;
        fork
    }

    pub fn next_batch(&mut self) -> Result<Batch> {
        let t = self.state.step;
        let competence = self.competence(t);
        let clamped = self.refresh_pool(competence);

        let mut sample_ids = Vec::new();
        let mut token_count = 0u32;
        loop {
            let id = match self.state.pending.take() {
                Some(id) => id,
                None => {
                    let j = self.state.rng.random_range(0..self.state.pool.len() as u64) as usize;
                    self.state.pool[j]
                }
            };
            let cost = self.scored.get(id).token_cost;
            if sample_ids.is_empty() && cost > self.token_budget {
                return Err(Error::Budget {
                    sample_id: id,
                    cost,
                    budget: self.token_budget,
                });
            }
            if token_count + cost > self.token_budget {
                self.state.pending = Some(id);
                break;
            }
            token_count += cost;
            sample_ids.push(id);
        }

        self.state.step += 1;
        Ok(Batch {
            step: t,
            competence,
            sample_ids,
            token_count,
            pool_size: self.state.pool.len(),
            clamped,
        })
    }

    /// Brings the cached pool up to date for competence `c`; returns whether
    /// the pool had to be clamped.
    fn refresh_pool(&mut self, c: f64) -> bool {
        let m = self.scored.len();
        let (target, clamped) = match self.gate {
            Gate::Full => (m, false),
            Gate::Competence(_) => {
                let eligible = self.scored.eligible_count(c);
                (eligible.max(self.min_pool), eligible < self.min_pool)
            }
        };
        let state = &mut self.state;
        let order = self.scored.easy_order();
        if target > state.prefix_len {
            let mut added = order[state.prefix_len..target].to_vec();
            added.sort_unstable();
            state.pool = merge_sorted(&state.pool, &added);
        } else if target < state.prefix_len {
            state.pool = order[..target].to_vec();
            state.pool.sort_unstable();
        }
        state.prefix_len = target;
        clamped
    }

    pub fn batches(self, steps: u64) -> Batches<'a> {
        Batches {
            sampler: self,
            remaining: steps,
        }
    }
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Iterator over a fixed number of batches.
pub struct Batches<'a> {
    sampler: Sampler<'a>,
    remaining: u64,
}

impl Iterator for Batches<'_> {
    type Item = Result<Batch>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let batch = self.sampler.next_batch();
        if batch.is_err() {
            self.remaining = 0;
        }
        Some(batch)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLogEntry {
    pub t: u64,
    pub competence: f64,
    pub pool_size: usize,
    pub batch_tokens: u32,
    pub clamped: bool,
    pub callback_value: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub entries: Vec<RunLogEntry>,
}

impl RunLog {
    pub fn push(&mut self, batch: &Batch, callback_value: Option<f64>) {
        self.entries.push(RunLogEntry {
            t: batch.step,
            competence: batch.competence,
            pool_size: batch.pool_size,
            batch_tokens: batch.token_count,
            clamped: batch.clamped,
            callback_value,
        });
    }

    /// CSV `t,competence,pool_size,batch_tokens,clamped,callback_value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "t,competence,pool_size,batch_tokens,clamped,callback_value"
        )?;
        for e in &self.entries {
            let value = e.callback_value.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{}",
                e.t, e.competence, e.pool_size, e.batch_tokens, e.clamped as u8, value
            )?;
        }
        Ok(())
    }
}

/// Drives the curriculum loop for `steps` batches, handing each batch to
/// `trainer` in step order. A trainer error aborts the run.
pub fn run_curriculum<F, E>(
    scored: &ScoredCorpus,
    config: &SamplerConfig,
    steps: u64,
    mut trainer: F,
) -> Result<RunLog>
where
    F: FnMut(&Batch) -> std::result::Result<Option<f64>, E>,
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    if steps == 0 {
        return Err(Error::param("steps must be at least 1"));
    }
    let mut sampler = Sampler::new(scored, config)?;
    let mut log = RunLog::default();
    for _ in 0..steps {
        let batch = sampler.next_batch()?;
        let value = trainer(&batch).map_err(|e| Error::Trainer {
            step: batch.step,
            source: e.into(),
        })?;
        log.push(&batch, value);
    }
    Ok(log)
}
