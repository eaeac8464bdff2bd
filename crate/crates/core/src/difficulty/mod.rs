//! Per-sample difficulty scores and their empirical-CDF ranks.

mod format;
mod plan;

use std::fmt;
use std::str::FromStr;

use crate::corpus::{Corpus, FrequencyTable, ParallelSample, VocabConfig};
use crate::{Error, Result};

pub use format::{read_scored, write_scored};
pub use plan::{Granularity, ScoringPlan, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetricKind {
    /// Source token count.
    SentenceLength,
    /// Negative log-likelihood under the corpus unigram model, in nats.
    SentenceRarity,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::SentenceLength => "length",
            MetricKind::SentenceRarity => "rarity",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "length" | "sl" => Ok(MetricKind::SentenceLength),
            "rarity" | "sr" => Ok(MetricKind::SentenceRarity),
            other => Err(Error::param(format!(
                "unknown metric `{other}` (expected length or rarity)"
            ))),
        }
    }
}

/// Corpus-level values a metric needs before sentences can be scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prerequisite {
    FrequencyTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DifficultyMetric {
    pub kind: MetricKind,
    /// Vocabulary used to build the frequency table; ignored by length.
    pub vocab: VocabConfig,
}

impl DifficultyMetric {
    pub fn length() -> Self {
        Self {
            kind: MetricKind::SentenceLength,
            vocab: VocabConfig::default(),
        }
    }

    pub fn rarity() -> Self {
        Self::rarity_with(VocabConfig::default())
    }

    pub fn rarity_with(vocab: VocabConfig) -> Self {
        Self {
            kind: MetricKind::SentenceRarity,
            vocab,
        }
    }

    pub fn dependencies(&self) -> &'static [Prerequisite] {
        match self.kind {
            MetricKind::SentenceLength => &[],
            MetricKind::SentenceRarity => &[Prerequisite::FrequencyTable],
        }
    }
}

pub fn score_length(sample: &ParallelSample) -> f64 {
    sample.source.len() as f64
}

/// `-sum ln p(w)` over the source tokens. `freq` must come from the corpus
/// the sample belongs to.
pub fn score_rarity(sample: &ParallelSample, freq: &FrequencyTable) -> Result<f64> {
    let mut total = 0.0;
    for &tok in &sample.source {
        match freq.neg_log_prob(tok) {
            Some(v) => total += v,
            None => {
                return Err(Error::InvalidFrequency {
                    token: format!("#{}", tok.0),
                })
            }
        }
    }
    Ok(total)
}

/// Empirical CDF with tie sharing: `cdf[i] = |{j : raw[j] <= raw[i]}| / M`.
pub fn compute_cdf(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some((index, &value)) = raw.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidScore { index, value });
    }
    let mut sorted = raw.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let m = raw.len() as f64;
    Ok(raw
        .iter()
        .map(|&x| sorted.partition_point(|&y| y <= x) as f64 / m)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub sample_id: usize,
    pub raw_score: f64,
    pub cdf: f64,
    /// Source plus target tokens, charged against the batch budget.
    pub token_cost: u32,
}

/// Scored samples indexed by id, plus an easy-first ordering by
/// `(cdf, id)` so that every competence gate selects a prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCorpus {
    metric: MetricKind,
    samples: Vec<ScoredSample>,
    order: Vec<usize>,
    sorted_cdf: Vec<f64>,
}

impl ScoredCorpus {
    pub fn new(metric: MetricKind, samples: Vec<ScoredSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        for (i, s) in samples.iter().enumerate() {
            if s.sample_id != i {
                return Err(Error::param(format!(
                    "sample ids must be dense; found {} at {i}",
                    s.sample_id
                )));
            }
            if !(s.cdf > 0.0 && s.cdf <= 1.0) {
                return Err(Error::InvalidScore {
                    index: i,
                    value: s.cdf,
                });
            }
            if s.token_cost == 0 {
                return Err(Error::param(format!("sample {i} has zero token cost")));
            }
        }
        if !samples.iter().any(|s| s.cdf == 1.0) {
            return Err(Error::param("no sample has cdf 1"));
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| samples[a].cdf.total_cmp(&samples[b].cdf).then(a.cmp(&b)));
        let sorted_cdf = order.iter().map(|&i| samples[i].cdf).collect();
        Ok(Self {
            metric,
            samples,
            order,
            sorted_cdf,
        })
    }

    /// Ranks `raw` scores and attaches per-sample token costs.
    pub fn from_raw(metric: MetricKind, raw: Vec<f64>, token_costs: &[u32]) -> Result<Self> {
        if raw.len() != token_costs.len() {
            return Err(Error::param("score and cost counts differ"));
        }
        let cdf = compute_cdf(&raw)?;
        let samples = raw
            .into_iter()
            .zip(cdf)
            .zip(token_costs)
            .enumerate()
            .map(
                |(sample_id, ((raw_score, cdf), &token_cost))| ScoredSample {
                    sample_id,
                    raw_score,
                    cdf,
                    token_cost,
                },
            )
            .collect();
        Self::new(metric, samples)
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    pub fn samples(&self) -> &[ScoredSample] {
        &self.samples
    }

    pub fn get(&self, id: usize) -> &ScoredSample {
        &self.samples[id]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample ids sorted easiest first, ties by ascending id.
    pub fn easy_order(&self) -> &[usize] {
        &self.order
    }

    /// Number of samples with `cdf <= c`.
    pub fn eligible_count(&self, c: f64) -> usize {
        self.sorted_cdf.partition_point(|&x| x <= c)
    }

    pub fn max_token_cost(&self) -> u32 {
        self.samples.iter().map(|s| s.token_cost).max().unwrap_or(0)
    }

    pub fn raw_scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.raw_score)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        write_scored(self, &mut out).map_err(|e| Error::io(path, e))?;
        std::io::Write::flush(&mut out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        read_scored(std::io::BufReader::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }
}

/// Scores every sample of `corpus`, building corpus-level prerequisites once.
pub fn score_corpus(corpus: &Corpus, metric: &DifficultyMetric) -> Result<ScoredCorpus> {
    ScoringPlan::for_metric(metric).execute(corpus)
}
