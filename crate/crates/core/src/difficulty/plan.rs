//! Dependency-graph execution of difficulty scoring.
//!
//! Each metric expands into a small DAG of stages. Corpus-level stages run
//! once; the sentence-level stage is an order-preserving parallel map, so the
//! result is bit-identical to a sequential loop.

use rayon::prelude::*;

use super::{score_length, score_rarity, DifficultyMetric, MetricKind, ScoredCorpus};
use crate::corpus::{Corpus, FrequencyTable, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Vocabulary,
    FrequencyTable,
    SentenceScores,
    Cdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    /// Computed once from the whole corpus.
    Corpus,
    /// Computed independently per sample.
    Sentence,
}

impl Stage {
    pub fn granularity(self) -> Granularity {
        match self {
            Stage::SentenceScores => Granularity::Sentence,
            _ => Granularity::Corpus,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScoringPlan {
    metric: DifficultyMetric,
    // (stage, stages it depends on)
    nodes: Vec<(Stage, Vec<Stage>)>,
}

impl ScoringPlan {
    pub fn for_metric(metric: &DifficultyMetric) -> Self {
        let nodes = match metric.kind {
            MetricKind::SentenceLength => vec![
                (Stage::Cdf, vec![Stage::SentenceScores]),
                (Stage::SentenceScores, vec![]),
            ],
            MetricKind::SentenceRarity => vec![
                (Stage::Cdf, vec![Stage::SentenceScores]),
                (Stage::SentenceScores, vec![Stage::FrequencyTable]),
                (Stage::FrequencyTable, vec![Stage::Vocabulary]),
                (Stage::Vocabulary, vec![]),
            ],
        };
        Self {
            metric: *metric,
            nodes,
        }
    }

    pub fn stages(&self) -> impl Iterator<Item = Stage> + '_ {
        self.nodes.iter().map(|(s, _)| *s)
    }

    pub fn dependencies(&self, stage: Stage) -> &[Stage] {
        self.nodes
            .iter()
            .find(|(s, _)| *s == stage)
            .map(|(_, d)| d.as_slice())
            .unwrap_or(&[])
    }

    /// Topological order; among ready stages the one declared first wins.
    pub fn execution_order(&self) -> Vec<Stage> {
        let mut done: Vec<Stage> = Vec::with_capacity(self.nodes.len());
        while done.len() < self.nodes.len() {
            let next = self
                .nodes
                .iter()
                .find(|(s, deps)| !done.contains(s) && deps.iter().all(|d| done.contains(d)))
                .map(|(s, _)| *s)
                .expect("scoring plan has a cycle");
            done.push(next);
        }
        done
    }

    pub fn execute(&self, corpus: &Corpus) -> Result<ScoredCorpus> {
        let mut vocab: Option<Vocabulary> = None;
        let mut freq: Option<FrequencyTable> = None;
        let mut raw: Option<Vec<f64>> = None;
        let mut scored: Option<ScoredCorpus> = None;

        for stage in self.execution_order() {
            match stage {
                Stage::Vocabulary => vocab = Some(Vocabulary::build(corpus, self.metric.vocab)?),
                Stage::FrequencyTable => {
                    let vocab = vocab.as_ref().expect("vocabulary precedes frequency table");
                    freq = Some(FrequencyTable::build(corpus, vocab));
                }
                Stage::SentenceScores => {
                    raw = Some(match self.metric.kind {
                        MetricKind::SentenceLength => {
                            corpus.samples().par_iter().map(score_length).collect()
                        }
                        MetricKind::SentenceRarity => {
                            let freq = freq.as_ref().expect("frequency table precedes scoring");
                            corpus
                                .samples()
                                .par_iter()
                                .map(|s| score_rarity(s, freq))
                                .collect::<Result<Vec<f64>>>()
                                .map_err(|e| name_token(e, corpus))?
                        }
                    });
                }
                Stage::Cdf => {
                    let raw = raw.take().expect("scores precede cdf");
                    let costs: Vec<u32> = corpus.samples().iter().map(|s| s.token_cost()).collect();
                    scored = Some(ScoredCorpus::from_raw(self.metric.kind, raw, &costs)?);
                }
            }
        }
        Ok(scored.expect("plan ends with cdf"))
    }
}

fn name_token(err: Error, corpus: &Corpus) -> Error {
    match err {
        Error::InvalidFrequency { token } => {
            let resolved = token
                .strip_prefix('#')
                .and_then(|n| n.parse::<u32>().ok())
                .filter(|&n| (n as usize) < corpus.lexicon().len())
                .map(|n| {
                    corpus
                        .lexicon()
                        .resolve(crate::corpus::TokenId(n))
                        .to_owned()
                });
            Error::InvalidFrequency {
                token: resolved.unwrap_or(token),
            }
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rarity_runs_corpus_stages_first() {
        let plan = ScoringPlan::for_metric(&DifficultyMetric::rarity());
        assert_eq!(
            plan.execution_order(),
            [
                Stage::Vocabulary,
                Stage::FrequencyTable,
                Stage::SentenceScores,
                Stage::Cdf
            ]
        );
        assert_eq!(
            plan.dependencies(Stage::SentenceScores),
            [Stage::FrequencyTable]
        );
    }

    #[test]
    fn length_has_no_corpus_prerequisites() {
        let plan = ScoringPlan::for_metric(&DifficultyMetric::length());
        assert_eq!(plan.execution_order(), [Stage::SentenceScores, Stage::Cdf]);
        let sentence_level: Vec<Stage> = plan
            .stages()
            .filter(|s| s.granularity() == Granularity::Sentence)
            .collect();
        assert_eq!(sentence_level, [Stage::SentenceScores]);
    }
}
