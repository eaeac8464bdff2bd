//! Parallel corpus ingestion, vocabulary construction and the relative
//! word-frequency table consumed by the rarity scorer.
//!
//! Tokens are interned into a per-corpus [`Lexicon`] so that samples hold
//! compact [`TokenId`]s. Frequencies are computed over the source side only.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::{Error, Result, DEFAULT_MIN_COUNT, DEFAULT_VOCAB_SIZE};

/// Reserved spelling of the out-of-vocabulary symbol.
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// String interner shared by both sides of a corpus. Ids are assigned in
/// first-appearance order, which keeps them deterministic for a given input.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = TokenId(self.tokens.len() as u32);
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), id);
        id
    }

    pub fn get(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn resolve(&self, id: TokenId) -> &str {
        &self.tokens[id.index()]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One aligned source/target sentence pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelSample {
    pub id: usize,
    pub source: Vec<TokenId>,
    pub target: Vec<TokenId>,
}

impl ParallelSample {
    /// Source plus target token count; the unit charged against a batch budget.
    pub fn token_cost(&self) -> u32 {
        (self.source.len() + self.target.len()) as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    samples: Vec<ParallelSample>,
    lexicon: Lexicon,
}

impl Corpus {
    /// Builds a corpus from already-interned samples, renumbering ids densely
    /// in the given order. Samples with an empty side are rejected.
    pub fn from_samples(
        lexicon: Lexicon,
        samples: Vec<(Vec<TokenId>, Vec<TokenId>)>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut out = Vec::with_capacity(samples.len());
        for (id, (source, target)) in samples.into_iter().enumerate() {
            if source.is_empty() || target.is_empty() {
                return Err(Error::param(format!("sample {id} has an empty side")));
            }
            if let Some(bad) = source
                .iter()
                .chain(&target)
                .find(|t| t.index() >= lexicon.len())
            {
                return Err(Error::param(format!(
                    "sample {id} references unknown token id {}",
                    bad.0
                )));
            }
            out.push(ParallelSample { id, source, target });
        }
        Ok(Corpus {
            samples: out,
            lexicon,
        })
    }

    /// Whitespace-tokenizes aligned pairs, dropping pairs with an empty side
    /// or with more than `max_length` source tokens.
    pub fn from_pairs<'a, I>(pairs: I, max_length: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut builder = CorpusBuilder::new(max_length)?;
        for (src, tgt) in pairs {
            builder.push(src, tgt);
        }
        builder.finish()
    }

    /// Reads two aligned files, one sentence per line.
    pub fn ingest(source_path: &Path, target_path: &Path, max_length: usize) -> Result<Self> {
        let src = File::open(source_path).map_err(|e| Error::io(source_path, e))?;
        let tgt = File::open(target_path).map_err(|e| Error::io(target_path, e))?;
        Self::from_readers(BufReader::new(src), BufReader::new(tgt), max_length).map_err(
            |e| match e {
                Error::Io { source, .. } => Error::io(source_path, source),
                other => other,
            },
        )
    }

    pub fn from_readers<R1: BufRead, R2: BufRead>(
        source: R1,
        target: R2,
        max_length: usize,
    ) -> Result<Self> {
        let mut builder = CorpusBuilder::new(max_length)?;
        let mut src_lines = source.lines();
        let mut tgt_lines = target.lines();
        let mut paired = 0usize;
        loop {
            match (src_lines.next(), tgt_lines.next()) {
                (Some(s), Some(t)) => {
                    let s = s.map_err(|e| Error::io("<source>", e))?;
                    let t = t.map_err(|e| Error::io("<target>", e))?;
                    builder.push(&s, &t);
                    paired += 1;
                }
                (None, None) => break,
                (Some(_), None) => {
                    let extra = 1 + src_lines.count();
                    return Err(Error::Alignment {
                        source_lines: paired + extra,
                        target_lines: paired,
                    });
                }
                (None, Some(_)) => {
                    let extra = 1 + tgt_lines.count();
                    return Err(Error::Alignment {
                        source_lines: paired,
                        target_lines: paired + extra,
                    });
                }
            }
        }
        builder.finish()
    }

    /// Reads a single `source<TAB>target` file.
    pub fn ingest_tsv(path: &Path, max_length: usize) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut builder = CorpusBuilder::new(max_length)?;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let (src, tgt) = line
                .split_once('\t')
                .ok_or(Error::MalformedPair { line: n + 1 })?;
            builder.push(src, tgt);
        }
        builder.finish()
    }

    pub fn samples(&self) -> &[ParallelSample] {
        &self.samples
    }

    pub fn sample(&self, id: usize) -> &ParallelSample {
        &self.samples[id]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn source_tokens(&self, id: usize) -> impl Iterator<Item = &str> + '_ {
        self.samples[id]
            .source
            .iter()
            .map(|&t| self.lexicon.resolve(t))
    }

    pub fn target_tokens(&self, id: usize) -> impl Iterator<Item = &str> + '_ {
        self.samples[id]
            .target
            .iter()
            .map(|&t| self.lexicon.resolve(t))
    }

    /// Total number of source tokens, `N_total`.
    pub fn source_token_count(&self) -> u64 {
        self.samples.iter().map(|s| s.source.len() as u64).sum()
    }

    /// Occurrence count of every lexicon entry on the source side.
    pub fn source_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.lexicon.len()];
        for sample in &self.samples {
            for t in &sample.source {
                counts[t.index()] += 1;
            }
        }
        counts
    }

    pub fn max_token_cost(&self) -> u32 {
        self.samples
            .iter()
            .map(ParallelSample::token_cost)
            .max()
            .unwrap_or(0)
    }
}

struct CorpusBuilder {
    max_length: usize,
    lexicon: Lexicon,
    samples: Vec<(Vec<TokenId>, Vec<TokenId>)>,
}

impl CorpusBuilder {
    fn new(max_length: usize) -> Result<Self> {
        if max_length == 0 {
            return Err(Error::param("max_length must be at least 1"));
        }
        Ok(Self {
            max_length,
            lexicon: Lexicon::new(),
            samples: Vec::new(),
        })
    }

    fn push(&mut self, source: &str, target: &str) {
        let src_len = source.split_whitespace().count();
        if src_len == 0 || src_len > self.max_length || target.split_whitespace().next().is_none() {
            return;
        }
        let src = source
            .split_whitespace()
            .map(|t| self.lexicon.intern(t))
            .collect();
        let tgt = target
            .split_whitespace()
            .map(|t| self.lexicon.intern(t))
            .collect();
        self.samples.push((src, tgt));
    }

    fn finish(self) -> Result<Corpus> {
        Corpus::from_samples(self.lexicon, self.samples)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabConfig {
    pub max_size: usize,
    pub min_count: u64,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            max_size: DEFAULT_VOCAB_SIZE,
            min_count: DEFAULT_MIN_COUNT,
        }
    }
}

/// Source-side vocabulary: the most frequent tokens, with everything else
/// folded into [`UNK_TOKEN`].
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    entries: Vec<(String, u64)>,
    index: HashMap<String, usize>,
    unk_count: u64,
    total: u64,
}

impl Vocabulary {
    /// Keeps the `max_size` most frequent source tokens seen at least
    /// `min_count` times. Equal counts are ordered by token, smallest first.
    /// A literal `<unk>` in the input is always counted as unknown.
    pub fn build(corpus: &Corpus, config: VocabConfig) -> Result<Self> {
        if config.max_size == 0 || config.min_count == 0 {
            return Err(Error::param(
                "vocabulary max_size and min_count must be at least 1",
            ));
        }
        let counts = corpus.source_counts();
        let lexicon = corpus.lexicon();
        let mut candidates: Vec<(&str, u64)> = counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c >= config.min_count)
            .map(|(i, &c)| (lexicon.resolve(TokenId(i as u32)), c))
            .filter(|&(tok, _)| tok != UNK_TOKEN)
            .collect();
        candidates.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        candidates.truncate(config.max_size);

        let total = corpus.source_token_count();
        let retained: u64 = candidates.iter().map(|&(_, c)| c).sum();
        let entries: Vec<(String, u64)> = candidates
            .into_iter()
            .map(|(t, c)| (t.to_owned(), c))
            .collect();
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        Ok(Vocabulary {
            entries,
            index,
            unk_count: total - retained,
            total,
        })
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn count(&self, token: &str) -> Option<u64> {
        self.index_of(token).map(|i| self.entries[i].1)
    }

    /// Retained entries in index order (descending count).
    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn unk_count(&self) -> u64 {
        self.unk_count
    }

    pub fn total_token_count(&self) -> u64 {
        self.total
    }

    /// `token<TAB>count` per line, descending count, unknown last.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (tok, count) in &self.entries {
            writeln!(out, "{tok}\t{count}")?;
        }
        writeln!(out, "{UNK_TOKEN}\t{}", self.unk_count)
    }
}

/// Relative source-side word frequencies `p(w) = count(w) / N_total`.
///
/// Lookups by [`TokenId`] are only meaningful for the corpus the table was
/// built from.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    by_name: HashMap<String, f64>,
    order: Vec<String>,
    unk: Option<f64>,
    // -ln p per lexicon id; NaN marks tokens with no resolvable frequency.
    neg_log: Vec<f64>,
}

impl FrequencyTable {
    /// Counts come from `corpus`; tokens missing from `vocab` share the
    /// aggregated unknown mass.
    pub fn build(corpus: &Corpus, vocab: &Vocabulary) -> Self {
        let counts = corpus.source_counts();
        let total = corpus.source_token_count() as f64;
        let lexicon = corpus.lexicon();

        let mut unk_count = 0u64;
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 && !vocab.contains(lexicon.resolve(TokenId(i as u32))) {
                unk_count += c;
            }
        }
        let unk = (unk_count > 0).then(|| unk_count as f64 / total);

        let mut by_name = HashMap::new();
        let mut order = Vec::new();
        for (tok, _) in vocab.entries() {
            if let Some(id) = lexicon.get(tok) {
                let c = counts[id.index()];
                if c > 0 {
                    by_name.insert(tok.clone(), c as f64 / total);
                    order.push(tok.clone());
                }
            }
        }

        let neg_log = (0..lexicon.len())
            .map(|i| {
                let tok = lexicon.resolve(TokenId(i as u32));
                match by_name.get(tok).copied().or(unk) {
                    Some(p) => -p.ln(),
                    None => f64::NAN,
                }
            })
            .collect();

        FrequencyTable {
            by_name,
            order,
            unk,
            neg_log,
        }
    }

    /// Frequency of `token`, falling back to the unknown mass for tokens
    /// outside the vocabulary.
    pub fn get(&self, token: &str) -> Option<f64> {
        self.by_name.get(token).copied().or(self.unk)
    }

    /// Frequency of an in-vocabulary token, without the unknown fallback.
    pub fn get_known(&self, token: &str) -> Option<f64> {
        self.by_name.get(token).copied()
    }

    pub fn unk(&self) -> Option<f64> {
        self.unk
    }

    /// In-vocabulary entries in vocabulary order, unknown excluded.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.order.iter().map(|t| (t.as_str(), self.by_name[t]))
    }

    pub fn total_mass(&self) -> f64 {
        self.iter().map(|(_, p)| p).sum::<f64>() + self.unk.unwrap_or(0.0)
    }

    /// `-ln p` for a token of the corpus this table was built from.
    pub(crate) fn neg_log_prob(&self, id: TokenId) -> Option<f64> {
        self.neg_log
            .get(id.index())
            .copied()
            .filter(|v| !v.is_nan())
    }
}
