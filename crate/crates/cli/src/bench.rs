use std::fmt::Write as _;
use std::hash::{DefaultHasher, Hasher};
use std::io::{Cursor, Write};
use std::time::Instant;

use anyhow::{Context, Result};
use curriculum::corpus::Corpus;
use curriculum::difficulty::{score_corpus, DifficultyMetric};
use curriculum::DEFAULT_MAX_LENGTH;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;
use serde_json::{json, Value};

use crate::{BenchArgs, BenchMetric, ALLOC};

const MIN_LENGTH: u64 = 1;
const MAX_LENGTH: u64 = 50;
const ZIPF_EXPONENT: f64 = 1.0;

/// Source and target text of the synthetic bench corpus, one sentence per line.
pub struct SyntheticText {
    pub source: String,
    pub target: String,
    pub tokens: u64,
}

impl SyntheticText {
    pub fn digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        h.write(self.source.as_bytes());
        h.write(self.target.as_bytes());
        h.finish()
    }
}

/// Zipf-distributed sentences of uniformly drawn length; a seed fully
/// determines the text.
pub fn synthetic_text(sentences: usize, vocab: usize, seed: u64) -> Result<SyntheticText> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf =
        Zipf::new(vocab as f64, ZIPF_EXPONENT).context("bench vocabulary must be at least 1")?;
    let mut source = String::with_capacity(sentences * 150);
    let mut target = String::with_capacity(sentences * 150);
    let mut tokens = 0;
    for _ in 0..sentences {
        let len = rng.random_range(MIN_LENGTH..=MAX_LENGTH);
        for i in 0..len {
            let sep = if i == 0 { "" } else { " " };
            let s = rng.sample(zipf) as u64;
            let t = rng.sample(zipf) as u64;
            let _ = write!(source, "{sep}s{s}");
            let _ = write!(target, "{sep}t{t}");
        }
        source.push('\n');
        target.push('\n');
        tokens += len;
    }
    Ok(SyntheticText {
        source,
        target,
        tokens,
    })
}

fn cpu_model() -> String {
    std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|info| {
            info.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_owned())
        })
        .unwrap_or_else(|| "unknown".to_owned())
}

pub fn run(args: BenchArgs) -> Result<()> {
    ALLOC.reset_peak();
    let text = synthetic_text(args.sentences, args.vocab, args.seed)?;

    let parse_start = Instant::now();
    let corpus = Corpus::from_readers(
        Cursor::new(text.source.as_bytes()),
        Cursor::new(text.target.as_bytes()),
        DEFAULT_MAX_LENGTH,
    )?;
    let parse_secs = parse_start.elapsed().as_secs_f64();

    let metrics: &[DifficultyMetric] = match args.metric {
        BenchMetric::Length => &[DifficultyMetric::length()],
        BenchMetric::Rarity => &[DifficultyMetric::rarity()],
        BenchMetric::Both => &[DifficultyMetric::length(), DifficultyMetric::rarity()],
    };
    let mut results = serde_json::Map::new();
    for metric in metrics {
        let start = Instant::now();
        let scored = score_corpus(&corpus, metric)?;
        let secs = start.elapsed().as_secs_f64();
        let m = scored.len() as f64;
        results.insert(
            metric.kind.name().to_owned(),
            json!({
                "scoring_seconds": secs,
                "sentences_per_sec": m / secs,
                "sentences_per_sec_including_parse": m / (secs + parse_secs),
            }),
        );
    }

    let peak = ALLOC.peak();
    let report: Value = json!({
        "sentences": corpus.len(),
        "source_tokens": text.tokens,
        "vocab": args.vocab,
        "seed": args.seed,
        "corpus_digest": format!("{:016x}", text.digest()),
        "parse_seconds": parse_secs,
        "metrics": results,
        "peak_memory_bytes": peak,
        "peak_memory": curriculum::memory::format_bytes(peak),
        "hardware": {
            "cpu": cpu_model(),
            "logical_cpus": std::thread::available_parallelism().map_or(1, |n| n.get()),
            "threads": rayon::current_num_threads(),
        },
    });
    let rendered = serde_json::to_string_pretty(&report)?;
    match &args.output {
        Some(path) => {
            let mut out = crate::commands::create(path)?;
            writeln!(out, "{rendered}")?;
            out.flush()?;
        }
        None => println!("{rendered}"),
    }
    Ok(())
}
