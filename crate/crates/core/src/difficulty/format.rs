//! Scored-corpus text format: a header, then one tab-separated record per
//! sample.
//!
//! ```text
//! # metric=rarity M=2 fields=id,raw_score,cdf,tokens
//! 0  1.5040774  1  3
//! 1  0.405465108  0.5  2
//! ```
//!
//! Values use 9 significant digits. Since every cdf is `k/M`, the reader
//! snaps parsed values back to the exact fraction.

use std::io::{BufRead, Write};

use super::{MetricKind, ScoredCorpus, ScoredSample};
use crate::numfmt::format_significant;
use crate::{Error, Result};

const FIELDS: &str = "id,raw_score,cdf,tokens";

pub fn write_scored<W: Write>(scored: &ScoredCorpus, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "# metric={} M={} fields={FIELDS}",
        scored.metric(),
        scored.len()
    )?;
    for s in scored.samples() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            s.sample_id,
            format_significant(s.raw_score, 9),
            format_significant(s.cdf, 9),
            s.token_cost
        )?;
    }
    Ok(())
}

pub fn read_scored<R: BufRead>(input: R) -> Result<ScoredCorpus> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io("<scored>", e))?,
        None => return Err(format_err(1, "missing header")),
    };
    let (metric, m) = parse_header(&header)?;

    let mut samples = Vec::with_capacity(m);
    for (n, line) in lines.enumerate() {
        let lineno = n + 2;
        let line = line.map_err(|e| Error::io("<scored>", e))?;
        if line.is_empty() {
            continue;
        }
        if samples.len() == m {
            return Err(format_err(lineno, format!("more than M={m} records")));
        }
        samples.push(parse_record(&line, lineno, samples.len(), m)?);
    }
    if samples.len() != m {
        return Err(format_err(
            samples.len() + 2,
            format!("truncated: expected {m} records, found {}", samples.len()),
        ));
    }
    ScoredCorpus::new(metric, samples).map_err(|e| format_err(1, e.to_string()))
}

fn parse_header(line: &str) -> Result<(MetricKind, usize)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| format_err(1, "header must start with `#`"))?;
    let mut metric = None;
    let mut m = None;
    for field in body.split_whitespace() {
        match field.split_once('=') {
            Some(("metric", v)) => {
                metric = Some(
                    v.parse::<MetricKind>()
                        .map_err(|e| format_err(1, e.to_string()))?,
                )
            }
            Some(("M", v)) => {
                m = Some(
                    v.parse::<usize>()
                        .map_err(|_| format_err(1, format!("bad M `{v}`")))?,
                )
            }
            _ => {}
        }
    }
    match (metric, m) {
        (Some(metric), Some(m)) if m > 0 => Ok((metric, m)),
        (Some(_), Some(_)) => Err(format_err(1, "M must be positive")),
        _ => Err(format_err(1, "header needs metric= and M=")),
    }
}

fn parse_record(line: &str, lineno: usize, expected_id: usize, m: usize) -> Result<ScoredSample> {
    let mut cols = line.split('\t');
    let mut next = |name: &str| {
        cols.next()
            .ok_or_else(|| format_err(lineno, format!("missing {name}")))
    };
    let id: usize = parse(next("id")?, lineno, "id")?;
    let raw_score: f64 = parse(next("raw_score")?, lineno, "raw_score")?;
    let cdf: f64 = parse(next("cdf")?, lineno, "cdf")?;
    let token_cost: u32 = parse(next("tokens")?, lineno, "tokens")?;
    if id != expected_id {
        return Err(format_err(
            lineno,
            format!("expected id {expected_id}, found {id}"),
        ));
    }
    let k = (cdf * m as f64).round();
    let exact = k / m as f64;
    if !(1.0..=m as f64).contains(&k) || (exact - cdf).abs() > 1e-8 * exact {
        return Err(format_err(
            lineno,
            format!("cdf {cdf} is not a multiple of 1/{m}"),
        ));
    }
    Ok(ScoredSample {
        sample_id: id,
        raw_score,
        cdf: exact,
        token_cost,
    })
}

fn parse<T: std::str::FromStr>(s: &str, lineno: usize, name: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| format_err(lineno, format!("bad {name} `{s}`")))
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}
