//! Batch stream encodings for external trainers.
//!
//! JSON-lines: one `{"t":<step>,"ids":[...]}` object per line.
//!
//! Binary: per batch a little-endian `u32` payload length followed by the
//! payload `t: u64`, `n: u32`, then `n` ids as `u32`.

use std::io::{self, BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::Batch;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub t: u64,
    pub ids: Vec<usize>,
}

impl From<&Batch> for BatchRecord {
    fn from(b: &Batch) -> Self {
        Self {
            t: b.step,
            ids: b.sample_ids.clone(),
        }
    }
}

pub fn write_jsonl<W: Write>(batch: &Batch, mut out: W) -> io::Result<()> {
    serde_json::to_writer(&mut out, &BatchRecord::from(batch))?;
    out.write_all(b"\n")
}

pub fn read_jsonl<R: BufRead>(input: R) -> io::Result<Vec<BatchRecord>> {
    input
        .lines()
        .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|line| serde_json::from_str(&line?).map_err(io::Error::from))
        .collect()
}

pub fn write_binary<W: Write>(batch: &Batch, mut out: W) -> io::Result<()> {
    let n = batch.sample_ids.len();
    let payload_len = 12 + 4 * n;
    let mut buf = Vec::with_capacity(4 + payload_len);
    buf.extend_from_slice(&(payload_len as u32).to_le_bytes());
    buf.extend_from_slice(&batch.step.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    for &id in &batch.sample_ids {
        let id = u32::try_from(id)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "sample id exceeds u32"))?;
        buf.extend_from_slice(&id.to_le_bytes());
    }
    out.write_all(&buf)
}

pub fn read_binary<R: Read>(mut input: R) -> io::Result<Vec<BatchRecord>> {
    let invalid = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_owned());
    let mut records = Vec::new();
    loop {
        let mut len = [0u8; 4];
        match input.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e),
        }
        let len = u32::from_le_bytes(len) as usize;
        if len < 12 {
            return Err(invalid("record shorter than its header"));
        }
        let mut payload = vec![0u8; len];
        input.read_exact(&mut payload)?;
        let t = u64::from_le_bytes(payload[..8].try_into().unwrap());
        let n = u32::from_le_bytes(payload[8..12].try_into().unwrap()) as usize;
        if len != 12 + 4 * n {
            return Err(invalid("record length does not match id count"));
        }
        let ids = payload[12..]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        records.push(BatchRecord { t, ids });
    }
    Ok(records)
}
