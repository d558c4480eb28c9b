//! Versioned binary checkpoint container.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "XLTMCKPT" | u32 version | u64 body length | body | u32 crc32
//! body = config | vocabulary | priors | parameter tensors | trace
//! ```
//!
//! The CRC covers every byte before it. All floats are raw `f64` bits, so a
//! roundtrip is bitwise exact.

use std::fs;
use std::path::Path;

use ndarray::Array1;

use super::{TraceRecord, TrainingTrace};
use crate::corpus::{Language, Vocabulary};
use crate::model::{Alignment, ModelConfig, ModelState, Params};
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"XLTMCKPT";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint("unexpected end of body".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("size overflow".into()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Checkpoint("invalid utf-8 string".into()))
    }
    fn f64s(&mut self, expected: usize) -> Result<Vec<f64>> {
        let n = self.usize()?;
        if n != expected {
            return Err(Error::Checkpoint(format!(
                "tensor has {n} values, expected {expected}"
            )));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

fn encode_body(state: &ModelState, trace: &TrainingTrace) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    let c = &state.config;
    w.u64(c.topics as u64);
    w.f64(c.tau);
    w.f64(c.lambda);
    w.u64(c.hidden_dim as u64);
    w.f64(c.dropout);
    w.f64(c.prior_alpha);
    w.u8(match c.alignment {
        Alignment::Tami => 0,
        Alignment::Direct => 1,
    });
    w.u64(c.seed);

    for lang in Language::BOTH {
        let words = state.vocab.words(lang);
        w.u64(words.len() as u64);
        for word in words {
            w.str(word);
        }
    }
    for p in &state.priors {
        w.f64s(p.mean.as_slice().unwrap());
        w.f64s(p.var.as_slice().unwrap());
    }
    let names = Params::tensor_names();
    let tensors = state.params.tensors();
    w.u32(tensors.len() as u32);
    for (name, t) in names.iter().zip(tensors) {
        w.str(name);
        w.f64s(t);
    }
    w.u64(trace.records.len() as u64);
    for r in &trace.records {
        w.u64(r.epoch as u64);
        w.f64(r.total);
        w.f64(r.tami);
        w.f64(r.tm);
        w.f64(r.cosine_distance);
    }
    w.0
}

pub fn encode_checkpoint(state: &ModelState, trace: &TrainingTrace) -> Vec<u8> {
    let body = encode_body(state, trace);
    let mut out = Vec::with_capacity(HEADER_LEN + body.len() + 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(&body);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ModelState, TrainingTrace)> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(Error::Checkpoint("file too short".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let body_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    if bytes.len() != HEADER_LEN + body_len + 4 {
        return Err(Error::Checkpoint(format!(
            "length mismatch: header declares {} bytes, file has {}",
            HEADER_LEN + body_len + 4,
            bytes.len()
        )));
    }
    let (payload, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(payload) != u32::from_le_bytes(crc.try_into().unwrap()) {
        return Err(Error::Checkpoint("checksum mismatch".into()));
    }

    let mut r = Reader {
        buf: &payload[HEADER_LEN..],
        pos: 0,
    };
    let config = ModelConfig {
        topics: r.usize()?,
        tau: r.f64()?,
        lambda: r.f64()?,
        hidden_dim: r.usize()?,
        dropout: r.f64()?,
        prior_alpha: r.f64()?,
        alignment: match r.u8()? {
            0 => Alignment::Tami,
            1 => Alignment::Direct,
            t => return Err(Error::Checkpoint(format!("unknown alignment tag {t}"))),
        },
        seed: r.u64()?,
    };
    let mut words: [Vec<String>; 2] = Default::default();
    for list in &mut words {
        let n = r.usize()?;
        for _ in 0..n {
            list.push(r.str()?);
        }
    }
    let [l1, l2] = words;
    let vocab = Vocabulary::from_words(l1, l2)?;
    let mut state = ModelState::new(vocab, config.clone())?;
    let k = config.topics;
    for p in &mut state.priors {
        p.mean = Array1::from(r.f64s(k)?);
        p.var = Array1::from(r.f64s(k)?);
    }
    let names = Params::tensor_names();
    let count = r.u32()? as usize;
    if count != names.len() {
        return Err(Error::Checkpoint(format!(
            "{count} tensors, expected {}",
            names.len()
        )));
    }
    for (name, t) in names.iter().zip(state.params.tensors_mut()) {
        let got = r.str()?;
        if &got != name {
            return Err(Error::Checkpoint(format!(
                "tensor {got:?}, expected {name:?}"
            )));
        }
        let values = r.f64s(t.len())?;
        t.copy_from_slice(&values);
    }
    let n = r.usize()?;
    let mut trace = TrainingTrace::default();
    for _ in 0..n {
        trace.records.push(TraceRecord {
            epoch: r.usize()?,
            total: r.f64()?,
            tami: r.f64()?,
            tm: r.f64()?,
            cosine_distance: r.f64()?,
        });
    }
    if r.pos != r.buf.len() {
        return Err(Error::Checkpoint("trailing bytes in body".into()));
    }
    state.validate()?;
    Ok((state, trace))
}

pub fn save_checkpoint(state: &ModelState, trace: &TrainingTrace, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(state, trace)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelState, TrainingTrace)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
