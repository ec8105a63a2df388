//! Binary checkpoint container.
//!
//! Layout: 8-byte magic, `u32` version, `u8` byte-order tag (1 little,
//! 2 big), `u32` metadata count, then length-prefixed UTF-8 key/value
//! pairs, `u32` tensor count, then per tensor a length-prefixed name,
//! `u32` rank, `u64` dimensions and the `f64` values. All integers and
//! floats use the declared byte order.

use std::collections::BTreeMap;

use super::{Tensor, TensorError};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"LNASCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;
const LITTLE: u8 = 1;
const BIG: u8 = 2;
const MAX_RANK: u32 = 8;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub metadata: BTreeMap<String, String>,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

/// Serialises in little-endian order.
pub fn write_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(LITTLE);
    out.extend_from_slice(&(ck.metadata.len() as u32).to_le_bytes());
    for (k, v) in &ck.metadata {
        put_str(&mut out, k);
        put_str(&mut out, v);
    }
    out.extend_from_slice(&(ck.tensors.len() as u32).to_le_bytes());
    for (name, t) in &ck.tensors {
        put_str(&mut out, name);
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for d in t.shape() {
            out.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    big: bool,
}

fn bad(msg: impl Into<String>) -> TensorError {
    TensorError::Checkpoint(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TensorError> {
        if self.buf.len() - self.pos < n {
            return Err(bad(format!("truncated at byte {} (need {n} more)", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn u32(&mut self) -> Result<u32, TensorError> {
        let b: [u8; 4] = self.take(4)?.try_into().unwrap();
        Ok(if self.big { u32::from_be_bytes(b) } else { u32::from_le_bytes(b) })
    }

    fn u64(&mut self) -> Result<u64, TensorError> {
        let b: [u8; 8] = self.take(8)?.try_into().unwrap();
        Ok(if self.big { u64::from_be_bytes(b) } else { u64::from_le_bytes(b) })
    }

    fn f64(&mut self) -> Result<f64, TensorError> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn string(&mut self) -> Result<String, TensorError> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| bad("string is not UTF-8"))
    }
}

/// Parses and bounds-checks a checkpoint. Rejects non-finite values and
/// trailing bytes.
pub fn parse_checkpoint(bytes: &[u8]) -> Result<Checkpoint, TensorError> {
    let mut r = Reader { buf: bytes, pos: 0, big: false };
    if r.take(8).map_err(|_| bad("missing magic"))? != CHECKPOINT_MAGIC {
        return Err(bad("bad magic"));
    }
    let version_bytes: [u8; 4] = r.take(4)?.try_into().unwrap();
    r.big = match r.take(1)?[0] {
        LITTLE => false,
        BIG => true,
        other => return Err(bad(format!("unknown byte-order tag {other}"))),
    };
    let version = if r.big { u32::from_be_bytes(version_bytes) } else { u32::from_le_bytes(version_bytes) };
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let n_meta = r.u32()? as usize;
    let mut metadata = BTreeMap::new();
    for _ in 0..n_meta {
        let k = r.string()?;
        let v = r.string()?;
        if metadata.insert(k.clone(), v).is_some() {
            return Err(bad(format!("duplicate metadata key {k}")));
        }
    }
    let n_tensors = r.u32()? as usize;
    let mut tensors: Vec<(String, Tensor)> = Vec::new();
    for _ in 0..n_tensors {
        let name = r.string()?;
        if tensors.iter().any(|(n, _)| *n == name) {
            return Err(bad(format!("duplicate tensor {name}")));
        }
        let rank = r.u32()?;
        if rank > MAX_RANK {
            return Err(bad(format!("tensor {name} has rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank as usize);
        let mut count: u64 = 1;
        for _ in 0..rank {
            let d = r.u64()?;
            count = count.checked_mul(d).ok_or_else(|| bad("element count overflows"))?;
            shape.push(usize::try_from(d).map_err(|_| bad("dimension too large"))?);
        }
        if count > (r.remaining() / 8) as u64 {
            return Err(bad(format!("tensor {name} needs {count} values, file is too short")));
        }
        let mut data = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let v = r.f64()?;
            if !v.is_finite() {
                return Err(bad(format!("tensor {name} holds a non-finite value")));
            }
            data.push(v);
        }
        tensors.push((name, Tensor::new(shape, data)?));
    }
    if r.remaining() != 0 {
        return Err(bad(format!("{} trailing bytes", r.remaining())));
    }
    Ok(Checkpoint { metadata, tensors })
}
