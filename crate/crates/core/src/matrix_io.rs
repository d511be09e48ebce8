//! Binary container shared by vertex embeddings and feature matrices.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "NGGM" | version u32 | kind u8 | rows u64 | cols u64
//! | meta_len u32 | meta (UTF-8 JSON) | rows*cols f64 row-major
//! | sha256 of all preceding bytes
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"NGGM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MatrixKind {
    VertexEmbedding = 1,
    Features = 2,
}

pub fn encode(kind: MatrixKind, data: &Array2<f64>, meta: &serde_json::Value) -> Vec<u8> {
    let meta = serde_json::to_vec(meta).expect("metadata serializes");
    let (rows, cols) = data.dim();
    let mut buf = Vec::with_capacity(4 + 4 + 1 + 16 + 4 + meta.len() + rows * cols * 8 + 32);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(kind as u8);
    buf.extend_from_slice(&(rows as u64).to_le_bytes());
    buf.extend_from_slice(&(cols as u64).to_le_bytes());
    buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    buf.extend_from_slice(&meta);
    for x in data.iter() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Format("truncated matrix file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(expected: MatrixKind, bytes: &[u8]) -> Result<(Array2<f64>, serde_json::Value)> {
    if bytes.len() < 32 {
        return Err(Error::Format("truncated matrix file".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Format("checksum mismatch, file is corrupt".into()));
    }
    let mut c = Cursor { bytes: body, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let kind = c.take(1)?[0];
    if kind != expected as u8 {
        return Err(Error::Format(format!("expected matrix kind {}, found {kind}", expected as u8)));
    }
    let rows = c.u64()? as usize;
    let cols = c.u64()? as usize;
    let meta_len = c.u32()? as usize;
    let meta: serde_json::Value = serde_json::from_slice(c.take(meta_len)?)?;
    let n = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("matrix dimensions overflow".into()))?;
    let payload = c.take(n)?;
    if c.pos != body.len() {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    let values = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let data = Array2::from_shape_vec((rows, cols), values).expect("shape checked");
    Ok((data, meta))
}

pub fn write(path: &Path, kind: MatrixKind, data: &Array2<f64>, meta: &serde_json::Value) -> Result<()> {
    fs::write(path, encode(kind, data, meta))?;
    Ok(())
}

pub fn read(path: &Path, kind: MatrixKind) -> Result<(Array2<f64>, serde_json::Value)> {
    decode(kind, &fs::read(path)?)
}
