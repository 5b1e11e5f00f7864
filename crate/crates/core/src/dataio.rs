//! On-disk formats: JSONL text corpora and EMB1 embedding matrices.
//!
//! EMB1 layout, little-endian throughout:
//!
//! | bytes  | content                       |
//! |--------|-------------------------------|
//! | 0..4   | magic `EMB1`                  |
//! | 4..8   | `u32` version, must be 1      |
//! | 8..12  | `u32` row count               |
//! | 12..16 | `u32` column count            |
//! | 16..   | `f32` values, row-major       |
//!
//! Bytes past the declared payload are rejected.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

pub const EMB1_MAGIC: [u8; 4] = *b"EMB1";
pub const EMB1_VERSION: u32 = 1;
pub const EMB1_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextRecord {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct TextCorpus {
    pub records: Vec<TextRecord>,
    pub source_path: PathBuf,
}

impl TextCorpus {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.text.as_str())
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    text: String,
}

pub fn read_text_corpus(path: impl AsRef<Path>) -> Result<TextCorpus> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::MalformedLine {
                line: line_no,
                reason: "not valid UTF-8".into(),
            },
            _ => Error::io(path, e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: line_no,
            reason: e.to_string(),
        })?;
        if raw.id.is_empty() {
            return Err(Error::MalformedLine {
                line: line_no,
                reason: "empty id".into(),
            });
        }
        if !seen.insert(raw.id.clone()) {
            return Err(Error::DuplicateId(raw.id));
        }
        records.push(TextRecord {
            id: raw.id,
            text: raw.text,
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyCorpus(path.to_path_buf()));
    }
    Ok(TextCorpus {
        records,
        source_path: path.to_path_buf(),
    })
}

/// Dense row-major `f32` matrix of per-text feature vectors.
///
/// Construction validates shape and finiteness, so every value reaching the
/// numeric modules is a finite float.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f32>,
    label: Option<String>,
}

impl EmbeddingMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f32>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidShape(format!("{n_rows}x{n_cols} has no entries")));
        }
        if data.len() != n_rows * n_cols {
            return Err(Error::InvalidShape(format!(
                "{n_rows}x{n_cols} needs {} values, got {}",
                n_rows * n_cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: pos / n_cols,
                col: pos % n_cols,
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
            label: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch {
                expected: n_cols,
                actual: bad.len(),
            });
        }
        Self::new(rows.len(), n_cols, rows.concat())
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.n_cols)
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            if i >= self.n_rows {
                return Err(Error::InvalidShape(format!("row {i} out of range {}", self.n_rows)));
            }
            data.extend_from_slice(self.row(i));
        }
        let mut out = Self::new(indices.len(), self.n_cols, data)?;
        out.label = self.label.clone();
        Ok(out)
    }

    /// Row-wise concatenation of two matrices with equal column counts.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        if self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                actual: other.n_cols,
            });
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Self::new(self.n_rows + other.n_rows, self.n_cols, data)
    }

    /// Size in bytes of this matrix as an EMB1 file.
    pub fn encoded_len(&self) -> usize {
        EMB1_HEADER_LEN + 4 * self.data.len()
    }

    pub fn to_emb1_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&EMB1_MAGIC);
        out.extend_from_slice(&EMB1_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.n_cols as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_emb1_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != EMB1_MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < EMB1_HEADER_LEN {
            return Err(Error::TruncatedPayload {
                expected: EMB1_HEADER_LEN as u64,
                actual: bytes.len() as u64,
            });
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let version = word(4);
        if version != EMB1_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let n_rows = word(8) as usize;
        let n_cols = word(12) as usize;
        let expected = EMB1_HEADER_LEN as u64 + 4 * n_rows as u64 * n_cols as u64;
        let actual = bytes.len() as u64;
        if actual < expected {
            return Err(Error::TruncatedPayload { expected, actual });
        }
        if actual > expected {
            return Err(Error::TrailingBytes(actual - expected));
        }
        let data = bytes[EMB1_HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::new(n_rows, n_cols, data)
    }
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let m = EmbeddingMatrix::from_emb1_bytes(&bytes)?;
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    Ok(match label {
        Some(l) => m.with_label(l),
        None => m,
    })
}

pub fn write_embeddings(matrix: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&matrix.to_emb1_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
