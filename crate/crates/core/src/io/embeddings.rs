//! Embedding file format: magic `EMB1`, little-endian u32 L and u32 D, then
//! L×D 32-bit floats row-major. The chain id is the file stem (`<chain>.emb`).

use std::path::Path;

use crate::error::{Error, Result};
use crate::netbuild::EmbeddingTable;
use crate::numcore::DenseMatrix;

pub const EMBEDDING_MAGIC: &[u8; 4] = b"EMB1";

/// Serializes the table; f64 values are narrowed to f32 on write.
pub fn render_embeddings(table: &EmbeddingTable) -> Vec<u8> {
    let (rows, cols) = table.matrix.shape();
    let mut out = Vec::with_capacity(12 + 4 * rows * cols);
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for v in table.matrix.data() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn write_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    std::fs::write(path, render_embeddings(table)).map_err(|e| Error::io(path, e))
}

/// Parses embedding bytes; the conversion to f64 is explicit and lossless.
pub fn parse_embeddings(bytes: &[u8], chain_id: &str, path: &str) -> Result<EmbeddingTable> {
    let fail = |off: usize, msg: &str| {
        Error::Input(format!("{path}: offset {off}: {msg}"))
    };
    if bytes.len() < 12 {
        return Err(fail(0, "file shorter than the 12-byte header"));
    }
    if &bytes[0..4] != EMBEDDING_MAGIC {
        return Err(fail(0, "bad magic, expected EMB1"));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = 12 + 4usize
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| fail(4, "dimension overflow"))?;
    if bytes.len() != expected {
        return Err(fail(
            bytes.len().min(expected),
            &format!("expected {expected} bytes for {rows}x{cols}, found {}", bytes.len()),
        ));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for (i, chunk) in bytes[12..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(fail(12 + 4 * i, "non-finite embedding value"));
        }
        data.push(v as f64);
    }
    Ok(EmbeddingTable {
        chain_id: chain_id.to_string(),
        matrix: DenseMatrix::from_vec(rows, cols, data)?,
    })
}

/// Reads `<chain>.emb`; the chain id comes from the file stem.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let chain_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Input(format!("{}: cannot derive a chain id", path.display())))?
        .to_string();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&bytes, &chain_id, &path.display().to_string())
}
