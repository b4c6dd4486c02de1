//! Parameter checkpoints: `"FSNP"`, u32 version, u32 layer count, then per
//! layer u32 rows, u32 cols and `rows*cols` little-endian f64 values.

use std::path::Path;

use ndarray::Array2;

use super::{EncoderParams, Parameters};
use crate::graphdata::io::write_atomic;
use crate::{Error, Matrix, Result};

pub const FSNP_MAGIC: &[u8; 4] = b"FSNP";
pub const FSNP_VERSION: u32 = 1;

pub fn encode_layers(layers: &[&Matrix]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(FSNP_MAGIC);
    out.extend_from_slice(&FSNP_VERSION.to_le_bytes());
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for m in layers {
        out.extend_from_slice(&(m.nrows() as u32).to_le_bytes());
        out.extend_from_slice(&(m.ncols() as u32).to_le_bytes());
        for v in m.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_layers(bytes: &[u8]) -> Result<Vec<Matrix>> {
    let mut cursor = 0usize;
    let mut take = |len: usize| -> Result<&[u8]> {
        let chunk = bytes
            .get(cursor..cursor + len)
            .ok_or_else(|| Error::Checkpoint("truncated checkpoint".into()))?;
        cursor += len;
        Ok(chunk)
    };
    if take(4)? != FSNP_MAGIC {
        return Err(Error::Checkpoint("missing FSNP magic".into()));
    }
    let word = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize;
    let version = word(take(4)?);
    if version != FSNP_VERSION as usize {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = word(take(4)?);
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let rows = word(take(4)?);
        let cols = word(take(4)?);
        let data = take(rows * cols * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        layers.push(Array2::from_shape_vec((rows, cols), data).expect("shape"));
    }
    if cursor != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes after last layer".into()));
    }
    Ok(layers)
}

pub fn save_encoder(path: &Path, params: &EncoderParams) -> Result<()> {
    write_atomic(path, &encode_layers(&params.tensors()))
}

pub fn load_encoder(path: &Path) -> Result<EncoderParams> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    EncoderParams::from_layers(decode_layers(&bytes)?)
}
