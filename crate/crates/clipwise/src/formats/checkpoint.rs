//! `NNK1` parameter checkpoints. After the magic, each tensor is stored as
//! `name_len: u32`, UTF-8 name, `rank: u32`, `rank` extents as u32, then its
//! values as f64, all little-endian. Records run to end of file.

use std::path::Path;

use clipwise_core::nnkern::{assign_params, Parameterized, Tensor};

use super::Reader;
use crate::error::{AppError, Result};

pub const MAGIC: &[u8; 4] = b"NNK1";

pub fn encode<'a>(tensors: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &e in t.shape() {
            out.extend_from_slice(&(e as u32).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Vec<(String, Tensor)>> {
    let mut r = Reader::new(bytes, "checkpoint");
    r.magic(MAGIC)?;
    let mut out = Vec::new();
    while !r.at_end() {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| AppError::Format("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|e| e as usize)).collect::<Result<Vec<_>>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .filter(|&n| n.checked_mul(8).is_some_and(|b| b <= bytes.len()))
            .ok_or_else(|| AppError::Format(format!("tensor {name:?} extents {shape:?} exceed the file")))?;
        let data = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let t = Tensor::from_vec(&shape, data).map_err(|e| AppError::Format(format!("tensor {name:?}: {e}")))?;
        out.push((name, t));
    }
    Ok(out)
}

pub fn model_bytes<M: Parameterized>(model: &M) -> Vec<u8> {
    let params = model.params();
    encode(params.iter().map(|(n, t)| (n.as_str(), *t)))
}

/// Overwrites `model`'s parameters from checkpoint bytes; names and shapes must match.
pub fn load_into<M: Parameterized>(model: &mut M, bytes: &[u8]) -> Result<()> {
    let tensors = decode(bytes)?;
    assign_params(model, &tensors)?;
    Ok(())
}

pub fn save<M: Parameterized>(model: &M, path: impl AsRef<Path>) -> Result<()> {
    crate::error::write(path, &model_bytes(model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_layout() {
        let t = Tensor::from_vec(&[2], vec![1.5, -2.0]).unwrap();
        let b = encode([("ab", &t)]);
        let mut want = b"NNK1".to_vec();
        want.extend_from_slice(&2u32.to_le_bytes());
        want.extend_from_slice(b"ab");
        want.extend_from_slice(&1u32.to_le_bytes());
        want.extend_from_slice(&2u32.to_le_bytes());
        want.extend_from_slice(&1.5f64.to_le_bytes());
        want.extend_from_slice(&(-2.0f64).to_le_bytes());
        assert_eq!(b, want);
        assert_eq!(decode(&b).unwrap(), vec![("ab".to_string(), t)]);
    }

    #[test]
    fn truncated_record_is_a_format_error() {
        let t = Tensor::from_vec(&[3], vec![1.0, 2.0, 3.0]).unwrap();
        let b = encode([("w", &t)]);
        for cut in 5..b.len() {
            assert!(matches!(decode(&b[..cut]), Err(AppError::Format(_))), "cut {cut}");
        }
        assert!(matches!(decode(b"NNK2"), Err(AppError::Format(_))));
    }
}
