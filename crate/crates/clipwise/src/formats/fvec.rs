//! `FVC1` feature matrices: magic, `dim` and `count` as u32 LE, then
//! `count × dim` f32 LE values, row-major.

use super::Reader;
use crate::error::{AppError, Result};

pub const MAGIC: &[u8; 4] = b"FVC1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(AppError::Format("feature dim must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(AppError::Format(format!("{} values do not fill rows of {dim}", data.len())));
        }
        Ok(FeatureMatrix { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(AppError::Format("ragged feature rows".into()));
        }
        Self::new(dim, rows.iter().flatten().map(|&v| v as f32).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.count() as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "FVEC");
        r.magic(MAGIC)?;
        let dim = r.u32()? as usize;
        let count = r.u32()? as usize;
        let n = dim
            .checked_mul(count)
            .ok_or_else(|| AppError::Format(format!("FVEC header {count}×{dim} overflows")))?;
        if n.checked_mul(4).is_none_or(|b| b > bytes.len()) {
            return Err(AppError::Format(format!(
                "FVEC truncated: header declares {count}×{dim} values, file has {} bytes",
                bytes.len()
            )));
        }
        let data = (0..n).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
        if !r.at_end() {
            return Err(AppError::Format("trailing bytes after FVEC payload".into()));
        }
        if dim == 0 {
            return Err(AppError::Format("FVEC dim is zero".into()));
        }
        Self::new(dim, data)
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_bytes(&crate::error::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        crate::error::write(path, &self.to_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let m = FeatureMatrix::new(2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = m.to_bytes();
        assert_eq!(&b[..4], b"FVC1");
        assert_eq!(&b[4..8], &2u32.to_le_bytes());
        assert_eq!(&b[8..12], &3u32.to_le_bytes());
        assert_eq!(&b[12..16], &1.0f32.to_le_bytes());
        assert_eq!(b.len(), 12 + 24);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let m = FeatureMatrix::new(3, vec![0.5; 6]).unwrap();
        let mut b = m.to_bytes();
        assert!(matches!(FeatureMatrix::from_bytes(&b[..b.len() - 1]), Err(AppError::Format(_))));
        b[0] = b'X';
        assert!(matches!(FeatureMatrix::from_bytes(&b), Err(AppError::Format(_))));
        assert!(matches!(FeatureMatrix::from_bytes(b"FV"), Err(AppError::Format(_))));
    }

    #[test]
    fn empty_matrix_roundtrips() {
        let m = FeatureMatrix::new(4, vec![]).unwrap();
        assert_eq!(FeatureMatrix::from_bytes(&m.to_bytes()).unwrap(), m);
    }
}
