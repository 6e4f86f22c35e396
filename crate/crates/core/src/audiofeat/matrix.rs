use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

/// Number of feature channels per frame.
pub const FEATURE_ROWS: usize = 539;

const CACHE_MAGIC: &[u8; 4] = b"M2PF";
const CACHE_VERSION: u16 = 1;

/// Standardized features, `rows × cols` (channels × frames), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::invalid(format!(
                "feature data has {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        if cols == 0 {
            return Err(Error::invalid("feature matrix has no frames"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("feature matrix has non-finite values".into()));
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of frames `T`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Keeps at most the first `frames` columns.
    pub fn truncated(&self, frames: usize) -> FeatureMatrix {
        if frames >= self.cols {
            return self.clone();
        }
        let frames = frames.max(1);
        let data = (0..self.rows)
            .flat_map(|r| self.row(r)[..frames].iter().copied())
            .collect();
        FeatureMatrix {
            rows: self.rows,
            cols: frames,
            data,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(14 + 4 * self.data.len());
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 14 || &bytes[..4] != CACHE_MAGIC {
            return Err(Error::Format("not a feature cache file".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != CACHE_VERSION {
            return Err(Error::Format(format!(
                "unsupported feature cache version {version}"
            )));
        }
        let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
        let body = &bytes[14..];
        if body.len() != rows * cols * 4 {
            return Err(Error::Format(format!(
                "feature cache body has {} bytes, expected {}",
                body.len(),
                rows * cols * 4
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        FeatureMatrix::new(rows, cols, data)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        FeatureMatrix::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_round_trip_is_exact() {
        let data: Vec<f32> = (0..3 * 5).map(|v| (v as f32 * 0.37).sin()).collect();
        let m = FeatureMatrix::new(3, 5, data).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..4], b"M2PF");
        assert_eq!(bytes.len(), 14 + 60);
        assert_eq!(FeatureMatrix::from_bytes(&bytes).unwrap(), m);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.m2pf");
        m.save(&path).unwrap();
        assert_eq!(FeatureMatrix::load(&path).unwrap(), m);
    }

    #[test]
    fn corrupt_cache_rejected() {
        let m = FeatureMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        let mut bytes = m.to_bytes();
        assert!(FeatureMatrix::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(FeatureMatrix::from_bytes(&bytes).is_err());
    }

    #[test]
    fn truncation_keeps_leading_frames() {
        let m = FeatureMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let t = m.truncated(2);
        assert_eq!(t.data(), &[1.0, 2.0, 4.0, 5.0]);
        assert_eq!(m.truncated(10), m);
    }
}
