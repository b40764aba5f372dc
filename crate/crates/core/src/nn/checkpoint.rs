//! `AFCK` tensor container.
//!
//! ```text
//! "AFCK" | version: u16 | count: u32 |
//!   count x { name_len: u16 | name | rank: u8 | rank x u32 dims | f32 payload }
//! ```
//! Little-endian throughout.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::Tensor;

pub const MAGIC: &[u8; 4] = b"AFCK";
pub const VERSION: u16 = 1;

/// Ordered list of named `f32` tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TensorFile {
    pub entries: Vec<(String, Tensor<f32>)>,
}

impl TensorFile {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for (name, t) in &self.entries {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.rank() as u8);
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        if r.take(4)? != MAGIC {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
                expected: "AFCK",
            });
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::InvalidRecord(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let count = r.u32()? as usize;
        let mut entries = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = r.u16()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::InvalidRecord("tensor name is not UTF-8".into()))?;
            let rank = r.take(1)?[0] as usize;
            let shape = (0..rank)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let data = r
                .take(n * 4)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            entries.push((name, Tensor::new(shape, data)?));
        }
        if r.pos != bytes.len() {
            return Err(Error::InvalidRecord(format!(
                "{} trailing bytes in checkpoint",
                bytes.len() - r.pos
            )));
        }
        Ok(Self { entries })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes, path)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<f32>> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                path: self.path.to_path_buf(),
                expected: self.pos + n,
                actual: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_truncation() {
        let f = TensorFile {
            entries: vec![
                (
                    "a.weight".into(),
                    Tensor::new(vec![2, 3], vec![1.0, -2.0, 3.5, 0.0, 1e-30, 7.0]).unwrap(),
                ),
                ("empty".into(), Tensor::new(vec![0], vec![]).unwrap()),
            ],
        };
        let bytes = f.encode();
        let p = Path::new("x.afck");
        assert_eq!(TensorFile::decode(&bytes, p).unwrap(), f);
        assert!(matches!(
            TensorFile::decode(&bytes[..bytes.len() - 1], p),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            TensorFile::decode(b"NOPE", p),
            Err(Error::BadMagic { .. })
        ));
    }
}
