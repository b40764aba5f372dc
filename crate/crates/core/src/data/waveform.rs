//! The `ECG1` binary waveform file.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "ECG1" | version: u16 = 1 | n_leads: u16 | n_samples: u32 | fs: f32
//!        | n_leads x u8 lead ordinal | n_samples * n_leads x f32 (time-major)
//! ```

use std::fs;
use std::path::Path;

use crate::data::{Lead, Waveform};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ECG1";
pub const VERSION: u16 = 1;
const FIXED_HEADER: usize = 4 + 2 + 2 + 4 + 4;

pub fn encode_ecg(w: &Waveform) -> Vec<u8> {
    let mut out = Vec::with_capacity(FIXED_HEADER + w.n_leads() + w.samples().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(w.n_leads() as u16).to_le_bytes());
    out.extend_from_slice(&(w.n_samples() as u32).to_le_bytes());
    out.extend_from_slice(&w.fs().to_le_bytes());
    out.extend(w.leads().iter().map(|l| l.index() as u8));
    for v in w.samples() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_ecg(bytes: &[u8], path: &Path) -> Result<Waveform> {
    let truncated = |expected: usize| Error::Truncated {
        path: path.to_path_buf(),
        expected,
        actual: bytes.len(),
    };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: "ECG1",
        });
    }
    if bytes.len() < FIXED_HEADER {
        return Err(truncated(FIXED_HEADER));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::InvalidRecord(format!(
            "{}: unsupported waveform version {version}",
            path.display()
        )));
    }
    let n_leads = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let n_samples = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let fs = f32::from_le_bytes(bytes[12..16].try_into().unwrap());
    let expected = FIXED_HEADER + n_leads + n_samples * n_leads * 4;
    if bytes.len() != expected {
        return Err(truncated(expected));
    }
    let leads = bytes[FIXED_HEADER..FIXED_HEADER + n_leads]
        .iter()
        .map(|&b| {
            Lead::from_index(b as usize).ok_or_else(|| {
                Error::InvalidRecord(format!("{}: lead ordinal {b} out of range", path.display()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<f32> = bytes[FIXED_HEADER + n_leads..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if samples.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidRecord(format!(
            "{}: NaN in payload",
            path.display()
        )));
    }
    Waveform::new(samples, fs, leads).map_err(|e| Error::InvalidRecord(format!("{}: {e}", path.display())))
}

pub fn write_ecg(w: &Waveform, path: &Path) -> Result<()> {
    fs::write(path, encode_ecg(w)).map_err(|e| Error::io(path, e))
}

pub fn read_ecg(path: &Path) -> Result<Waveform> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ecg(&bytes, path)
}
