use std::fmt;
use std::str::FromStr;

use crate::data::Lead;
use crate::error::{Error, Result};

/// Binary outcome: `Af1` means the patient will develop AF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    Af0,
    Af1,
}

impl ClassLabel {
    pub fn index(self) -> usize {
        match self {
            ClassLabel::Af0 => 0,
            ClassLabel::Af1 => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(ClassLabel::Af0),
            1 => Some(ClassLabel::Af1),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ClassLabel::Af0 => ClassLabel::Af1,
            ClassLabel::Af1 => ClassLabel::Af0,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(ClassLabel::Af0),
            "1" => Ok(ClassLabel::Af1),
            other => Err(Error::InvalidArgument(format!("unknown label token {other:?}"))),
        }
    }
}

/// A sampled multi-lead signal, time-major: all leads of sample 0, then sample 1, ...
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f32>,
    n_samples: usize,
    fs: f32,
    leads: Vec<Lead>,
}

impl Waveform {
    pub fn new(samples: Vec<f32>, fs: f32, leads: Vec<Lead>) -> Result<Self> {
        if leads.is_empty() {
            return Err(Error::InvalidRecord("no leads".into()));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidRecord(format!(
                "sampling rate {fs} must be positive"
            )));
        }
        if samples.is_empty() || !samples.len().is_multiple_of(leads.len()) {
            return Err(Error::InvalidRecord(format!(
                "{} samples do not fill {} leads",
                samples.len(),
                leads.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRecord(format!(
                "non-finite sample at time {} lead {}",
                i / leads.len(),
                i % leads.len()
            )));
        }
        let n_samples = samples.len() / leads.len();
        Ok(Self {
            samples,
            n_samples,
            fs,
            leads,
        })
    }

    /// Builds a waveform from one column per lead.
    pub fn from_columns(columns: &[Vec<f32>], fs: f32, leads: Vec<Lead>) -> Result<Self> {
        if columns.len() != leads.len() {
            return Err(Error::Shape(format!(
                "{} columns for {} leads",
                columns.len(),
                leads.len()
            )));
        }
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Shape("columns of unequal length".into()));
        }
        let mut samples = Vec::with_capacity(n * leads.len());
        for t in 0..n {
            samples.extend(columns.iter().map(|c| c[t]));
        }
        Self::new(samples, fs, leads)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_leads(&self) -> usize {
        self.leads.len()
    }

    pub fn fs(&self) -> f32 {
        self.fs
    }

    pub fn leads(&self) -> &[Lead] {
        &self.leads
    }

    pub fn at(&self, t: usize, lead_col: usize) -> f32 {
        self.samples[t * self.leads.len() + lead_col]
    }

    /// Copies one lead out as a contiguous vector.
    pub fn column(&self, lead_col: usize) -> Vec<f32> {
        self.samples
            .iter()
            .skip(lead_col)
            .step_by(self.leads.len())
            .copied()
            .collect()
    }

    pub fn columns(&self) -> Vec<Vec<f32>> {
        (0..self.n_leads()).map(|c| self.column(c)).collect()
    }

    pub fn lead_position(&self, lead: Lead) -> Option<usize> {
        self.leads.iter().position(|&l| l == lead)
    }
}

/// A labelled ECG exam.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub record_id: String,
    pub waveform: Waveform,
    pub label: ClassLabel,
}

impl EcgRecord {
    pub fn new(record_id: impl Into<String>, waveform: Waveform, label: ClassLabel) -> Self {
        Self {
            record_id: record_id.into(),
            waveform,
            label,
        }
    }

    pub fn n_samples(&self) -> usize {
        self.waveform.n_samples()
    }

    pub fn n_leads(&self) -> usize {
        self.waveform.n_leads()
    }
}

/// Separator between an original record id and an augmentation tag.
pub const AUGMENT_SEPARATOR: char = '#';

/// Strips any augmentation suffix, yielding the id of the source record.
pub fn source_id(record_id: &str) -> &str {
    record_id
        .split_once(AUGMENT_SEPARATOR)
        .map_or(record_id, |(base, _)| base)
}
