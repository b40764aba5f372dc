use crate::data::{read_ecg, source_id, ClassLabel, EcgRecord, Lead, ManifestRow, NormStats, TabularRecord};
use crate::dsp::{
    decimate_waveform, design_butterworth_bandpass, filter_waveform, BandSpec, SosFilter, BANDPASS_ORDER,
};
use crate::error::{Error, Result};
use crate::models::{Batch, ModelKind};
use crate::nn::Tensor;
use crate::pipeline::{apply_shift, select_leads, standardize_ecg, Shift};
use crate::scalar::Scalar;

/// Working sampling rate of every model input.
pub const TARGET_FS: f32 = 500.0;

/// Reads the waveform of a manifest row and brings it to 500 Hz. The record keeps the row's
/// id, shift tag included.
pub fn load_raw(row: &ManifestRow) -> Result<EcgRecord> {
    let mut w = read_ecg(&row.path)?;
    if w.fs() == 2.0 * TARGET_FS {
        w = decimate_waveform(&w)?;
    } else if w.fs() != TARGET_FS {
        return Err(Error::InvalidRecord(format!(
            "{}: sampling rate {} Hz is neither 500 nor 1000",
            row.path.display(),
            w.fs()
        )));
    }
    Ok(EcgRecord::new(row.record_id.clone(), w, row.label))
}

/// Band filter, lead selection, shift and standardisation, in that order.
#[derive(Debug, Clone, Default)]
pub struct Preparer {
    pub leads: Option<Vec<Lead>>,
    pub filter: Option<SosFilter>,
}

impl Preparer {
    pub fn new(leads: Option<Vec<Lead>>, band: Option<BandSpec>) -> Result<Self> {
        let filter = band
            .map(|b| design_butterworth_bandpass(b, TARGET_FS as f64, BANDPASS_ORDER))
            .transpose()?;
        Ok(Self { leads, filter })
    }

    /// `raw` must be at 500 Hz; a shift tag in its id is applied after filtering.
    pub fn prepare(&self, raw: &EcgRecord) -> Result<EcgRecord> {
        self.prepare_as(raw, &raw.record_id)
    }

    /// Prepares `raw` as if it carried `record_id`, so one loaded waveform can serve both a
    /// record and its shifted copy.
    pub fn prepare_as(&self, raw: &EcgRecord, record_id: &str) -> Result<EcgRecord> {
        let shift = Shift::from_record_id(record_id)?;
        let mut rec = EcgRecord::new(source_id(record_id), raw.waveform.clone(), raw.label);
        if let Some(f) = &self.filter {
            rec.waveform = filter_waveform(f, &rec.waveform)?;
        }
        if let Some(leads) = &self.leads {
            rec = select_leads(&rec, leads)?;
        }
        if let Some(s) = shift {
            rec = apply_shift(&rec, s)?;
        }
        let mut out = standardize_ecg(&rec)?;
        out.record_id = record_id.to_string();
        Ok(out)
    }
}

/// Model-ready examples held in memory: waveforms channel-major, tabular rows normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    n_leads: usize,
    n_samples: usize,
    ecg: Vec<Vec<f32>>,
    tab: Vec<Vec<f32>>,
}

impl Dataset {
    /// Builds a dataset from prepared records and their tabular rows. Either side may be
    /// omitted when the model does not use it.
    pub fn new(
        ids: Vec<String>,
        labels: Vec<ClassLabel>,
        ecg: Option<Vec<EcgRecord>>,
        tab: Option<(Vec<TabularRecord>, &NormStats)>,
    ) -> Result<Self> {
        let n = ids.len();
        let (mut n_leads, mut n_samples, mut ecg_data) = (0, 0, Vec::new());
        if let Some(records) = ecg {
            if records.len() != n {
                return Err(Error::Shape(format!(
                    "{} waveforms for {n} examples",
                    records.len()
                )));
            }
            if let Some(first) = records.first() {
                n_leads = first.n_leads();
                n_samples = first.n_samples();
            }
            for r in &records {
                if r.n_leads() != n_leads || r.n_samples() != n_samples {
                    return Err(Error::Shape(format!(
                        "record '{}' is {}x{}, expected {n_samples}x{n_leads}",
                        r.record_id,
                        r.n_samples(),
                        r.n_leads()
                    )));
                }
                ecg_data.push(r.waveform.columns().concat());
            }
        }
        let mut tab_data = Vec::new();
        if let Some((rows, norm)) = tab {
            if rows.len() != n {
                return Err(Error::Shape(format!(
                    "{} tabular rows for {n} examples",
                    rows.len()
                )));
            }
            tab_data = rows
                .iter()
                .map(|r| norm.apply(r.values()).into_iter().map(|v| v as f32).collect())
                .collect();
        }
        Ok(Self {
            ids,
            labels: labels.iter().map(|l| l.index()).collect(),
            n_leads,
            n_samples,
            ecg: ecg_data,
            tab: tab_data,
        })
    }

    /// Loads and prepares the rows for a model of the given kind.
    pub fn load(rows: &[ManifestRow], prep: &Preparer, kind: ModelKind, norm: &NormStats) -> Result<Self> {
        Self::load_with(rows, kind, norm, |r| prep.prepare(&load_raw(r)?))
    }

    /// Builds the dataset one record at a time from `waveform`, which returns the prepared
    /// record for a row. Only called when the model uses waveforms.
    pub fn load_with<F>(
        rows: &[ManifestRow],
        kind: ModelKind,
        norm: &NormStats,
        mut waveform: F,
    ) -> Result<Self>
    where
        F: FnMut(&ManifestRow) -> Result<EcgRecord>,
    {
        let mut ds = Self::from_rows(rows, None, kind, norm)?;
        if kind.uses_ecg() {
            for (i, row) in rows.iter().enumerate() {
                let r = waveform(row)?;
                if i == 0 {
                    ds.n_leads = r.n_leads();
                    ds.n_samples = r.n_samples();
                } else if r.n_leads() != ds.n_leads || r.n_samples() != ds.n_samples {
                    return Err(Error::Shape(format!(
                        "record '{}' is {}x{}, expected {}x{}",
                        r.record_id,
                        r.n_samples(),
                        r.n_leads(),
                        ds.n_samples,
                        ds.n_leads
                    )));
                }
                ds.ecg.push(r.waveform.columns().concat());
            }
        }
        Ok(ds)
    }

    /// Like [`Dataset::load`] but with waveforms already prepared.
    pub fn from_rows(
        rows: &[ManifestRow],
        ecg: Option<Vec<EcgRecord>>,
        kind: ModelKind,
        norm: &NormStats,
    ) -> Result<Self> {
        let tab = kind
            .uses_tab()
            .then(|| (rows.iter().map(|r| r.tabular.clone()).collect(), norm));
        Self::new(
            rows.iter().map(|r| r.record_id.clone()).collect(),
            rows.iter().map(|r| r.label).collect(),
            ecg,
            tab,
        )
    }

    /// A tabular-only dataset from already-scaled feature rows.
    pub fn from_features(ids: Vec<String>, labels: Vec<usize>, rows: Vec<Vec<f32>>) -> Result<Self> {
        if ids.len() != labels.len() || ids.len() != rows.len() {
            return Err(Error::Shape(format!(
                "{} ids, {} labels and {} feature rows",
                ids.len(),
                labels.len(),
                rows.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidArgument(format!("label {bad} is not 0 or 1")));
        }
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Shape("ragged feature rows".into()));
        }
        Ok(Self {
            ids,
            labels,
            n_leads: 0,
            n_samples: 0,
            ecg: Vec::new(),
            tab: rows,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_leads(&self) -> usize {
        self.n_leads
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn has_ecg(&self) -> bool {
        !self.ecg.is_empty()
    }

    pub fn has_tab(&self) -> bool {
        !self.tab.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        let pick = |v: &Vec<Vec<f32>>| {
            if v.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| v[i].clone()).collect()
            }
        };
        Self {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            n_leads: self.n_leads,
            n_samples: self.n_samples,
            ecg: pick(&self.ecg),
            tab: pick(&self.tab),
        }
    }

    /// Stacks the chosen examples into `[B, C, T]` and `[B, F]` tensors.
    pub fn batch<S: Scalar>(&self, idx: &[usize]) -> Result<(Batch<S>, Vec<usize>)> {
        let stack = |v: &Vec<Vec<f32>>, shape: Vec<usize>| -> Result<Option<Tensor<S>>> {
            if v.is_empty() {
                return Ok(None);
            }
            let mut data = Vec::with_capacity(shape.iter().product());
            for &i in idx {
                data.extend(v[i].iter().map(|&x| S::lit(x as f64)));
            }
            Tensor::new(shape, data).map(Some)
        };
        let ecg = stack(&self.ecg, vec![idx.len(), self.n_leads, self.n_samples])?;
        let n_feat = self.tab.first().map_or(0, Vec::len);
        let tab = stack(&self.tab, vec![idx.len(), n_feat])?;
        Ok((Batch { ecg, tab }, idx.iter().map(|&i| self.labels[i]).collect()))
    }
}
