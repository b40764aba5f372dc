//! Resampling and Butterworth band-pass filtering.

mod bands;
mod butterworth;
mod resample;
mod sos;

pub use bands::{BandSpec, BAND_CATALOG};
pub use butterworth::{design_butterworth_bandpass, design_butterworth_lowpass};
pub use resample::{decimate_by_two, Decimated, ANTI_ALIAS_FRACTION, ANTI_ALIAS_ORDER};
pub use sos::{apply_sos, frequency_response, FilterKind, Section, SosFilter};

use crate::data::Waveform;
use crate::error::Result;

/// Order of the band-pass prototype used throughout.
pub const BANDPASS_ORDER: usize = 4;

/// Filters every lead of a waveform independently.
pub fn filter_waveform(filter: &SosFilter, w: &Waveform) -> Result<Waveform> {
    let cols = w
        .columns()
        .iter()
        .map(|c| filter.apply(c))
        .collect::<Result<Vec<_>>>()?;
    Waveform::from_columns(&cols, w.fs(), w.leads().to_vec())
}

/// Decimates every lead by two.
pub fn decimate_waveform(w: &Waveform) -> Result<Waveform> {
    let mut fs = w.fs() as f64;
    let cols = w
        .columns()
        .iter()
        .map(|c| {
            let d = decimate_by_two(c, w.fs() as f64)?;
            fs = d.fs;
            Ok(d.signal)
        })
        .collect::<Result<Vec<_>>>()?;
    Waveform::from_columns(&cols, fs as f32, w.leads().to_vec())
}
