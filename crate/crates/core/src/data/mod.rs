//! Domain types, the waveform and manifest file formats, and tabular normalisation.

mod lead;
mod manifest;
mod record;
mod tabular;
pub mod waveform;

pub use lead::{parse_lead_list, Lead};
pub use manifest::{read_manifest, ClassCounts, Manifest, ManifestRow, MANIFEST_HEADER};
pub use record::{source_id, ClassLabel, EcgRecord, Waveform, AUGMENT_SEPARATOR};
pub use tabular::{normalize_tabular, Feature, Gender, NormStats, TabularRecord, N_FEATURES};
pub use waveform::{read_ecg, write_ecg};

use crate::error::Result;

/// Loads the waveform a manifest row points at.
pub fn load_record(row: &ManifestRow) -> Result<EcgRecord> {
    Ok(EcgRecord::new(
        row.record_id.clone(),
        read_ecg(&row.path)?,
        row.label,
    ))
}
