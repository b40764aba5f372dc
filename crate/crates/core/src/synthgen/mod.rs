//! Synthetic 12-lead ECGs and tabular rows with controllable class differences.

mod dataset;
mod ecg;
mod params;
mod tabular;

pub use dataset::{synth_dataset, MANIFEST_FILE, PARAMS_FILE, WAVEFORM_DIR};
pub use ecg::{
    beat_template, beat_waves, draw_record, render_clean, synth_ecg, synth_ecg_with_beats, RecordDraw,
};
pub use params::{ClassParams, LeadWeights, NoiseParams, SynthParams};
pub use tabular::{quartiles, synth_tabular, Quartiles, SkewedMarginal, MALE_FRACTION};
