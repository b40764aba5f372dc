//! Splits, shift augmentation, lead selection and per-record standardisation.

mod augment;
mod dataset;
mod splits;

pub use augment::{
    apply_shift, random_shift, select_leads, standardize_ecg, Shift, ShiftSide, MAX_SHIFT, MIN_SHIFT,
};
pub use dataset::{load_raw, Dataset, Preparer, TARGET_FS};
pub use splits::{
    build_splits, disjoint_sources, shift_for, SplitConfig, Splits, NORM_FILE, SPLIT_REPORT_FILE,
    TEST_BALANCED_FILE, TEST_UNBALANCED_FILE, TRAIN_FILE,
};
