//! Accuracy, AUC, calibration, multi-seed aggregation and the lead and band ablations.

mod ablation;
mod metrics;

pub use ablation::{
    band_conditions, condition_inputs, lead_conditions, run_ablation, run_band_ablation, run_lead_ablation,
    AblationConfig, AblationFailure, AblationRow, AblationTable, Condition,
};
pub use metrics::{
    accuracy, aggregate_runs, auc, auc_pairwise, calibration_curve, confusion, roc_csv, roc_points,
    CalibrationBin, Confusion, RocPoint, ScoredSet,
};
