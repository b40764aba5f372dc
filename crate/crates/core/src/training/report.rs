use std::fmt::Write as _;

use crate::models::ModelSpec;
use crate::training::{TrainConfig, TrainHistory};

pub const HISTORY_HEADER: &str = "epoch,train_loss,train_accuracy,val_accuracy,lr";

/// `key=value` header followed by the per-epoch history as CSV.
pub fn run_report(
    spec: &ModelSpec,
    config: &TrainConfig,
    history: &TrainHistory,
    extra: &[(String, String)],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model={}", spec.kind);
    let _ = writeln!(s, "architecture={}", spec.descriptor());
    let _ = writeln!(s, "fingerprint={}", spec.fingerprint());
    for (k, v) in config.to_kv() {
        let _ = writeln!(s, "{k}={v}");
    }
    for (k, v) in extra {
        let _ = writeln!(s, "{k}={v}");
    }
    let _ = writeln!(s, "n_train={}", history.n_train);
    let _ = writeln!(s, "n_val={}", history.n_val);
    let best = history.best_epoch.map_or("none".to_string(), |b| b.to_string());
    let _ = writeln!(s, "best_epoch={best}");
    let _ = writeln!(s, "stop_reason={}", history.stop_reason);
    s.push('\n');
    s.push_str(HISTORY_HEADER);
    s.push('\n');
    for e in &history.epochs {
        let _ = writeln!(
            s,
            "{},{:?},{:?},{:?},{:?}",
            e.epoch, e.train_loss, e.train_accuracy, e.val_accuracy, e.lr
        );
    }
    s
}
