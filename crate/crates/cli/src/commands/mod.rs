pub mod ablate;
pub mod cam;
pub mod eval;
pub mod filter;
pub mod prepare;
pub mod report;
pub mod synth;
pub mod train;

use std::fs;
use std::path::{Path, PathBuf};

use afnet_core::hashing::sha256_hex;

use crate::error::{io_error, CliError, CliResult};
use crate::{ConfigArgs, RunConfig, TrainFlags};

pub const RUN_CONFIG_FILE: &str = "config.txt";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const RUN_REPORT_FILE: &str = "run_report.txt";
pub const EVAL_REPORT_FILE: &str = "eval_report.txt";

pub(crate) fn create_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub(crate) fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

pub(crate) fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub(crate) fn require_dir(path: &Path, what: &str) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Data(format!(
            "{what} {} is not a directory",
            path.display()
        )))
    }
}

/// Config file, then `--seed`.
pub(crate) fn base_config(common: &ConfigArgs) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load_opt(common.config.as_deref())?;
    cfg.apply("seed", common.seed);
    Ok(cfg)
}

pub(crate) fn apply_train_flags(cfg: &mut RunConfig, f: &TrainFlags) {
    cfg.apply("lr0", f.lr0);
    cfg.apply("patience", f.patience);
    cfg.apply("min_delta", f.min_delta);
    cfg.apply("max_epochs", f.max_epochs);
    cfg.apply("batch_size", f.batch_size);
    cfg.apply("val_fraction", f.val_fraction);
    cfg.apply("filters", f.filters);
}

pub(crate) fn apply_path(cfg: &mut RunConfig, key: &str, p: &Option<PathBuf>) {
    cfg.apply(key, p.as_ref().map(|p| p.display()));
}

pub const TRAIN_KEYS: &[&str] = &[
    "lr0",
    "half_period",
    "patience",
    "min_delta",
    "max_epochs",
    "batch_size",
    "val_fraction",
];
