use std::path::Path;

use afnet_core::data::{read_manifest, NormStats, N_FEATURES};
use afnet_core::models::{ModelKind, ModelSpec};
use afnet_core::pipeline::{Dataset, Preparer, NORM_FILE, TRAIN_FILE};
use afnet_core::training::{run_report, save_checkpoint, train};

use crate::commands::{
    apply_path, apply_train_flags, base_config, create_out, file_sha256, require_dir, write_text,
    CHECKPOINT_FILE, RUN_CONFIG_FILE, RUN_REPORT_FILE, TRAIN_KEYS,
};
use crate::error::CliResult;
use crate::{RunConfig, TrainArgs};

pub const RUN_KEYS: &[&str] = &["seed", "model", "leads", "band", "filters", "splits"];

/// Input preparation a run was trained with.
pub fn preparer(cfg: &RunConfig, kind: ModelKind) -> CliResult<Preparer> {
    let leads = kind.uses_ecg().then(|| cfg.leads()).transpose()?;
    Ok(Preparer::new(leads, cfg.band()?)?)
}

pub fn model_spec(cfg: &RunConfig) -> CliResult<ModelSpec> {
    Ok(ModelSpec::build(
        cfg.model()?,
        cfg.leads()?,
        cfg.filters()?,
        N_FEATURES,
    )?)
}

pub fn run(a: TrainArgs) -> CliResult<()> {
    let mut cfg = base_config(&a.common)?;
    cfg.apply("model", a.model.as_deref());
    apply_path(&mut cfg, "splits", &a.splits);
    apply_train_flags(&mut cfg, &a.train);
    cfg.apply("leads", a.leads.as_deref());
    cfg.apply("band", a.band.as_deref());
    let splits = cfg.require_path("splits")?;
    require_dir(&splits, "splits directory")?;

    let kind = cfg.model()?;
    let spec = model_spec(&cfg)?;
    let train_cfg = cfg.train_config()?;
    let keys: Vec<&str> = RUN_KEYS.iter().chain(TRAIN_KEYS).copied().collect();
    let resolved = cfg.resolved(&keys)?;

    let train_path = splits.join(TRAIN_FILE);
    let rows = read_manifest(&train_path)?;
    let norm = NormStats::load(&splits.join(NORM_FILE))?;
    let ds = Dataset::load(rows.rows(), &preparer(&cfg, kind)?, kind, &norm)?;
    let (params, history) = train::<f32>(&spec, &ds, &train_cfg)?;

    create_out(&a.out)?;
    let ckpt = a.out.join(CHECKPOINT_FILE);
    save_checkpoint(&ckpt, &spec, &params, Some(&norm))?;
    let mut extra: Vec<(String, String)> = resolved
        .pairs()
        .into_iter()
        .filter(|(k, _)| RUN_KEYS.contains(&k.as_str()) && k != "seed")
        .collect();
    extra.push(("train_manifest_sha256".into(), file_sha256(&train_path)?));
    extra.push(("checkpoint_sha256".into(), file_sha256(&ckpt)?));
    write_text(
        &a.out.join(RUN_REPORT_FILE),
        &run_report(&spec, &train_cfg, &history, &extra),
    )?;
    write_text(&a.out.join(RUN_CONFIG_FILE), &resolved.to_text())?;
    summarize(&a.out, &history);
    Ok(())
}

fn summarize(out: &Path, h: &afnet_core::training::TrainHistory) {
    let best = h.best_epoch.map_or("none".to_string(), |b| b.to_string());
    let val = h
        .best_epoch
        .and_then(|b| h.epochs.get(b))
        .map_or(f64::NAN, |e| e.val_accuracy);
    println!(
        "trained {} epochs ({}), best epoch {best} with validation accuracy {val:.4}",
        h.epochs.len(),
        h.stop_reason
    );
    println!("wrote run to {}", out.display());
}
