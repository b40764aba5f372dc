use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use afnet_core::data::{read_manifest, NormStats, N_FEATURES};
use afnet_core::evalx::{accuracy, auc, calibration_curve, roc_csv, roc_points, ScoredSet};
use afnet_core::pipeline::{Dataset, TEST_BALANCED_FILE, TEST_UNBALANCED_FILE};
use afnet_core::training::{load_checkpoint, predict_dataset, Checkpoint};

use crate::commands::train::preparer;
use crate::commands::{
    create_out, file_sha256, require_dir, write_text, CHECKPOINT_FILE, EVAL_REPORT_FILE, RUN_CONFIG_FILE,
};
use crate::error::{CliError, CliResult};
use crate::{EvalArgs, RunConfig};

pub const THRESHOLD: f64 = 0.5;

/// A trained run directory: resolved config plus checkpoint.
pub struct Run {
    pub config: RunConfig,
    pub checkpoint: Checkpoint,
    pub checkpoint_path: PathBuf,
}

pub fn load_run(dir: &Path) -> CliResult<Run> {
    require_dir(dir, "run directory")?;
    let config = RunConfig::load(&dir.join(RUN_CONFIG_FILE))?;
    let checkpoint_path = dir.join(CHECKPOINT_FILE);
    let checkpoint = load_checkpoint(&checkpoint_path, None)?;
    let model = config.model()?;
    if checkpoint.spec.kind != model {
        return Err(CliError::Data(format!(
            "{} holds a {} model but the run config says {model}",
            checkpoint_path.display(),
            checkpoint.spec.kind
        )));
    }
    Ok(Run {
        config,
        checkpoint,
        checkpoint_path,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitScore {
    pub name: &'static str,
    pub scored: ScoredSet,
    pub accuracy: f64,
    pub auc: f64,
}

/// Scores the records listed in `manifest` with the run's model.
pub fn score(run: &Run, manifest: &Path) -> CliResult<(Vec<String>, ScoredSet)> {
    let ck = &run.checkpoint;
    let kind = ck.spec.kind;
    let rows = read_manifest(manifest)?;
    let norm = ck.norm.clone().unwrap_or_else(|| NormStats::identity(N_FEATURES));
    let ds = Dataset::load(rows.rows(), &preparer(&run.config, kind)?, kind, &norm)?;
    let scores = predict_dataset(&ck.spec, &ck.params, &ds)?;
    Ok((ds.ids.clone(), ScoredSet::from_indices(scores, &ds.labels)?))
}

fn split_files(which: &str) -> CliResult<Vec<(&'static str, &'static str)>> {
    let b = ("test_balanced", TEST_BALANCED_FILE);
    let u = ("test_unbalanced", TEST_UNBALANCED_FILE);
    match which {
        "balanced" => Ok(vec![b]),
        "unbalanced" => Ok(vec![u]),
        "both" => Ok(vec![b, u]),
        other => Err(CliError::Usage(format!(
            "--split {other:?}: expected balanced, unbalanced or both"
        ))),
    }
}

pub fn run(a: EvalArgs) -> CliResult<()> {
    let files = split_files(&a.split)?;
    let run = load_run(&a.run)?;
    let splits = match a.splits.clone().or_else(|| run.config.path("splits")) {
        Some(s) => s,
        None => {
            return Err(CliError::Usage(
                "--splits is required; the run config names none".into(),
            ))
        }
    };
    require_dir(&splits, "splits directory")?;

    let mut report = String::new();
    let _ = writeln!(report, "model={}", run.checkpoint.spec.kind);
    let _ = writeln!(report, "fingerprint={}", run.checkpoint.spec.fingerprint());
    let _ = writeln!(report, "checkpoint_sha256={}", file_sha256(&run.checkpoint_path)?);
    let _ = writeln!(report, "threshold={THRESHOLD}");
    create_out(&a.out)?;
    for (name, file) in files {
        let path = splits.join(file);
        let (ids, scored) = score(&run, &path)?;
        let acc = accuracy(&scored, THRESHOLD)?;
        let area = auc(&scored)?;
        println!("{name}: ACC={acc:.4} AUC={area:.4} n={}", scored.len());
        let _ = writeln!(report, "{name}.manifest_sha256={}", file_sha256(&path)?);
        let _ = writeln!(report, "{name}.n={}", scored.len());
        let _ = writeln!(report, "{name}.acc={acc:?}");
        let _ = writeln!(report, "{name}.auc={area:?}");

        write_text(
            &a.out.join(format!("roc_{name}.csv")),
            &roc_csv(&roc_points(&scored)?),
        )?;
        let mut cal = String::from("lower,upper,mean_predicted,empirical,count\n");
        for b in calibration_curve(&scored, a.bins)? {
            let _ = writeln!(
                cal,
                "{:?},{:?},{:?},{:?},{}",
                b.lower, b.upper, b.mean_predicted, b.empirical, b.count
            );
        }
        write_text(&a.out.join(format!("calibration_{name}.csv")), &cal)?;
        let mut scores = String::from("record_id,label,score\n");
        for ((id, s), l) in ids.iter().zip(scored.scores()).zip(scored.labels()) {
            let _ = writeln!(scores, "{id},{},{s:?}", l.index());
        }
        write_text(&a.out.join(format!("scores_{name}.csv")), &scores)?;
    }
    write_text(&a.out.join(EVAL_REPORT_FILE), &report)?;
    Ok(())
}
