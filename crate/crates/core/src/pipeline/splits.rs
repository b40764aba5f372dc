use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{source_id, ClassCounts, ClassLabel, Manifest, ManifestRow, NormStats, AUGMENT_SEPARATOR};
use crate::error::{Error, Result};
use crate::hashing::{derive_seed, sha256_hex};
use crate::pipeline::Shift;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    /// Fraction of the AF1 records held out as test positives.
    pub test_frac: f64,
    /// AF0:AF1 ratio of the unbalanced test set.
    pub unbal_ratio: usize,
    pub seed: u64,
}

impl SplitConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            test_frac: 0.12,
            unbal_ratio: 5,
            seed,
        }
    }
}

/// Train and test partitions of a manifest. Train rows come in pairs: the original and a
/// shifted copy whose id carries the shift tag and whose path is the original waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub config: SplitConfig,
    pub train: Vec<ManifestRow>,
    pub test_balanced: Vec<ManifestRow>,
    pub test_unbalanced: Vec<ManifestRow>,
    /// Tabular statistics fitted on the train originals.
    pub norm: NormStats,
}

fn counts(rows: &[ManifestRow]) -> ClassCounts {
    let af1 = rows.iter().filter(|r| r.label == ClassLabel::Af1).count();
    ClassCounts {
        af0: rows.len() - af1,
        af1,
    }
}

/// Shift drawn for one record, stable across processing order.
pub fn shift_for(seed: u64, record_id: &str) -> Shift {
    Shift::draw(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, record_id)))
}

pub fn build_splits(manifest: &Manifest, config: SplitConfig) -> Result<Splits> {
    if !(config.test_frac > 0.0 && config.test_frac < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {} outside (0, 1)",
            config.test_frac
        )));
    }
    if config.unbal_ratio == 0 {
        return Err(Error::InvalidArgument(
            "unbalanced ratio must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rows = manifest.rows();
    let mut af1: Vec<&ManifestRow> = rows.iter().filter(|r| r.label == ClassLabel::Af1).collect();
    let mut af0: Vec<&ManifestRow> = rows.iter().filter(|r| r.label == ClassLabel::Af0).collect();
    if af1.is_empty() || af0.is_empty() {
        return Err(Error::InsufficientData(format!(
            "both classes are required, got {} AF0 and {} AF1",
            af0.len(),
            af1.len()
        )));
    }
    if let Some(r) = rows.iter().find(|r| r.record_id.contains(AUGMENT_SEPARATOR)) {
        return Err(Error::InvalidArgument(format!(
            "record id '{}' contains the reserved '{AUGMENT_SEPARATOR}'",
            r.record_id
        )));
    }
    let n_test = (config.test_frac * af1.len() as f64).floor() as usize;
    let n_train = af1.len() - n_test;
    if n_test == 0 || n_train == 0 {
        return Err(Error::InsufficientData(format!(
            "{} AF1 records at test fraction {} leave an empty partition",
            af1.len(),
            config.test_frac
        )));
    }
    let n_unbal = n_test * config.unbal_ratio;
    if af0.len() < n_unbal + n_train {
        return Err(Error::InsufficientData(format!(
            "need {} AF0 records ({n_unbal} for the 1:{} test set and {n_train} for training), have {}",
            n_unbal + n_train,
            config.unbal_ratio,
            af0.len()
        )));
    }
    af1.shuffle(&mut rng);
    af0.shuffle(&mut rng);

    let test_pos = &af1[..n_test];
    let train_pos = &af1[n_test..];
    let test_neg = &af0[..n_unbal];
    let train_neg = &af0[n_unbal..n_unbal + n_train];

    let mut test_balanced: Vec<ManifestRow> = test_pos
        .iter()
        .chain(&test_neg[..n_test])
        .map(|r| (*r).clone())
        .collect();
    let mut test_unbalanced: Vec<ManifestRow> =
        test_pos.iter().chain(test_neg).map(|r| (*r).clone()).collect();

    let mut train = Vec::with_capacity(4 * n_train);
    for r in train_pos.iter().chain(train_neg) {
        let shift = shift_for(config.seed, &r.record_id);
        let mut copy = (*r).clone();
        copy.record_id = format!("{}{AUGMENT_SEPARATOR}{shift}", r.record_id);
        train.push((*r).clone());
        train.push(copy);
    }
    let tab: Vec<Vec<f64>> = train_pos
        .iter()
        .chain(train_neg)
        .map(|r| r.tabular.values().to_vec())
        .collect();
    let norm = NormStats::fit(&tab)?;

    train.shuffle(&mut rng);
    test_balanced.shuffle(&mut rng);
    test_unbalanced.shuffle(&mut rng);
    Ok(Splits {
        config,
        train,
        test_balanced,
        test_unbalanced,
        norm,
    })
}

/// File names written by [`Splits::write`].
pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_BALANCED_FILE: &str = "test_balanced.csv";
pub const TEST_UNBALANCED_FILE: &str = "test_unbalanced.csv";
pub const NORM_FILE: &str = "norm.csv";
pub const SPLIT_REPORT_FILE: &str = "split_report.txt";

impl Splits {
    /// Train original records, without the shifted copies.
    pub fn train_originals(&self) -> impl Iterator<Item = &ManifestRow> {
        self.train
            .iter()
            .filter(|r| !r.record_id.contains(AUGMENT_SEPARATOR))
    }

    pub fn report(&self) -> String {
        let mut s = String::new();
        let c = self.config;
        let _ = writeln!(s, "seed={}", c.seed);
        let _ = writeln!(s, "test_frac={}", c.test_frac);
        let _ = writeln!(s, "unbal_ratio={}", c.unbal_ratio);
        for (name, rows) in [
            ("train", &self.train),
            ("test_balanced", &self.test_balanced),
            ("test_unbalanced", &self.test_unbalanced),
        ] {
            let k = counts(rows);
            let _ = writeln!(s, "{name}={} (AF0={}, AF1={})", rows.len(), k.af0, k.af1);
        }
        s
    }

    /// Writes the three split manifests, the tabular statistics and the split report.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        let mut report = self.report();
        for (file, rows) in [
            (TRAIN_FILE, &self.train),
            (TEST_BALANCED_FILE, &self.test_balanced),
            (TEST_UNBALANCED_FILE, &self.test_unbalanced),
        ] {
            let path = dir.join(file);
            let text = Manifest::new(rows.clone())?.to_csv(dir);
            fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
            let _ = writeln!(report, "sha256({file})={}", sha256_hex(text.as_bytes()));
            written.push(path);
        }
        let norm_path = dir.join(NORM_FILE);
        self.norm.save(&norm_path)?;
        written.push(norm_path);
        let report_path = dir.join(SPLIT_REPORT_FILE);
        fs::write(&report_path, report).map_err(|e| Error::io(&report_path, e))?;
        written.push(report_path);
        Ok(written)
    }
}

/// True when no source record is shared between the two lists.
pub fn disjoint_sources(a: &[ManifestRow], b: &[ManifestRow]) -> bool {
    let ids: std::collections::HashSet<&str> = a.iter().map(|r| source_id(&r.record_id)).collect();
    b.iter().all(|r| !ids.contains(source_id(&r.record_id)))
}
