use std::collections::HashMap;
use std::fmt::{self, Write as _};

use rayon::prelude::*;

use crate::data::{source_id, EcgRecord, Lead, Manifest, ManifestRow};
use crate::dsp::{BandSpec, BAND_CATALOG};
use crate::error::{Error, Result};
use crate::evalx::{aggregate_runs, auc, ScoredSet};
use crate::models::{build_ecgnet_with, EcgNetConfig, ModelKind, ModelSpec};
use crate::pipeline::{build_splits, load_raw, Dataset, Preparer, SplitConfig, Splits};
use crate::training::{predict_dataset, train, TrainConfig};

/// One column of an ablation: a single lead, or a band filter (`None` is unfiltered).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Condition {
    Lead(Lead),
    Band(Option<BandSpec>),
}

impl Condition {
    pub fn label(&self) -> String {
        match self {
            Condition::Lead(l) => l.name().to_string(),
            Condition::Band(None) => "unfiltered".to_string(),
            Condition::Band(Some(b)) => b.to_string(),
        }
    }

    pub fn preparer(&self) -> Result<Preparer> {
        match *self {
            Condition::Lead(l) => Preparer::new(Some(vec![l]), None),
            Condition::Band(b) => Preparer::new(None, b),
        }
    }

    fn leads(&self) -> Vec<Lead> {
        match *self {
            Condition::Lead(l) => vec![l],
            Condition::Band(_) => Lead::ALL.to_vec(),
        }
    }
}

pub fn lead_conditions() -> Vec<Condition> {
    Lead::ALL.iter().map(|&l| Condition::Lead(l)).collect()
}

pub fn band_conditions() -> Vec<Condition> {
    std::iter::once(Condition::Band(None))
        .chain(BAND_CATALOG.iter().map(|&b| Condition::Band(Some(b))))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationConfig {
    pub split: SplitConfig,
    /// Template for every run; its seed is replaced by each entry of `seeds`.
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    /// EcgNet convolution width.
    pub filters: usize,
    /// Conditions evaluated concurrently.
    pub jobs: usize,
}

impl AblationConfig {
    pub fn new(split_seed: u64) -> Self {
        Self {
            split: SplitConfig::new(split_seed),
            train: TrainConfig::new(split_seed),
            seeds: (1..=5).collect(),
            filters: 64,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub condition: String,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub per_seed: Vec<f64>,
    /// Balanced-test scores of each seed, for ROC dumps.
    pub scored: Vec<ScoredSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationFailure {
    pub condition: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    /// Heading of the condition column.
    pub heading: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<AblationRow>,
    pub failures: Vec<AblationFailure>,
}

impl AblationTable {
    pub fn row(&self, condition: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.condition == condition)
    }

    /// Condition with the highest mean AUC.
    pub fn best(&self) -> Option<&AblationRow> {
        self.rows.iter().max_by(|a, b| a.mean_auc.total_cmp(&b.mean_auc))
    }

    /// `condition,mean_auc,std_auc,seed_<s>...`; failed conditions have empty cells.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("condition,mean_auc,std_auc");
        for seed in &self.seeds {
            let _ = write!(s, ",seed_{seed}");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{},{:?},{:?}", r.condition, r.mean_auc, r.std_auc);
            for v in &r.per_seed {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        for f in &self.failures {
            let _ = writeln!(s, "{}{}", f.condition, ",".repeat(2 + self.seeds.len()));
        }
        s
    }
}

impl fmt::Display for AblationTable {
    /// AUC in percent with the standard deviation in brackets.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.condition.len())
            .chain(self.failures.iter().map(|x| x.condition.len()))
            .chain([self.heading.len()])
            .max()
            .unwrap_or(0);
        writeln!(f, "{:<width$}  AUC", self.heading)?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<width$}  {:.1} ({:.2})",
                r.condition,
                100.0 * r.mean_auc,
                100.0 * r.std_auc
            )?;
        }
        for x in &self.failures {
            writeln!(f, "{:<width$}  failed: {}", x.condition, x.message)?;
        }
        Ok(())
    }
}

/// Raw (500 Hz) waveforms of every source record used by the splits, loaded once.
struct RawCache(HashMap<String, EcgRecord>);

impl RawCache {
    fn load(splits: &Splits) -> Result<Self> {
        let mut map = HashMap::new();
        for row in splits.train.iter().chain(&splits.test_balanced) {
            let key = source_id(&row.record_id);
            if !map.contains_key(key) {
                let mut plain = row.clone();
                plain.record_id = key.to_string();
                map.insert(key.to_string(), load_raw(&plain)?);
            }
        }
        Ok(Self(map))
    }

    fn dataset(&self, rows: &[ManifestRow], prep: &Preparer, splits: &Splits) -> Result<Dataset> {
        Dataset::load_with(rows, ModelKind::Ecg, &splits.norm, |row| {
            let raw = &self.0[source_id(&row.record_id)];
            prep.prepare_as(raw, &row.record_id)
        })
    }
}

fn run_condition(
    cond: Condition,
    cache: &RawCache,
    splits: &Splits,
    config: &AblationConfig,
) -> Result<AblationRow> {
    let prep = cond.preparer()?;
    let train_ds = cache.dataset(&splits.train, &prep, splits)?;
    let test_ds = cache.dataset(&splits.test_balanced, &prep, splits)?;
    let spec: ModelSpec = build_ecgnet_with(EcgNetConfig::new(cond.leads()).with_filters(config.filters))?;
    let mut per_seed = Vec::new();
    let mut scored = Vec::new();
    for &seed in &config.seeds {
        let cfg = TrainConfig { seed, ..config.train };
        let (params, _) = train::<f32>(&spec, &train_ds, &cfg)?;
        let s = ScoredSet::from_indices(predict_dataset(&spec, &params, &test_ds)?, &test_ds.labels)?;
        per_seed.push(auc(&s)?);
        scored.push(s);
    }
    let (mean_auc, std_auc) = aggregate_runs(&per_seed)?;
    Ok(AblationRow {
        condition: cond.label(),
        mean_auc,
        std_auc,
        per_seed,
        scored,
    })
}

/// Trains an EcgNet per condition and seed on fixed splits and reports balanced-test AUC.
/// A failing condition is recorded and the others still run.
pub fn run_ablation(
    manifest: &Manifest,
    conditions: &[Condition],
    heading: &str,
    config: &AblationConfig,
) -> Result<AblationTable> {
    if config.seeds.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "{} seed(s) given; the standard deviation needs at least 2",
            config.seeds.len()
        )));
    }
    if config.jobs == 0 {
        return Err(Error::InvalidArgument("jobs must be at least 1".into()));
    }
    config.train.validate()?;
    let splits = build_splits(manifest, config.split)?;
    let cache = RawCache::load(&splits)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<Result<AblationRow>> = pool.install(|| {
        conditions
            .par_iter()
            .map(|&c| run_condition(c, &cache, &splits, config))
            .collect()
    });
    let mut table = AblationTable {
        heading: heading.to_string(),
        seeds: config.seeds.clone(),
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for (c, r) in conditions.iter().zip(results) {
        match r {
            Ok(row) => table.rows.push(row),
            Err(e) => table.failures.push(AblationFailure {
                condition: c.label(),
                message: e.to_string(),
            }),
        }
    }
    Ok(table)
}

pub fn run_lead_ablation(manifest: &Manifest, config: &AblationConfig) -> Result<AblationTable> {
    run_ablation(manifest, &lead_conditions(), "Lead", config)
}

pub fn run_band_ablation(manifest: &Manifest, config: &AblationConfig) -> Result<AblationTable> {
    run_ablation(manifest, &band_conditions(), "Filter", config)
}

/// Waveforms a condition feeds the network, for inspection.
pub fn condition_inputs(cond: Condition, rows: &[ManifestRow]) -> Result<Vec<EcgRecord>> {
    let prep = cond.preparer()?;
    rows.iter().map(|r| prep.prepare(&load_raw(r)?)).collect()
}
