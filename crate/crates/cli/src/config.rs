//! Flat `key=value` run configuration. Command-line flags override file values, which
//! override the defaults; the resolved set is written next to every report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use afnet_core::data::{parse_lead_list, Lead};
use afnet_core::dsp::BandSpec;
use afnet_core::models::{ModelKind, FEATURE_DIM};
use afnet_core::pipeline::SplitConfig;
use afnet_core::training::TrainConfig;

use crate::error::{io_error, CliError, CliResult};

pub const SEED_ENV: &str = "AFNET_SEED";

pub const KEYS: &[&str] = &[
    "seed",
    "test_frac",
    "unbal_ratio",
    "lr0",
    "half_period",
    "patience",
    "min_delta",
    "max_epochs",
    "batch_size",
    "val_fraction",
    "model",
    "leads",
    "band",
    "filters",
    "seeds",
    "jobs",
    "manifest",
    "splits",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str, source: &Path) -> CliResult<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = || format!("{}: line {}", source.display(), i + 1);
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{}: expected key=value", at())))?;
            let k = k.trim();
            if cfg.values.contains_key(k) {
                return Err(CliError::Usage(format!("{}: duplicate key {k:?}", at())));
            }
            cfg.set(k, v.trim())
                .map_err(|e| CliError::Usage(format!("{}: {e}", at())))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::parse(&text, path)
    }

    /// Loads `path` when given, otherwise starts empty.
    pub fn load_opt(path: Option<&Path>) -> CliResult<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if !KEYS.contains(&key) {
            return Err(format!("unknown key {key:?}"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Sets `key` when the flag was given.
    pub fn apply<T: ToString>(&mut self, key: &str, flag: Option<T>) {
        if let Some(v) = flag {
            self.set(key, &v.to_string()).expect("flag keys are known");
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn typed<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.typed(key)?.unwrap_or(default))
    }

    /// The `seed` key, then `AFNET_SEED`, then 0.
    pub fn seed(&self) -> CliResult<u64> {
        if let Some(s) = self.typed::<u64>("seed")? {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(0),
        }
    }

    pub fn split_config(&self) -> CliResult<SplitConfig> {
        let d = SplitConfig::new(self.seed()?);
        Ok(SplitConfig {
            test_frac: self.or("test_frac", d.test_frac)?,
            unbal_ratio: self.or("unbal_ratio", d.unbal_ratio)?,
            seed: d.seed,
        })
    }

    pub fn train_config(&self) -> CliResult<TrainConfig> {
        let d = TrainConfig::new(self.seed()?);
        let cfg = TrainConfig {
            lr0: self.or("lr0", d.lr0)?,
            half_period: self.or("half_period", d.half_period)?,
            patience: self.or("patience", d.patience)?,
            min_delta: self.or("min_delta", d.min_delta)?,
            max_epochs: self.or("max_epochs", d.max_epochs)?,
            batch_size: self.or("batch_size", d.batch_size)?,
            val_fraction: self.or("val_fraction", d.val_fraction)?,
            seed: d.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn model(&self) -> CliResult<ModelKind> {
        Ok(self.typed::<ModelKind>("model")?.unwrap_or(ModelKind::Ecg))
    }

    /// All twelve leads unless restricted.
    pub fn leads(&self) -> CliResult<Vec<Lead>> {
        match self.get("leads") {
            None | Some("all") => Ok(Lead::ALL.to_vec()),
            Some(v) => {
                let leads = parse_lead_list(v)?;
                if leads.is_empty() {
                    return Err(CliError::Usage("empty lead list".into()));
                }
                Ok(leads)
            }
        }
    }

    /// `none` or absent means unfiltered.
    pub fn band(&self) -> CliResult<Option<BandSpec>> {
        match self.get("band") {
            None | Some("none") => Ok(None),
            Some(v) => Ok(Some(v.parse()?)),
        }
    }

    pub fn filters(&self) -> CliResult<usize> {
        let f = self.or("filters", FEATURE_DIM)?;
        if f == 0 {
            return Err(CliError::Usage("filters must be positive".into()));
        }
        Ok(f)
    }

    /// Comma-separated; defaults to 1..=5.
    pub fn seeds(&self) -> CliResult<Vec<u64>> {
        match self.get("seeds") {
            None => Ok((1..=5).collect()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| CliError::Usage(format!("config key seeds: bad seed {s:?}")))
                })
                .collect(),
        }
    }

    pub fn jobs(&self) -> CliResult<usize> {
        self.or("jobs", 1)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn require_path(&self, key: &str) -> CliResult<PathBuf> {
        self.path(key)
            .ok_or_else(|| CliError::Usage(format!("--{key} is required (flag or config key)")))
    }

    /// Fills in every default the given keys resolve to, so reports are self-describing.
    pub fn resolved(&self, keys: &[&str]) -> CliResult<RunConfig> {
        let mut out = RunConfig::default();
        let split = self.split_config()?;
        let train = self.train_config()?;
        for &k in keys {
            let v = match k {
                "seed" => self.seed()?.to_string(),
                "test_frac" => split.test_frac.to_string(),
                "unbal_ratio" => split.unbal_ratio.to_string(),
                "model" => self.model()?.to_string(),
                "leads" => self
                    .leads()?
                    .into_iter()
                    .map(Lead::name)
                    .collect::<Vec<_>>()
                    .join(","),
                "band" => self.band()?.map_or("none".into(), |b| b.label()),
                "filters" => self.filters()?.to_string(),
                "seeds" => self
                    .seeds()?
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
                "jobs" => self.jobs()?.to_string(),
                "manifest" | "splits" => match self.get(k) {
                    Some(v) => v.to_string(),
                    None => continue,
                },
                _ => match train.to_kv().into_iter().find(|(name, _)| *name == k) {
                    Some((_, v)) => v,
                    None => return Err(CliError::Usage(format!("unknown key {k:?}"))),
                },
            };
            out.values.insert(k.to_string(), v);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        self.values.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }
}
