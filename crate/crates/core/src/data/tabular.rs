use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// The seventeen tabular features, in manifest column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    Gender,
    Age,
    PAxis,
    PDur,
    POnset,
    POffset,
    PrInt,
    QrsAxis,
    QrsDur,
    QrsOnset,
    QrsOffset,
    QtInt,
    QtcInt,
    RrInterval,
    TAxis,
    TOffset,
    VRate,
}

pub const N_FEATURES: usize = 17;

impl Feature {
    pub const ALL: [Feature; N_FEATURES] = [
        Feature::Gender,
        Feature::Age,
        Feature::PAxis,
        Feature::PDur,
        Feature::POnset,
        Feature::POffset,
        Feature::PrInt,
        Feature::QrsAxis,
        Feature::QrsDur,
        Feature::QrsOnset,
        Feature::QrsOffset,
        Feature::QtInt,
        Feature::QtcInt,
        Feature::RrInterval,
        Feature::TAxis,
        Feature::TOffset,
        Feature::VRate,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Feature::Gender => "gender",
            Feature::Age => "age",
            Feature::PAxis => "P_AXIS",
            Feature::PDur => "P_DUR",
            Feature::POnset => "P_ONSET",
            Feature::POffset => "P_OFFSET",
            Feature::PrInt => "PR_INT",
            Feature::QrsAxis => "QRS_AXIS",
            Feature::QrsDur => "QRS_DUR",
            Feature::QrsOnset => "QRS_ONSET",
            Feature::QrsOffset => "QRS_OFFSET",
            Feature::QtInt => "QT_INT",
            Feature::QtcInt => "QTC_INT",
            Feature::RrInterval => "RR_INTERVAL",
            Feature::TAxis => "T_AXIS",
            Feature::TOffset => "T_OFFSET",
            Feature::VRate => "V_RATE",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_axis(self) -> bool {
        matches!(self, Feature::PAxis | Feature::QrsAxis | Feature::TAxis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gender {
    M,
    F,
}

impl Gender {
    /// Fixed encoding: M -> 1, F -> 0.
    pub fn code(self) -> f64 {
        match self {
            Gender::M => 1.0,
            Gender::F => 0.0,
        }
    }
}

/// One exam's demographic and morphology measurements.
///
/// `values` is indexed by [`Feature::index`]; the gender slot holds its 0/1 code.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularRecord {
    values: [f64; N_FEATURES],
}

impl TabularRecord {
    pub fn new(values: [f64; N_FEATURES]) -> Result<Self> {
        for f in Feature::ALL {
            let v = values[f.index()];
            let ok = match f {
                Feature::Gender => v == 0.0 || v == 1.0,
                _ if f.is_axis() => (-180.0..=360.0).contains(&v),
                _ => v.is_finite() && v > 0.0,
            };
            if !ok {
                return Err(Error::InvalidRecord(format!("{} = {v} out of range", f.column())));
            }
        }
        Ok(Self { values })
    }

    pub fn gender(&self) -> Gender {
        if self.values[0] == 1.0 {
            Gender::M
        } else {
            Gender::F
        }
    }

    pub fn get(&self, f: Feature) -> f64 {
        self.values[f.index()]
    }

    pub fn values(&self) -> &[f64; N_FEATURES] {
        &self.values
    }
}

/// Per-feature mean and population standard deviation of the training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Mean 0, std 1: the identity map.
    pub fn identity(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            std: vec![1.0; n],
        }
    }

    /// Fits on a row-major matrix with the population (divide-by-n) denominator.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 rows to fit normalisation, got {}",
                rows.len()
            )));
        }
        let n_cols = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; n_cols];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; n_cols];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
        if let Some(j) = std.iter().position(|&s| !(s > 0.0)) {
            let name = Feature::ALL.get(j).map_or("feature", |f| f.column());
            return Err(Error::InvalidArgument(format!(
                "zero-variance column {j} ({name}) cannot be normalised"
            )));
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    fn header() -> String {
        Feature::ALL
            .iter()
            .map(|f| f.column())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn to_csv(&self) -> String {
        let row = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        writeln!(s, "{}", Self::header()).unwrap();
        writeln!(s, "{}", row(&self.mean)).unwrap();
        writeln!(s, "{}", row(&self.std)).unwrap();
        s
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if lines.len() != 3 {
            return Err(parse_err(
                1,
                format!("expected header + 2 rows, found {} lines", lines.len()),
            ));
        }
        if lines[0].trim() != Self::header() {
            return Err(parse_err(1, "header does not match the feature schema".into()));
        }
        let row = |i: usize| -> Result<Vec<f64>> {
            lines[i]
                .split(',')
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| parse_err(i + 1, format!("{c:?}: {e}")))
                })
                .collect()
        };
        let (mean, std) = (row(1)?, row(2)?);
        if mean.len() != N_FEATURES || std.len() != N_FEATURES {
            return Err(parse_err(2, "row width differs from header".into()));
        }
        Ok(Self { mean, std })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, path)
    }
}

/// Z-scores tabular rows. Without `stats` the rows are treated as training data and
/// statistics are fitted on them; with `stats` those are applied unchanged.
pub fn normalize_tabular(
    records: &[TabularRecord],
    stats: Option<&NormStats>,
) -> Result<(Vec<Vec<f64>>, NormStats)> {
    let raw: Vec<Vec<f64>> = records.iter().map(|r| r.values().to_vec()).collect();
    let stats = match stats {
        Some(s) => s.clone(),
        None => NormStats::fit(&raw)?,
    };
    Ok((raw.iter().map(|r| stats.apply(r)).collect(), stats))
}
