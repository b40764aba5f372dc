use std::path::Path;

use rand::rngs::mock::StepRng;

use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::models::{init_params, ModelSpec};
use crate::nn::{ParameterStore, Tensor, TensorFile};
use crate::scalar::Scalar;

const ARCH_PREFIX: &str = "__arch__:";
const FINGERPRINT_PREFIX: &str = "__fingerprint__:";
const NORM_PREFIX: &str = "__norm__:";

/// A model restored from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub params: ParameterStore<f32>,
    pub norm: Option<NormStats>,
}

fn marker(name: String) -> (String, Tensor<f32>) {
    (name, Tensor::zeros(&[0]))
}

/// Parameters are stored as `f32` in name order, preceded by the architecture descriptor,
/// its fingerprint and, when given, the tabular statistics.
pub fn encode_checkpoint<S: Scalar>(
    spec: &ModelSpec,
    params: &ParameterStore<S>,
    norm: Option<&NormStats>,
) -> TensorFile {
    let mut entries = vec![
        marker(format!("{ARCH_PREFIX}{}", spec.descriptor())),
        marker(format!("{FINGERPRINT_PREFIX}{}", spec.fingerprint())),
    ];
    if let Some(n) = norm {
        entries.push(marker(format!("{NORM_PREFIX}{}", n.to_csv())));
    }
    for (name, p) in params.iter() {
        entries.push((name.clone(), p.value.cast::<f32>()));
    }
    TensorFile { entries }
}

pub fn save_checkpoint<S: Scalar>(
    path: &Path,
    spec: &ModelSpec,
    params: &ParameterStore<S>,
    norm: Option<&NormStats>,
) -> Result<()> {
    encode_checkpoint(spec, params, norm).write(path)
}

pub fn decode_checkpoint(file: &TensorFile, path: &Path, expected: Option<&ModelSpec>) -> Result<Checkpoint> {
    let meta = |prefix: &str| {
        file.entries
            .iter()
            .find_map(|(n, _)| n.strip_prefix(prefix).map(str::to_string))
    };
    let desc = meta(ARCH_PREFIX)
        .ok_or_else(|| Error::InvalidRecord(format!("{}: no architecture entry", path.display())))?;
    let stored_fp = meta(FINGERPRINT_PREFIX)
        .ok_or_else(|| Error::InvalidRecord(format!("{}: no fingerprint entry", path.display())))?;
    let spec = ModelSpec::from_descriptor(&desc)?;
    if spec.fingerprint() != stored_fp {
        return Err(Error::Fingerprint {
            expected: stored_fp,
            found: spec.fingerprint(),
        });
    }
    if let Some(e) = expected {
        if e.fingerprint() != stored_fp {
            return Err(Error::Fingerprint {
                expected: e.fingerprint(),
                found: stored_fp,
            });
        }
    }
    let norm = meta(NORM_PREFIX)
        .map(|csv| NormStats::from_csv(&csv, path))
        .transpose()?;
    let mut params = init_params::<f32, _>(&spec, &mut StepRng::new(0, 0))?;
    let mut filled = 0;
    for (name, t) in &file.entries {
        if name.starts_with("__") {
            continue;
        }
        let slot = params
            .get_mut(name)
            .map_err(|_| Error::InvalidRecord(format!("{}: unexpected tensor '{name}'", path.display())))?;
        if slot.shape() != t.shape() {
            return Err(Error::Shape(format!(
                "{}: tensor '{name}' is {:?}, model expects {:?}",
                path.display(),
                t.shape(),
                slot.shape()
            )));
        }
        *slot = t.clone();
        filled += 1;
    }
    if filled != params.len() {
        return Err(Error::InvalidRecord(format!(
            "{}: {filled} of {} parameter tensors present",
            path.display(),
            params.len()
        )));
    }
    Ok(Checkpoint { spec, params, norm })
}

/// Reads a checkpoint; with `expected`, a different architecture is a fingerprint error.
pub fn load_checkpoint(path: &Path, expected: Option<&ModelSpec>) -> Result<Checkpoint> {
    decode_checkpoint(&TensorFile::read(path)?, path, expected)
}
