use crate::error::{Error, Result};
use crate::models::{forward, Batch, ModelKind, ModelSpec};
use crate::nn::{Mode, ParameterStore, Tape, Tensor};
use crate::scalar::Scalar;

/// Class activation map over the last convolutional feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct Cam {
    /// Un-normalised importance per feature-map step.
    pub values: Vec<f64>,
    /// Input samples covered by one step.
    pub samples_per_step: usize,
    /// The model's logit for the target class on this input.
    pub logit: f64,
}

/// `cam[t] = sum_k head_weight[class, k] * feature[k, t]`. The time mean of the map plus
/// the head bias reproduces the class logit.
pub fn cam<S: Scalar>(
    spec: &ModelSpec,
    params: &ParameterStore<S>,
    ecg: &Tensor<S>,
    target_class: usize,
) -> Result<Cam> {
    if spec.kind != ModelKind::Ecg {
        return Err(Error::InvalidArgument(format!(
            "class activation mapping needs an EcgNet, not a {} model",
            spec.kind
        )));
    }
    if target_class >= 2 {
        return Err(Error::InvalidArgument(format!(
            "target class {target_class} not in {{0, 1}}"
        )));
    }
    let input = match ecg.rank() {
        2 => ecg.clone().reshape(&[1, ecg.dim(0), ecg.dim(1)])?,
        3 if ecg.dim(0) == 1 => ecg.clone(),
        _ => {
            return Err(Error::Shape(format!(
                "CAM takes one record, got {:?}",
                ecg.shape()
            )))
        }
    };
    let mut scratch = params.clone();
    let mut tape = Tape::new();
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let batch = Batch {
        ecg: Some(input),
        tab: None,
    };
    let out = forward(spec, &mut scratch, &mut tape, &batch, Mode::Inference, &mut rng)?;
    let fmap = tape
        .value(out.pre_gap.ok_or_else(|| {
            Error::InvalidArgument("model has no preserved pre-pooling feature map".into())
        })?);
    let (k_n, t_n) = (fmap.dim(1), fmap.dim(2));
    let w = params.get("head.weight")?;
    let row = &w.data()[target_class * k_n..(target_class + 1) * k_n];
    let f = fmap.data();
    let values = (0..t_n)
        .map(|t| (0..k_n).map(|k| row[k].as_f64() * f[k * t_n + t].as_f64()).sum())
        .collect();
    let logit = tape.value(out.logits).data()[target_class].as_f64();
    let samples_per_step = spec.ecg.as_ref().map_or(1, |c| c.time_reduction());
    Ok(Cam {
        values,
        samples_per_step,
        logit,
    })
}
