use rand::Rng;

use crate::error::{Error, Result};
use crate::models::{LayerSpec, ModelSpec};
use crate::nn::{he_uniform, Mode, ParameterStore, RunningStats, Tape, Tensor, Var};
use crate::scalar::Scalar;

/// One minibatch: waveforms `[B, leads, T]` and/or normalised tabular rows `[B, features]`.
#[derive(Debug, Clone)]
pub struct Batch<S> {
    pub ecg: Option<Tensor<S>>,
    pub tab: Option<Tensor<S>>,
}

impl<S: Scalar> Batch<S> {
    pub fn len(&self) -> usize {
        self.ecg.as_ref().or(self.tab.as_ref()).map_or(0, |t| t.dim(0))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Handles to the interesting nodes of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardOut {
    pub logits: Var,
    /// Last convolutional feature map, `[B, filters, T/8]`.
    pub pre_gap: Option<Var>,
    pub ecg_features: Option<Var>,
    pub tab_features: Option<Var>,
    /// Input to the head.
    pub head_input: Var,
}

/// Fresh weights: He-uniform conv/dense kernels, zero biases, identity batch-norm.
pub fn init_params<S: Scalar, R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> Result<ParameterStore<S>> {
    let mut p = ParameterStore::new();
    for l in spec.layers() {
        match l {
            LayerSpec::Conv1d {
                name,
                c_in,
                c_out,
                kernel,
                ..
            } => {
                p.insert(
                    format!("{name}.weight"),
                    he_uniform(&[*c_out, *c_in, *kernel], c_in * kernel, rng),
                    true,
                )?;
                p.insert(format!("{name}.bias"), Tensor::zeros(&[*c_out]), true)?;
            }
            LayerSpec::Dense {
                name,
                inputs,
                outputs,
            } => {
                p.insert(
                    format!("{name}.weight"),
                    he_uniform(&[*outputs, *inputs], *inputs, rng),
                    true,
                )?;
                p.insert(format!("{name}.bias"), Tensor::zeros(&[*outputs]), true)?;
            }
            LayerSpec::BatchNorm { name, channels } => {
                p.insert(
                    format!("{name}.gamma"),
                    Tensor::filled(&[*channels], S::one()),
                    true,
                )?;
                p.insert(format!("{name}.beta"), Tensor::zeros(&[*channels]), true)?;
                p.insert(format!("{name}.running_mean"), Tensor::zeros(&[*channels]), false)?;
                p.insert(
                    format!("{name}.running_var"),
                    Tensor::filled(&[*channels], S::one()),
                    false,
                )?;
            }
            _ => {}
        }
    }
    Ok(p)
}

struct Trunk {
    out: Var,
    pre_gap: Option<Var>,
}

fn run_layers<S: Scalar, R: Rng + ?Sized>(
    layers: &[LayerSpec],
    params: &mut ParameterStore<S>,
    tape: &mut Tape<S>,
    mut x: Var,
    mode: Mode,
    rng: &mut R,
) -> Result<Trunk> {
    let mut pre_gap = None;
    for l in layers {
        x = match l {
            LayerSpec::Conv1d { name, dilation, .. } => {
                let w = tape.param(&format!("{name}.weight"), params.get(&format!("{name}.weight"))?);
                let b = tape.param(&format!("{name}.bias"), params.get(&format!("{name}.bias"))?);
                tape.conv1d(x, w, b, *dilation)?
            }
            LayerSpec::Dense { name, .. } => {
                let w = tape.param(&format!("{name}.weight"), params.get(&format!("{name}.weight"))?);
                let b = tape.param(&format!("{name}.bias"), params.get(&format!("{name}.bias"))?);
                tape.dense(x, w, b)?
            }
            LayerSpec::BatchNorm { name, .. } => {
                let g = tape.param(&format!("{name}.gamma"), params.get(&format!("{name}.gamma"))?);
                let b = tape.param(&format!("{name}.beta"), params.get(&format!("{name}.beta"))?);
                let (mean, var) =
                    params.pair_mut(&format!("{name}.running_mean"), &format!("{name}.running_var"))?;
                tape.batch_norm(x, g, b, RunningStats { mean, var }, mode)?
            }
            LayerSpec::Relu => tape.relu(x),
            LayerSpec::Dropout { rate } => tape.dropout(x, *rate, mode, rng)?,
            LayerSpec::MaxPool2 => tape.maxpool2(x)?,
            LayerSpec::GlobalAvgPool => {
                pre_gap = Some(x);
                tape.global_avg_pool(x)?
            }
        };
    }
    Ok(Trunk { out: x, pre_gap })
}

/// Records one forward pass. Training mode updates batch-norm running statistics.
pub fn forward<S: Scalar, R: Rng + ?Sized>(
    spec: &ModelSpec,
    params: &mut ParameterStore<S>,
    tape: &mut Tape<S>,
    batch: &Batch<S>,
    mode: Mode,
    rng: &mut R,
) -> Result<ForwardOut> {
    let mut ecg = None;
    if spec.kind.uses_ecg() {
        let t = batch
            .ecg
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("model needs waveform input".into()))?;
        if t.rank() != 3 || t.dim(1) != spec.n_leads() {
            return Err(Error::Shape(format!(
                "waveform batch {:?} for a {}-lead model",
                t.shape(),
                spec.n_leads()
            )));
        }
        let x = tape.input(t.clone());
        ecg = Some(run_layers(&spec.ecg_trunk, params, tape, x, mode, rng)?);
    }
    let mut tab = None;
    if spec.kind.uses_tab() {
        let t = batch
            .tab
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("model needs tabular input".into()))?;
        if t.rank() != 2 || t.dim(1) != spec.n_features() {
            return Err(Error::Shape(format!(
                "tabular batch {:?} for {} features",
                t.shape(),
                spec.n_features()
            )));
        }
        let x = tape.input(t.clone());
        tab = Some(run_layers(&spec.tab_trunk, params, tape, x, mode, rng)?);
    }
    let head_input = match (&ecg, &tab) {
        (Some(e), Some(t)) => tape.add(e.out, t.out)?,
        (Some(e), None) => e.out,
        (None, Some(t)) => t.out,
        (None, None) => unreachable!("every model has a trunk"),
    };
    let logits = run_layers(
        std::slice::from_ref(&spec.head),
        params,
        tape,
        head_input,
        mode,
        rng,
    )?
    .out;
    Ok(ForwardOut {
        logits,
        pre_gap: ecg.as_ref().and_then(|e| e.pre_gap),
        ecg_features: ecg.map(|e| e.out),
        tab_features: tab.map(|t| t.out),
        head_input,
    })
}

/// Inference-mode logits, `[B, 2]` row-major.
pub fn predict_logits<S: Scalar>(
    spec: &ModelSpec,
    params: &ParameterStore<S>,
    batch: &Batch<S>,
) -> Result<Vec<S>> {
    // Inference never touches running statistics or draws random numbers.
    let mut scratch = params.clone();
    let mut tape = Tape::new();
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let out = forward(spec, &mut scratch, &mut tape, batch, Mode::Inference, &mut rng)?;
    Ok(tape.value(out.logits).data().to_vec())
}

/// Probability of class 1 for each row of the batch.
pub fn predict_af1<S: Scalar>(
    spec: &ModelSpec,
    params: &ParameterStore<S>,
    batch: &Batch<S>,
) -> Result<Vec<f64>> {
    let logits = predict_logits(spec, params, batch)?;
    Ok(logits
        .chunks_exact(2)
        .map(|r| {
            let (a, b) = (r[0].as_f64(), r[1].as_f64());
            1.0 / (1.0 + (a - b).exp())
        })
        .collect())
}
