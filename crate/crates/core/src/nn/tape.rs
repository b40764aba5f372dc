//! Reverse-mode tape over batched tensors.
//!
//! Every op appends a node holding its output and whatever its backward pass
//! needs; [`Tape::backward`] walks the nodes in reverse, accumulating gradients.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::kernels::{self, ConvGeom};
use crate::nn::{Mode, Tensor};
use crate::scalar::Scalar;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<S> {
    Input,
    Param(String),
    Conv1d {
        x: Var,
        w: Var,
        b: Var,
        geom: ConvGeom,
    },
    MaxPool2 {
        x: Var,
        argmax: Vec<u32>,
    },
    GlobalAvgPool {
        x: Var,
        time: usize,
    },
    Dense {
        x: Var,
        w: Var,
        b: Var,
        batch: usize,
        n: usize,
        m: usize,
    },
    BatchNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<S>,
        inv_std: Vec<S>,
        batch_stats: bool,
        channels: usize,
        inner: usize,
    },
    Relu {
        x: Var,
    },
    Dropout {
        x: Var,
        keep: Vec<bool>,
        scale: S,
    },
    Add {
        a: Var,
        b: Var,
    },
    Sum {
        x: Var,
    },
    WeightedSum {
        x: Var,
        weights: Vec<S>,
    },
    SoftmaxCrossEntropy {
        logits: Var,
        probs: Vec<S>,
        targets: Vec<usize>,
    },
}

#[derive(Debug)]
struct Node<S> {
    value: Tensor<S>,
    op: Op<S>,
    requires_grad: bool,
}

/// Batch-norm running statistics, updated in place during Training-mode passes.
#[derive(Debug)]
pub struct RunningStats<'a, S> {
    pub mean: &'a mut Tensor<S>,
    pub var: &'a mut Tensor<S>,
}

pub const BN_MOMENTUM: f64 = 0.9;
pub const BN_EPS: f64 = 1e-5;

/// Gradients keyed by parameter name.
pub type Gradients<S> = BTreeMap<String, Tensor<S>>;

#[derive(Debug, Default)]
pub struct Tape<S> {
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    fn push(&mut self, value: Tensor<S>, op: Op<S>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<S> {
        &self.nodes[v.0].value
    }

    /// A constant input (no gradient).
    pub fn input(&mut self, t: Tensor<S>) -> Var {
        self.push(t, Op::Input, false)
    }

    /// A named trainable leaf; the tensor is copied onto the tape.
    pub fn param(&mut self, name: &str, t: &Tensor<S>) -> Var {
        self.push(t.clone(), Op::Param(name.to_string()), true)
    }

    /// Dilated "same" convolution on `[batch, c_in, time]` with weights `[c_out, c_in, kernel]`.
    pub fn conv1d(&mut self, x: Var, w: Var, b: Var, dilation: usize) -> Result<Var> {
        if dilation < 1 {
            return Err(Error::InvalidArgument("dilation must be >= 1".into()));
        }
        let (xs, ws, bs) = (
            self.value(x).shape(),
            self.value(w).shape(),
            self.value(b).shape(),
        );
        if xs.len() != 3 || ws.len() != 3 || ws[1] != xs[1] || bs != [ws[0]] {
            return Err(Error::Shape(format!(
                "conv1d input {xs:?}, weights {ws:?}, bias {bs:?}"
            )));
        }
        let geom = ConvGeom {
            batch: xs[0],
            c_in: xs[1],
            c_out: ws[0],
            time: xs[2],
            kernel: ws[2],
            dilation,
        };
        let y = kernels::conv1d_forward(
            &geom,
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
        );
        let value = Tensor::new(vec![geom.batch, geom.c_out, geom.time], y)?;
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        Ok(self.push(value, Op::Conv1d { x, w, b, geom }, rg))
    }

    /// Window-2 stride-2 max pooling over time.
    pub fn maxpool2(&mut self, x: Var) -> Result<Var> {
        let s = self.value(x).shape().to_vec();
        if s.len() != 3 || s[2] < 2 {
            return Err(Error::Shape(format!("maxpool needs [B, C, T>=2], got {s:?}")));
        }
        let (y, argmax) = kernels::maxpool2_forward(self.value(x).data(), s[0] * s[1], s[2]);
        let value = Tensor::new(vec![s[0], s[1], s[2] / 2], y)?;
        let rg = self.rg(x);
        Ok(self.push(value, Op::MaxPool2 { x, argmax }, rg))
    }

    /// `[B, C, T] -> [B, C]` temporal mean.
    pub fn global_avg_pool(&mut self, x: Var) -> Result<Var> {
        let s = self.value(x).shape().to_vec();
        if s.len() != 3 || s[2] == 0 {
            return Err(Error::Shape(format!(
                "global average pool needs [B, C, T>=1], got {s:?}"
            )));
        }
        let y = kernels::global_avg_pool_forward(self.value(x).data(), s[0] * s[1], s[2]);
        let value = Tensor::new(vec![s[0], s[1]], y)?;
        let rg = self.rg(x);
        Ok(self.push(value, Op::GlobalAvgPool { x, time: s[2] }, rg))
    }

    /// `[B, n] x W[m, n]^T + b[m]`.
    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xs, ws, bs) = (
            self.value(x).shape(),
            self.value(w).shape(),
            self.value(b).shape(),
        );
        if xs.len() != 2 || ws.len() != 2 || ws[1] != xs[1] || bs != [ws[0]] {
            return Err(Error::Shape(format!(
                "dense input {xs:?}, weights {ws:?}, bias {bs:?}"
            )));
        }
        let (batch, n, m) = (xs[0], xs[1], ws[0]);
        let y = kernels::dense_forward(
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
            batch,
            n,
            m,
        );
        let value = Tensor::new(vec![batch, m], y)?;
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        Ok(self.push(value, Op::Dense { x, w, b, batch, n, m }, rg))
    }

    /// Batch normalisation over axis 1 of `[B, C]` or `[B, C, T]`.
    pub fn batch_norm(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        running: RunningStats<'_, S>,
        mode: Mode,
    ) -> Result<Var> {
        let s = self.value(x).shape().to_vec();
        if !(s.len() == 2 || s.len() == 3) {
            return Err(Error::Shape(format!("batch norm needs rank 2 or 3, got {s:?}")));
        }
        let (batch, channels) = (s[0], s[1]);
        let inner = if s.len() == 3 { s[2] } else { 1 };
        for t in [
            self.value(gamma).shape(),
            self.value(beta).shape(),
            running.mean.shape(),
            running.var.shape(),
        ] {
            if t != [channels] {
                return Err(Error::Shape(format!(
                    "batch norm parameter {t:?} for {channels} channels"
                )));
            }
        }
        let batch_stats = mode == Mode::Training;
        let (mean, var): (Vec<f64>, Vec<f64>) = if batch_stats {
            if batch < 2 {
                return Err(Error::InvalidArgument(
                    "batch norm in Training mode needs batch >= 2".into(),
                ));
            }
            let (m, v) = kernels::channel_moments(self.value(x).data(), batch, channels, inner);
            let mom = BN_MOMENTUM;
            for c in 0..channels {
                let rm = &mut running.mean.data_mut()[c];
                *rm = S::lit(mom * rm.as_f64() + (1.0 - mom) * m[c]);
                let rv = &mut running.var.data_mut()[c];
                *rv = S::lit(mom * rv.as_f64() + (1.0 - mom) * v[c]);
            }
            (m, v)
        } else {
            (
                running.mean.data().iter().map(|v| v.as_f64()).collect(),
                running.var.data().iter().map(|v| v.as_f64()).collect(),
            )
        };
        let inv_std: Vec<S> = var.iter().map(|v| S::lit(1.0 / (v + BN_EPS).sqrt())).collect();
        let mean: Vec<S> = mean.into_iter().map(S::lit).collect();
        let xv = self.value(x).data();
        let (g, bt) = (self.value(gamma).data(), self.value(beta).data());
        let mut xhat = Vec::with_capacity(xv.len());
        let mut y = Vec::with_capacity(xv.len());
        for (i, chunk) in xv.chunks_exact(inner).enumerate() {
            let c = i % channels;
            for &v in chunk {
                let h = (v - mean[c]) * inv_std[c];
                xhat.push(h);
                y.push(g[c] * h + bt[c]);
            }
        }
        let value = Tensor::new(s, y)?;
        let rg = self.rg(x) || self.rg(gamma) || self.rg(beta);
        Ok(self.push(
            value,
            Op::BatchNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
                batch_stats,
                channels,
                inner,
            },
            rg,
        ))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let y: Vec<S> = v
            .data()
            .iter()
            .map(|&a| if a > S::zero() { a } else { S::zero() })
            .collect();
        let value = Tensor::new(v.shape().to_vec(), y).expect("same shape");
        let rg = self.rg(x);
        self.push(value, Op::Relu { x }, rg)
    }

    /// Inverted dropout: identity in Inference mode.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, mode: Mode, rng: &mut R) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {rate} must be in [0, 1)"
            )));
        }
        if mode == Mode::Inference || rate == 0.0 {
            let value = self.value(x).clone();
            let n = value.len();
            let rg = self.rg(x);
            return Ok(self.push(
                value,
                Op::Dropout {
                    x,
                    keep: vec![true; n],
                    scale: S::one(),
                },
                rg,
            ));
        }
        let scale = S::lit(1.0 / (1.0 - rate));
        let v = self.value(x);
        let keep: Vec<bool> = (0..v.len()).map(|_| rng.gen::<f64>() >= rate).collect();
        let y: Vec<S> = v
            .data()
            .iter()
            .zip(&keep)
            .map(|(&a, &k)| if k { a * scale } else { S::zero() })
            .collect();
        let value = Tensor::new(v.shape().to_vec(), y)?;
        let rg = self.rg(x);
        Ok(self.push(value, Op::Dropout { x, keep, scale }, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(Error::Shape(format!("add {:?} + {:?}", va.shape(), vb.shape())));
        }
        let y: Vec<S> = va.data().iter().zip(vb.data()).map(|(&p, &q)| p + q).collect();
        let value = Tensor::new(va.shape().to_vec(), y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Add { a, b }, rg))
    }

    /// Scalar sum of all elements.
    pub fn sum(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.value(x).sum());
        let rg = self.rg(x);
        self.push(value, Op::Sum { x }, rg)
    }

    /// Scalar `sum(x * weights)` against a constant weight tensor of the same shape.
    pub fn weighted_sum(&mut self, x: Var, weights: &Tensor<S>) -> Result<Var> {
        let v = self.value(x);
        if v.shape() != weights.shape() {
            return Err(Error::Shape(format!(
                "weighted sum {:?} vs {:?}",
                v.shape(),
                weights.shape()
            )));
        }
        let total = v.data().iter().zip(weights.data()).map(|(&a, &w)| a * w).sum();
        let rg = self.rg(x);
        Ok(self.push(
            Tensor::scalar(total),
            Op::WeightedSum {
                x,
                weights: weights.data().to_vec(),
            },
            rg,
        ))
    }

    /// Mean softmax cross-entropy over the batch. Returns the loss node and the
    /// row-major class probabilities.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &[usize]) -> Result<(Var, Vec<S>)> {
        let s = self.value(logits).shape().to_vec();
        if s.len() != 2 || s[0] != targets.len() || targets.iter().any(|&t| t >= s[1]) {
            return Err(Error::Shape(format!(
                "logits {s:?} for {} targets",
                targets.len()
            )));
        }
        let l = self.value(logits).data();
        let probs = kernels::softmax_rows(l, s[1]);
        let total: S = l
            .chunks_exact(s[1])
            .zip(targets)
            .map(|(row, &t)| kernels::cross_entropy_row(row, t))
            .sum();
        let loss = total / S::lit(s[0] as f64);
        let rg = self.rg(logits);
        let v = self.push(
            Tensor::scalar(loss),
            Op::SoftmaxCrossEntropy {
                logits,
                probs: probs.clone(),
                targets: targets.to_vec(),
            },
            rg,
        );
        Ok((v, probs))
    }

    /// Reverse sweep from a scalar `loss`; returns one gradient per named parameter.
    pub fn backward(&self, loss: Var) -> Result<Gradients<S>> {
        if loss.0 >= self.nodes.len() {
            return Err(Error::InvalidArgument(
                "backward on a tape without that forward pass".into(),
            ));
        }
        if self.value(loss).len() != 1 {
            return Err(Error::Shape("backward needs a scalar loss".into()));
        }
        let mut grads: Vec<Option<Tensor<S>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(S::one()));
        let mut out = Gradients::new();

        for i in (0..=loss.0).rev() {
            let Some(dy) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let acc = |grads: &mut Vec<Option<Tensor<S>>>, v: Var, g: Tensor<S>| {
                if !self.nodes[v.0].requires_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(t) => t.add_assign(&g),
                    slot @ None => *slot = Some(g),
                }
            };
            match &node.op {
                Op::Input => {}
                Op::Param(name) => match out.get_mut(name) {
                    Some(t) => t.add_assign(&dy),
                    None => {
                        out.insert(name.clone(), dy);
                    }
                },
                Op::Conv1d { x, w, b, geom } => {
                    let mut dw = Tensor::zeros(self.value(*w).shape());
                    let mut db = Tensor::zeros(self.value(*b).shape());
                    let mut dx = self.rg(*x).then(|| Tensor::zeros(self.value(*x).shape()));
                    kernels::conv1d_backward(
                        geom,
                        self.value(*x).data(),
                        self.value(*w).data(),
                        dy.data(),
                        dw.data_mut(),
                        db.data_mut(),
                        dx.as_mut().map(|t| t.data_mut()),
                    );
                    acc(&mut grads, *w, dw);
                    acc(&mut grads, *b, db);
                    if let Some(dx) = dx {
                        acc(&mut grads, *x, dx);
                    }
                }
                Op::MaxPool2 { x, argmax } => {
                    let mut dx = Tensor::zeros(self.value(*x).shape());
                    let d = dx.data_mut();
                    for (g, &src) in dy.data().iter().zip(argmax) {
                        d[src as usize] += *g;
                    }
                    acc(&mut grads, *x, dx);
                }
                Op::GlobalAvgPool { x, time } => {
                    let inv = S::one() / S::lit(*time as f64);
                    let data: Vec<S> = dy
                        .data()
                        .iter()
                        .flat_map(|&g| std::iter::repeat_n(g * inv, *time))
                        .collect();
                    acc(
                        &mut grads,
                        *x,
                        Tensor::new(self.value(*x).shape().to_vec(), data)?,
                    );
                }
                Op::Dense { x, w, b, batch, n, m } => {
                    let mut dw = Tensor::zeros(self.value(*w).shape());
                    let mut db = Tensor::zeros(self.value(*b).shape());
                    let mut dx = self.rg(*x).then(|| Tensor::zeros(self.value(*x).shape()));
                    kernels::dense_backward(
                        self.value(*x).data(),
                        self.value(*w).data(),
                        dy.data(),
                        *batch,
                        *n,
                        *m,
                        dw.data_mut(),
                        db.data_mut(),
                        dx.as_mut().map(|t| t.data_mut()),
                    );
                    acc(&mut grads, *w, dw);
                    acc(&mut grads, *b, db);
                    if let Some(dx) = dx {
                        acc(&mut grads, *x, dx);
                    }
                }
                Op::BatchNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    inv_std,
                    batch_stats,
                    channels,
                    inner,
                } => {
                    let (c_n, inner) = (*channels, *inner);
                    let g = self.value(*gamma).data();
                    let mut dgamma = vec![0.0f64; c_n];
                    let mut dbeta = vec![0.0f64; c_n];
                    for (i, (dyc, xh)) in dy
                        .data()
                        .chunks_exact(inner)
                        .zip(xhat.chunks_exact(inner))
                        .enumerate()
                    {
                        let (p, q) = kernels::lane_dot_sum(dyc, xh);
                        dgamma[i % c_n] += p;
                        dbeta[i % c_n] += q;
                    }
                    let sum_dxhat_xhat: Vec<f64> = (0..c_n).map(|c| g[c].as_f64() * dgamma[c]).collect();
                    let sum_dxhat: Vec<f64> = (0..c_n).map(|c| g[c].as_f64() * dbeta[c]).collect();
                    if self.rg(*x) {
                        let count = (dy.len() / c_n) as f64;
                        let mut dx = Vec::with_capacity(dy.len());
                        for (i, (dyc, xh)) in dy
                            .data()
                            .chunks_exact(inner)
                            .zip(xhat.chunks_exact(inner))
                            .enumerate()
                        {
                            let c = i % c_n;
                            let gc = g[c];
                            if *batch_stats {
                                let k = inv_std[c].as_f64() / count;
                                for (&d, &h) in dyc.iter().zip(xh) {
                                    let dxh = (d * gc).as_f64();
                                    dx.push(S::lit(
                                        k * (count * dxh - sum_dxhat[c] - h.as_f64() * sum_dxhat_xhat[c]),
                                    ));
                                }
                            } else {
                                dx.extend(dyc.iter().map(|&d| d * gc * inv_std[c]));
                            }
                        }
                        acc(&mut grads, *x, Tensor::new(self.value(*x).shape().to_vec(), dx)?);
                    }
                    acc(
                        &mut grads,
                        *gamma,
                        Tensor::new(vec![c_n], dgamma.into_iter().map(S::lit).collect())?,
                    );
                    acc(
                        &mut grads,
                        *beta,
                        Tensor::new(vec![c_n], dbeta.into_iter().map(S::lit).collect())?,
                    );
                }
                Op::Relu { x } => {
                    let data: Vec<S> = dy
                        .data()
                        .iter()
                        .zip(node.value.data())
                        .map(|(&g, &y)| if y > S::zero() { g } else { S::zero() })
                        .collect();
                    acc(&mut grads, *x, Tensor::new(dy.shape().to_vec(), data)?);
                }
                Op::Dropout { x, keep, scale } => {
                    let data: Vec<S> = dy
                        .data()
                        .iter()
                        .zip(keep)
                        .map(|(&g, &k)| if k { g * *scale } else { S::zero() })
                        .collect();
                    acc(&mut grads, *x, Tensor::new(dy.shape().to_vec(), data)?);
                }
                Op::Add { a, b } => {
                    acc(&mut grads, *a, dy.clone());
                    acc(&mut grads, *b, dy);
                }
                Op::Sum { x } => {
                    let g = dy.data()[0];
                    acc(&mut grads, *x, Tensor::filled(self.value(*x).shape(), g));
                }
                Op::WeightedSum { x, weights } => {
                    let g = dy.data()[0];
                    let data = weights.iter().map(|&w| w * g).collect();
                    acc(
                        &mut grads,
                        *x,
                        Tensor::new(self.value(*x).shape().to_vec(), data)?,
                    );
                }
                Op::SoftmaxCrossEntropy {
                    logits,
                    probs,
                    targets,
                } => {
                    let g = dy.data()[0];
                    let k = self.value(*logits).dim(1);
                    let inv_b = S::one() / S::lit(targets.len() as f64);
                    let mut d: Vec<S> = probs.iter().map(|&p| p * inv_b * g).collect();
                    for (r, &t) in targets.iter().enumerate() {
                        d[r * k + t] -= inv_b * g;
                    }
                    acc(&mut grads, *logits, Tensor::new(vec![targets.len(), k], d)?);
                }
            }
        }
        Ok(out)
    }
}
