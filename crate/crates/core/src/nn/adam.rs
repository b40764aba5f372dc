use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::nn::{Gradients, ParameterStore, Tensor};
use crate::scalar::Scalar;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First/second moments per trainable parameter plus the step counter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState<S> {
    pub t: u64,
    moments: BTreeMap<String, (Tensor<S>, Tensor<S>)>,
}

impl<S: Scalar> AdamState<S> {
    pub fn new() -> Self {
        Self {
            t: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn moments(&self, name: &str) -> Option<(&Tensor<S>, &Tensor<S>)> {
        self.moments.get(name).map(|(m, v)| (m, v))
    }
}

/// One bias-corrected Adam update of every trainable parameter.
pub fn adam_step<S: Scalar>(
    params: &mut ParameterStore<S>,
    grads: &Gradients<S>,
    state: &mut AdamState<S>,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate {lr} must be positive"
        )));
    }
    for (name, g) in grads {
        if !g.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite gradient for parameter {name}"
            )));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    let (b1, b2) = (S::lit(BETA1), S::lit(BETA2));
    let (ob1, ob2) = (S::lit(1.0 - BETA1), S::lit(1.0 - BETA2));
    let step = S::lit(lr / c1);
    let inv_sqrt_c2 = S::lit(1.0 / c2.sqrt());
    let eps = S::lit(EPSILON);
    for (name, p) in params.iter_mut() {
        if !p.trainable {
            continue;
        }
        let g = grads
            .get(name)
            .ok_or_else(|| Error::InvalidArgument(format!("no gradient for parameter {name}")))?;
        if g.shape() != p.value.shape() {
            return Err(Error::Shape(format!(
                "gradient {:?} for parameter {name} {:?}",
                g.shape(),
                p.value.shape()
            )));
        }
        let (m, v) = state
            .moments
            .entry(name.clone())
            .or_insert_with(|| (Tensor::zeros(g.shape()), Tensor::zeros(g.shape())));
        for (((w, &gi), mi), vi) in p
            .value
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *mi = b1 * *mi + ob1 * gi;
            *vi = b2 * *vi + ob2 * gi * gi;
            *w -= step * *mi / (vi.sqrt() * inv_sqrt_c2 + eps);
        }
    }
    Ok(())
}
