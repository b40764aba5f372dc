use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Param<S> {
    pub value: Tensor<S>,
    /// False for batch-norm running statistics.
    pub trainable: bool,
}

/// Named model weights in a deterministic (sorted) order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterStore<S> {
    params: BTreeMap<String, Param<S>>,
}

impl<S: Scalar> ParameterStore<S> {
    pub fn new() -> Self {
        Self {
            params: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor<S>, trainable: bool) -> Result<()> {
        let name = name.into();
        if self.params.contains_key(&name) {
            return Err(Error::InvalidArgument(format!("duplicate parameter {name}")));
        }
        self.params.insert(name, Param { value, trainable });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<S>> {
        self.params
            .get(name)
            .map(|p| &p.value)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown parameter {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<S>> {
        self.params
            .get_mut(name)
            .map(|p| &mut p.value)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown parameter {name}")))
    }

    /// Mutable access to two distinct parameters at once.
    pub fn pair_mut(&mut self, a: &str, b: &str) -> Result<(&mut Tensor<S>, &mut Tensor<S>)> {
        let (mut pa, mut pb) = (None, None);
        for (k, p) in self.params.iter_mut() {
            if k == a {
                pa = Some(&mut p.value);
            } else if k == b {
                pb = Some(&mut p.value);
            }
        }
        match (pa, pb) {
            (Some(x), Some(y)) => Ok((x, y)),
            _ => Err(Error::InvalidArgument(format!("unknown parameter pair {a}/{b}"))),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Param<S>)> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Param<S>)> {
        self.params.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.params.keys()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn is_trainable(&self, name: &str) -> bool {
        self.params.get(name).is_some_and(|p| p.trainable)
    }

    /// Number of trainable scalars.
    pub fn trainable_count(&self) -> usize {
        self.params
            .values()
            .filter(|p| p.trainable)
            .map(|p| p.value.len())
            .sum()
    }

    pub fn cast<T: Scalar>(&self) -> ParameterStore<T> {
        ParameterStore {
            params: self
                .params
                .iter()
                .map(|(k, p)| {
                    (
                        k.clone(),
                        Param {
                            value: p.value.cast(),
                            trainable: p.trainable,
                        },
                    )
                })
                .collect(),
        }
    }
}

/// Uniform in `+-sqrt(6 / fan_in)`.
pub fn he_uniform<S: Scalar, R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor<S> {
    let bound = (6.0 / fan_in.max(1) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| S::lit(rng.gen_range(-bound..bound))).collect();
    Tensor::new(shape.to_vec(), data).expect("shape product")
}
