pub mod data;
pub mod dsp;
pub mod error;
pub mod evalx;
pub mod hashing;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod scalar;
pub mod synthgen;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor32 = nn::Tensor<f32>;
pub type Tensor64 = nn::Tensor<f64>;
pub type Tape32 = nn::Tape<f32>;
pub type Tape64 = nn::Tape<f64>;
pub type Params32 = nn::ParameterStore<f32>;
pub type Params64 = nn::ParameterStore<f64>;
