//! Minimal reverse-mode engine with exactly the layers the three networks use,
//! plus Adam, the step-decay schedule and the tensor checkpoint container.

mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod kernels;
mod mode;
mod params;
mod schedule;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use checkpoint::TensorFile;
pub use mode::Mode;
pub use params::{he_uniform, Param, ParameterStore};
pub use schedule::{lr_at_epoch, HALF_PERIOD, LR0};
pub use tape::{Gradients, RunningStats, Tape, Var, BN_EPS, BN_MOMENTUM};
pub use tensor::Tensor;
