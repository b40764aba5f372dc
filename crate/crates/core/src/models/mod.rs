//! EcgNet, TabNet and their additive fusion, plus class activation mapping.

mod cam;
mod network;
mod spec;

pub use cam::{cam, Cam};
pub use network::{forward, init_params, predict_af1, predict_logits, Batch, ForwardOut};
pub use spec::{
    build_ecgnet, build_ecgnet_with, build_fullmodel, build_tabnet, build_tabnet_with, EcgNetConfig,
    LayerSpec, ModelKind, ModelSpec, TabNetConfig, FEATURE_DIM, N_CLASSES,
};

#[cfg(test)]
mod tests;
