//! Adaptive-momentum optimizers with moment and gradient centralization.
//!
//! The crate provides SGD, SGD with momentum, Adam, RAdam and AdaBelief over
//! named flat parameter tensors. Each rule can be combined with gradient
//! centralization (mean removed from the raw gradient) or moment
//! centralization (mean removed from the first moment after its update).
//!
//! Two differentiable problems come with it: a 2-D landscape for trajectory
//! studies ([`toy`]) and a small softmax classifier ([`mlp`]).

pub mod centralize;
pub mod config;
pub mod data;
pub mod error;
pub mod mlp;
pub mod optimizer;
pub mod rectify;
pub mod state;
pub mod tensor;
pub mod toy;

pub use centralize::{centralize_gradient, centralize_moment};
pub use config::{Centralization, OptimizerConfig, RectifierScale, Variant};
pub use data::{make_synthetic, Dataset};
pub use error::{OptimError, Result};
pub use mlp::{mlp_backward, mlp_forward, Activation, InitScheme, MlpSpec};
pub use optimizer::{adabelief_step, adam_step, radam_step, sgd_step, Optimizer, StepInfo};
pub use rectify::RectificationInfo;
pub use state::MomentState;
pub use tensor::ParameterTensor;
pub use toy::{toy_gradient, toy_objective, ToyPoint};
