//! Minimal dense network substrate: matrices, layers, losses and ADAM.

mod adam;
mod gradcheck;
mod loss;
mod matrix;
mod mlp;

pub use adam::{adam_step, AdamState};
pub use gradcheck::{grad_check, GradCheckReport};
pub use loss::{bce_logit_loss, mse_loss, sigmoid, LossKind};
pub use matrix::{l2_norm, squared_distance, Matrix};
pub use mlp::{Activation, Activations, DenseLayer, LayerGrads, Mlp, MlpGrads};
