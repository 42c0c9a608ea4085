//! Adversarial autoencoder: priors, model, training, and model files.

mod io;
mod model;
mod prior;
mod train;

pub use io::{from_json, load_model, save_model, to_json, MODEL_FORMAT, MODEL_VERSION};
pub use model::{AaeModel, Standardizer};
pub use prior::{generalized_gaussian_pdf, sample_generalized_gaussian, Prior};
pub use train::{
    default_anomaly_prior, discriminator_accuracy, train_labeled, train_unlabeled, AaeTrainConfig,
    TrainHistory,
};

use rand::Rng;

use crate::nn::Matrix;
use crate::scalar::Scalar;

/// `n` i.i.d. rows drawn from `prior`.
pub fn sample_prior<T: Scalar, R: Rng + ?Sized>(prior: &Prior, n: usize, rng: &mut R) -> Matrix<T> {
    prior.sample(n, rng)
}

pub(crate) use prior::sphere_point;
