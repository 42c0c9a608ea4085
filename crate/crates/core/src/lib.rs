//! Latent-space data augmentation for unsupervised anomaly detection.
//!
//! An adversarial autoencoder shapes the latent distribution of the training
//! data; codes near the edge of that distribution are interpolated and
//! decoded into extra "infrequent normal" rows, and an Isolation Forest is
//! trained on the augmented set.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases below fix the scalar type for the common cases.

pub mod aae;
pub mod augment;
pub mod data;
pub mod detect;
pub mod error;
pub mod eval;
pub mod nn;
pub mod rng;
pub mod scalar;

pub use aae::{AaeModel, AaeTrainConfig, Prior};
pub use augment::{doping, AugmenterKind, EdgeParams, SynthRequest, SynthStrategy};
pub use data::{Dataset, SyntheticSpec, SyntheticVariant};
pub use detect::{AnomalyDetector, Contamination, DetectorConfig, IsolationForest};
pub use error::{Error, Result};
pub use eval::{MetricReport, RocCurve, SweepGrid};
pub use nn::{Matrix, Mlp};
pub use rng::RngHandle;
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Mlp64 = Mlp<f64>;
pub type AaeModel64 = AaeModel<f64>;
pub type Dataset64 = Dataset<f64>;
pub type IsolationForest64 = IsolationForest<f64>;

pub type Matrix32 = Matrix<f32>;
pub type Mlp32 = Mlp<f32>;
pub type AaeModel32 = AaeModel<f32>;
pub type Dataset32 = Dataset<f32>;
pub type IsolationForest32 = IsolationForest<f32>;
