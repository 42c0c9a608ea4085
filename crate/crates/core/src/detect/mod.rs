//! Isolation Forest with contamination-threshold prediction.

mod iforest;

pub use iforest::{average_path_length, DetectorConfig, IsolationForest, ITree, ITreeNode};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// Fraction of training rows a detector is told to flag, strictly in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Contamination(f64);

impl Contamination {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidConfig(format!("contamination {value} outside (0, 1)")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Contamination {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Contamination> for f64 {
    fn from(c: Contamination) -> f64 {
        c.0
    }
}

/// Anything that scores rows (higher = more anomalous) and can threshold
/// them at a contamination level.
pub trait AnomalyDetector<T: Scalar> {
    fn score_samples(&self, x: &Matrix<T>) -> Result<Vec<f64>>;

    /// 1 = anomaly.
    fn predict(&self, x: &Matrix<T>, contamination: Contamination) -> Result<Vec<u8>>;

    /// One flag vector per contamination level.
    fn predict_sweep(&self, x: &Matrix<T>, levels: &[Contamination]) -> Result<Vec<Vec<u8>>> {
        levels.iter().map(|&c| self.predict(x, c)).collect()
    }
}
