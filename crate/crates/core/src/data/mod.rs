//! Datasets: synthetic generators, CSV ingestion, and split policies.

mod csv_io;
mod split;
mod synthetic;

pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to};
pub use split::split_clean;
pub use synthetic::{gen_synthetic, SyntheticSpec, SyntheticVariant};

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// Feature matrix with optional per-row labels (0 normal, 1 anomaly).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub x: Matrix<T>,
    pub y: Option<Vec<u8>>,
    pub name: String,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(x: Matrix<T>, y: Option<Vec<u8>>, name: impl Into<String>) -> Result<Self> {
        if let Some(labels) = &y {
            if labels.len() != x.rows() {
                return Err(Error::dims("Dataset labels", x.rows(), labels.len()));
            }
            if let Some(bad) = labels.iter().find(|&&l| l > 1) {
                return Err(Error::InvalidLabel(bad.to_string()));
            }
        }
        let name = name.into();
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("features of dataset `{name}`")));
        }
        Ok(Self { x, y, name })
    }

    pub fn unlabeled(x: Matrix<T>, name: impl Into<String>) -> Self {
        Self {
            x,
            y: None,
            name: name.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn labels(&self) -> Result<&[u8]> {
        self.y.as_deref().ok_or(Error::MissingLabels)
    }

    pub fn count_anomalies(&self) -> Option<usize> {
        self.y.as_ref().map(|y| y.iter().filter(|&&l| l == 1).count())
    }

    /// Rows whose label equals `label`. Requires labels.
    pub fn rows_with_label(&self, label: u8) -> Result<Matrix<T>> {
        let y = self.labels()?;
        let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == label).collect();
        Ok(self.x.select_rows(&idx))
    }

    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Self {
        Self {
            x: self.x.select_rows(indices),
            y: self
                .y
                .as_ref()
                .map(|y| indices.iter().map(|&i| y[i]).collect()),
            name: name.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_length_and_values_checked() {
        let x = Matrix::<f64>::zeros(3, 2);
        assert!(Dataset::new(x.clone(), Some(vec![0, 1]), "d").is_err());
        assert!(Dataset::new(x.clone(), Some(vec![0, 1, 2]), "d").is_err());
        let d = Dataset::new(x, Some(vec![0, 1, 1]), "d").unwrap();
        assert_eq!(d.count_anomalies(), Some(2));
        assert_eq!(d.rows_with_label(0).unwrap().rows(), 1);
        assert_eq!(d.subset(&[2, 0], "s").y, Some(vec![1, 0]));
    }
}
