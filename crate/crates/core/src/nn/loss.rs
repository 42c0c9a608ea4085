use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossKind {
    /// Mean squared error against a target matrix.
    Mse,
    /// Binary cross-entropy on logits against a 0/1 target matrix.
    BceLogits,
}

impl LossKind {
    pub fn eval<T: Scalar>(self, pred: &Matrix<T>, target: &Matrix<T>) -> Result<(T, Matrix<T>)> {
        match self {
            LossKind::Mse => mse_loss(pred, target),
            LossKind::BceLogits => bce_logit_loss(pred, target),
        }
    }
}

/// Mean of squared residuals over every entry, and its gradient
/// `2 (pred - target) / count`.
pub fn mse_loss<T: Scalar>(pred: &Matrix<T>, target: &Matrix<T>) -> Result<(T, Matrix<T>)> {
    if pred.shape() != target.shape() {
        return Err(Error::dims(
            "mse_loss",
            format!("{:?}", target.shape()),
            format!("{:?}", pred.shape()),
        ));
    }
    let count = T::from_count(pred.data().len().max(1));
    let two = T::of(2.0);
    let mut loss = T::zero();
    let grad: Vec<T> = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let r = p - t;
            loss += r * r;
            two * r / count
        })
        .collect();
    Ok((loss / count, Matrix::from_vec_unchecked(pred.rows(), pred.cols(), grad)))
}

/// Numerically stable mean binary cross-entropy on logits.
///
/// Per entry: `max(l, 0) - l*y + ln(1 + exp(-|l|))`; gradient
/// `(sigmoid(l) - y) / count`.
pub fn bce_logit_loss<T: Scalar>(logits: &Matrix<T>, labels: &Matrix<T>) -> Result<(T, Matrix<T>)> {
    if logits.shape() != labels.shape() {
        return Err(Error::dims(
            "bce_logit_loss",
            format!("{:?}", labels.shape()),
            format!("{:?}", logits.shape()),
        ));
    }
    if let Some(bad) = labels
        .data()
        .iter()
        .find(|&&y| y != T::zero() && y != T::one())
    {
        return Err(Error::InvalidLabel(bad.to_string()));
    }
    let count = T::from_count(logits.data().len().max(1));
    let mut loss = T::zero();
    let grad: Vec<T> = logits
        .data()
        .iter()
        .zip(labels.data())
        .map(|(&l, &y)| {
            loss += l.max(T::zero()) - l * y + (-l.abs()).exp().ln_1p();
            (sigmoid(l) - y) / count
        })
        .collect();
    Ok((loss / count, Matrix::from_vec_unchecked(logits.rows(), logits.cols(), grad)))
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> Matrix<f64> {
        Matrix::from_rows(&[v]).unwrap()
    }

    #[test]
    fn mse_examples() {
        let (l, g) = mse_loss(&row(&[3.0, -1.0]), &row(&[3.0, -1.0])).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.data().iter().all(|&v| v == 0.0));

        let (l, g) = mse_loss(&row(&[1.0, 1.0]), &row(&[0.0, 0.0])).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(g.data(), &[1.0, 1.0]);

        assert!(mse_loss(&row(&[1.0]), &row(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn mse_is_quadratic_in_residual() {
        let target = row(&[0.5, -2.0, 1.0]);
        let pred = row(&[1.5, 0.0, 0.0]);
        let (base, _) = mse_loss(&pred, &target).unwrap();
        let c = 3.0;
        let scaled: Vec<f64> = pred
            .data()
            .iter()
            .zip(target.data())
            .map(|(p, t)| t + c * (p - t))
            .collect();
        let (l, _) = mse_loss(&row(&scaled), &target).unwrap();
        assert!((l - c * c * base).abs() < 1e-12);
    }

    #[test]
    fn bce_examples() {
        let (l, _) = bce_logit_loss(&row(&[0.0]), &row(&[1.0])).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);

        let (l, g) = bce_logit_loss(&row(&[50.0]), &row(&[1.0])).unwrap();
        assert!(l.is_finite() && l < 1e-20);
        assert!(g.data()[0].abs() < 1e-20);

        let (_, g) = bce_logit_loss(&row(&[0.0]), &row(&[0.0])).unwrap();
        assert_eq!(g.data(), &[0.5]);

        assert!(matches!(
            bce_logit_loss(&row(&[0.0]), &row(&[0.5])),
            Err(Error::InvalidLabel(_))
        ));
    }

    #[test]
    fn bce_finite_at_extreme_logits() {
        for &l in &[-1e6, -1e3, -40.0, 40.0, 1e3, 1e6] {
            for &y in &[0.0, 1.0] {
                let (loss, g) = bce_logit_loss(&row(&[l]), &row(&[y])).unwrap();
                assert!(loss.is_finite(), "logit {l} label {y}");
                assert!(g.is_finite());
            }
        }
    }
}
