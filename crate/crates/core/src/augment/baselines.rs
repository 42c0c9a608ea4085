use rand::seq::index;
use rand::Rng;

use super::internn::{interpolate, nearest_neighbor};
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// Copies `n` random rows and flips a random `fraction` of each copy's
/// coordinates: values below 0.5 become 1, the rest become 0.
pub fn random_noise_augment<T: Scalar, R: Rng + ?Sized>(
    x: &Matrix<T>,
    n: usize,
    fraction: f64,
    rng: &mut R,
) -> Result<Matrix<T>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!("noise fraction {fraction} outside [0, 1]")));
    }
    for (r, row) in x.iter_rows().enumerate() {
        if let Some(c) = row.iter().position(|&v| v < T::zero() || v > T::one()) {
            return Err(Error::OutOfUnitRange {
                row: r,
                col: c,
                value: row[c].as_f64(),
            });
        }
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, x.cols()));
    }
    if x.rows() == 0 {
        return Err(Error::PoolTooSmall { needed: 1, have: 0 });
    }
    let d = x.cols();
    let flips = (fraction * d as f64).round() as usize;
    let half = T::of(0.5);
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let mut row = x.row(rng.random_range(0..x.rows())).to_vec();
        for j in index::sample(rng, d, flips) {
            row[j] = if row[j] < half { T::one() } else { T::zero() };
        }
        data.extend(row);
    }
    Ok(Matrix::from_vec_unchecked(n, d, data))
}

/// One interpolation from source row `src` towards its nearest other row.
pub fn smote_one<T: Scalar>(x: &Matrix<T>, src: usize, coef: T) -> Result<Vec<T>> {
    let nn = nearest_neighbor(x.row(src), x, Some(src))?;
    Ok(interpolate(x.row(src), x.row(nn), coef))
}

/// `n` nearest-neighbour interpolations from uniformly chosen source rows,
/// with no regard to class.
pub fn smote_variant<T: Scalar, R: Rng + ?Sized>(x: &Matrix<T>, n: usize, rng: &mut R) -> Result<Matrix<T>> {
    if x.rows() < 2 {
        return Err(Error::PoolTooSmall {
            needed: 2,
            have: x.rows(),
        });
    }
    let mut data = Vec::with_capacity(n * x.cols());
    for _ in 0..n {
        let src = rng.random_range(0..x.rows());
        let coef = T::unit(rng);
        data.extend(smote_one(x, src, coef)?);
    }
    Ok(Matrix::from_vec_unchecked(n, x.cols(), data))
}
