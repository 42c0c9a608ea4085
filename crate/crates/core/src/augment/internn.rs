use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{squared_distance, Matrix};
use crate::scalar::Scalar;

/// Index of the Euclidean nearest neighbour of `query` in `pool`, skipping
/// row `exclude`. Ties go to the lowest index.
pub fn nearest_neighbor<T: Scalar>(query: &[T], pool: &Matrix<T>, exclude: Option<usize>) -> Result<usize> {
    if query.len() != pool.cols() {
        return Err(Error::dims("nearest_neighbor", pool.cols(), query.len()));
    }
    let mut best: Option<(usize, T)> = None;
    for (i, row) in pool.iter_rows().enumerate() {
        if Some(i) == exclude {
            continue;
        }
        let d = squared_distance(query, row);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::PoolTooSmall {
        needed: 1,
        have: 0,
    })
}

/// `coef * (to - from) + from`
pub fn interpolate<T: Scalar>(from: &[T], to: &[T], coef: T) -> Vec<T> {
    from.iter().zip(to).map(|(&a, &b)| coef * (b - a) + a).collect()
}

/// Moves `z_sample` a uniform random fraction of the way towards its nearest
/// neighbour in `pool` (excluding row `exclude`, normally the sample itself).
pub fn inter_nn<T: Scalar, R: Rng + ?Sized>(
    z_sample: &[T],
    pool: &Matrix<T>,
    exclude: Option<usize>,
    rng: &mut R,
) -> Result<Vec<T>> {
    let coef = T::unit(rng);
    inter_nn_with_coef(z_sample, pool, exclude, coef)
}

/// [`inter_nn`] with a caller-chosen interpolation coefficient.
pub fn inter_nn_with_coef<T: Scalar>(
    z_sample: &[T],
    pool: &Matrix<T>,
    exclude: Option<usize>,
    coef: T,
) -> Result<Vec<T>> {
    let available = pool.rows() - usize::from(exclude.is_some_and(|e| e < pool.rows()));
    if available == 0 {
        return Err(Error::PoolTooSmall {
            needed: 1,
            have: 0,
        });
    }
    let nn = nearest_neighbor(z_sample, pool, exclude)?;
    Ok(interpolate(z_sample, pool.row(nn), coef))
}
