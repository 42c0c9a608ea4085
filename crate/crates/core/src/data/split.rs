use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::RngHandle;
use crate::scalar::Scalar;

/// Random `train_fraction` split where the training part keeps only normal
/// rows. The test part keeps both classes.
pub fn split_clean<T: Scalar>(
    ds: &Dataset<T>,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>)> {
    let y = ds.labels()?;
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction {train_fraction} outside (0, 1]"
        )));
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut RngHandle::new(seed).rng());
    let n_train = (train_fraction * ds.len() as f64).round() as usize;
    let (train_idx, test_idx) = idx.split_at(n_train);
    if test_idx.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "train fraction {train_fraction} leaves an empty test split"
        )));
    }
    let normal_train: Vec<usize> = train_idx.iter().copied().filter(|&i| y[i] == 0).collect();
    if normal_train.is_empty() {
        return Err(Error::NoNormalRows);
    }
    Ok((
        ds.subset(&normal_train, format!("{}-train", ds.name)),
        ds.subset(test_idx, format!("{}-test", ds.name)),
    ))
}
