//! Latent-space sampling and augmentation strategies.

mod baselines;
mod edge;
mod internn;

pub use baselines::{random_noise_augment, smote_one, smote_variant};
pub use edge::{compute_edge_set, nearest_rank_percentile, EdgeParams};
pub use internn::{inter_nn, inter_nn_with_coef, interpolate, nearest_neighbor};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aae::{sphere_point, AaeModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

/// `n` codes uniformly distributed on the sphere of radius `r`.
pub fn magnitude_sample<T: Scalar, R: Rng + ?Sized>(latent_dim: usize, r: T, n: usize, rng: &mut R) -> Result<Matrix<T>> {
    if !(r >= T::zero() && r.is_finite()) {
        return Err(Error::InvalidConfig(format!("magnitude must be >= 0 (got {r})")));
    }
    if latent_dim == 0 {
        return Err(Error::InvalidConfig("latent_dim must be >= 1".into()));
    }
    let mut data = Vec::with_capacity(n * latent_dim);
    for _ in 0..n {
        data.extend(sphere_point(latent_dim, r, rng));
    }
    Ok(Matrix::from_vec_unchecked(n, latent_dim, data))
}

/// Everything produced by one DOPING pass.
#[derive(Debug, Clone)]
pub struct DopingOutput<T> {
    pub samples: Matrix<T>,
    pub latents: Matrix<T>,
    pub edge: EdgeParams<T>,
    pub edge_indices: Vec<usize>,
}

/// Encodes `x`, keeps the edge band, draws `k` band members with replacement,
/// moves each towards its nearest encoded neighbour, and decodes.
pub fn doping<T: Scalar, R: Rng + ?Sized>(model: &AaeModel<T>, x: &Matrix<T>, k: usize, rng: &mut R) -> Result<Matrix<T>> {
    Ok(doping_detailed(model, x, k, rng)?.samples)
}

pub fn doping_detailed<T: Scalar, R: Rng + ?Sized>(
    model: &AaeModel<T>,
    x: &Matrix<T>,
    k: usize,
    rng: &mut R,
) -> Result<DopingOutput<T>> {
    let z = model.encode(x)?;
    let (edge_indices, edge) = compute_edge_set(&z)?;
    if z.rows() < 2 {
        return Err(Error::PoolTooSmall {
            needed: 2,
            have: z.rows(),
        });
    }
    let mut data = Vec::with_capacity(k * z.cols());
    for _ in 0..k {
        let i = edge_indices[rng.random_range(0..edge_indices.len())];
        data.extend(inter_nn(z.row(i), &z, Some(i), rng)?);
    }
    let latents = Matrix::from_vec_unchecked(k, z.cols(), data);
    let samples = if k == 0 {
        Matrix::zeros(0, model.input_dim())
    } else {
        model.decode(&latents)?
    };
    Ok(DopingOutput {
        samples,
        latents,
        edge,
        edge_indices,
    })
}

/// How latent codes for synthesis are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum SynthStrategy {
    EdgeBased,
    Magnitude { r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthRequest {
    pub k: usize,
    pub strategy: SynthStrategy,
}

/// Decodes `request.k` synthetic rows from `model`.
pub fn synthesize<T: Scalar, R: Rng + ?Sized>(
    model: &AaeModel<T>,
    x: &Matrix<T>,
    request: &SynthRequest,
    rng: &mut R,
) -> Result<Matrix<T>> {
    match request.strategy {
        SynthStrategy::EdgeBased => doping(model, x, request.k, rng),
        SynthStrategy::Magnitude { r } => {
            if r <= 0.0 {
                return Err(Error::InvalidConfig(format!("magnitude request needs r > 0 (got {r})")));
            }
            let z = magnitude_sample(model.latent_dim(), T::of(r), request.k, rng)?;
            if request.k == 0 {
                return Ok(Matrix::zeros(0, model.input_dim()));
            }
            model.decode(&z)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AugmenterKind {
    Doping,
    RandomNoise { fraction: f64 },
    SmoteVariant,
}

impl AugmenterKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            AugmenterKind::RandomNoise { fraction } if !(*fraction > 0.0 && *fraction <= 1.0) => Err(
                Error::InvalidConfig(format!("noise fraction must be in (0, 1] (got {fraction})")),
            ),
            _ => Ok(()),
        }
    }
}

/// Appends `n` synthetic rows to `ds`. The result carries no labels: the
/// synthetic rows are unlabeled by construction.
pub fn augment_dataset<T: Scalar, R: Rng + ?Sized>(
    ds: &Dataset<T>,
    method: &AugmenterKind,
    n: usize,
    model: Option<&AaeModel<T>>,
    rng: &mut R,
) -> Result<Dataset<T>> {
    method.validate()?;
    let synth = match method {
        AugmenterKind::Doping => {
            let model = model.ok_or_else(|| Error::MissingModel("DOPING needs a trained AAE".into()))?;
            doping(model, &ds.x, n, rng)?
        }
        AugmenterKind::RandomNoise { fraction } => random_noise_augment(&ds.x, n, *fraction, rng)?,
        AugmenterKind::SmoteVariant => smote_variant(&ds.x, n, rng)?,
    };
    Ok(Dataset::unlabeled(ds.x.vstack(&synth)?, format!("{}+aug", ds.name)))
}

/// Appends already synthesized rows.
pub fn append_rows<T: Scalar>(ds: &Dataset<T>, synth: &Matrix<T>) -> Result<Dataset<T>> {
    Ok(Dataset::unlabeled(ds.x.vstack(synth)?, format!("{}+aug", ds.name)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHandle;

    #[test]
    fn magnitude_rows_on_sphere() {
        let mut rng = RngHandle::new(1).rng();
        let z: Matrix<f64> = magnitude_sample(2, 20.0, 100, &mut rng).unwrap();
        assert_eq!(z.shape(), (100, 2));
        assert!(z.row_norms().iter().all(|n| (n - 20.0).abs() < 1e-9));
        let z: Matrix<f64> = magnitude_sample(3, 0.0, 10, &mut rng).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        assert!(magnitude_sample::<f64, _>(2, -1.0, 1, &mut rng).is_err());
    }

    #[test]
    fn magnitude_angles_are_uniform() {
        let mut rng = RngHandle::new(17).rng();
        let n = 100_000;
        let z: Matrix<f64> = magnitude_sample(2, 5.0, n, &mut rng).unwrap();
        let mut bins = [0usize; 36];
        for r in z.iter_rows() {
            let a = r[1].atan2(r[0]) + std::f64::consts::PI;
            let b = ((a / std::f64::consts::TAU) * 36.0) as usize;
            bins[b.min(35)] += 1;
        }
        let expected = n as f64 / 36.0;
        let chi2: f64 = bins.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square with 35 dof: p = 0.001 at 66.62
        assert!(chi2 < 66.62, "chi2={chi2}");
    }

    #[test]
    fn augment_preserves_rows_and_counts() {
        let x = Matrix::from_rows(&[[0.1, 0.2], [0.9, 0.4], [0.5, 0.5], [0.3, 0.7]]).unwrap();
        let ds = Dataset::unlabeled(x.clone(), "d");
        let mut rng = RngHandle::new(3).rng();
        let out = augment_dataset(&ds, &AugmenterKind::SmoteVariant, 3, None, &mut rng).unwrap();
        assert_eq!(out.len(), 7);
        assert_eq!(out.x.select_rows(&[0, 1, 2, 3]), x);
        let same = augment_dataset(&ds, &AugmenterKind::SmoteVariant, 0, None, &mut rng).unwrap();
        assert_eq!(same.x, x);
        assert!(matches!(
            augment_dataset(&ds, &AugmenterKind::Doping, 3, None, &mut rng),
            Err(Error::MissingModel(_))
        ));
        let noisy = augment_dataset(&ds, &AugmenterKind::RandomNoise { fraction: 0.5 }, 2, None, &mut rng).unwrap();
        assert_eq!(noisy.len(), 6);
        assert!(AugmenterKind::RandomNoise { fraction: 0.0 }.validate().is_err());
    }
}
