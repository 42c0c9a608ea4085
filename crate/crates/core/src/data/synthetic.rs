use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::rng::RngHandle;
use crate::scalar::Scalar;

/// The three toy layouts.
///
/// * `A`: normals ~ N(0, 10^2 I) in 2-D, anomalies ~ N([30, 0], 5^2 I).
/// * `B`: the same in 3-D, anomaly mean `[30, 0, 0]`.
/// * `C`: normals on a ring (uniform angle, radius ~ N(30, 5^2) truncated at
///   zero), anomalies ~ N(0, 5^2 I) in the middle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SyntheticVariant {
    A,
    B,
    C,
}

impl SyntheticVariant {
    pub fn dim(self) -> usize {
        match self {
            SyntheticVariant::B => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for SyntheticVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SyntheticVariant::A => "a",
            SyntheticVariant::B => "b",
            SyntheticVariant::C => "c",
        };
        f.write_str(s)
    }
}

impl FromStr for SyntheticVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(SyntheticVariant::A),
            "b" => Ok(SyntheticVariant::B),
            "c" => Ok(SyntheticVariant::C),
            other => Err(Error::InvalidConfig(format!("unknown dataset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub variant: SyntheticVariant,
    pub n_train: usize,
    pub n_test: usize,
    pub contamination: f64,
}

impl SyntheticSpec {
    /// 1000 train / 1000 test rows, 5% anomalies.
    pub fn new(variant: SyntheticVariant) -> Self {
        Self {
            variant,
            n_train: 1000,
            n_test: 1000,
            contamination: 0.05,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_train < 20 || self.n_test < 20 {
            return Err(Error::InvalidConfig(format!(
                "synthetic counts must be >= 20 (train {}, test {})",
                self.n_train, self.n_test
            )));
        }
        if !(self.contamination > 0.0 && self.contamination < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "contamination {} outside (0, 1)",
                self.contamination
            )));
        }
        Ok(())
    }
}

const NORMAL_SIGMA: f64 = 10.0;
const ANOMALY_SIGMA: f64 = 5.0;
const ANOMALY_OFFSET: f64 = 30.0;
const RING_RADIUS: f64 = 30.0;
const RING_SIGMA: f64 = 5.0;

/// Draws train and test splits from disjoint substreams of `seed`.
pub fn gen_synthetic<T: Scalar>(spec: &SyntheticSpec, seed: u64) -> Result<(Dataset<T>, Dataset<T>)> {
    spec.validate()?;
    let handle = RngHandle::new(seed);
    let train = draw(spec, spec.n_train, &mut handle.substream(0), "train")?;
    let test = draw(spec, spec.n_test, &mut handle.substream(1), "test")?;
    Ok((train, test))
}

fn draw<T: Scalar, R: Rng>(spec: &SyntheticSpec, n: usize, rng: &mut R, split: &str) -> Result<Dataset<T>> {
    let d = spec.variant.dim();
    let n_anom = (spec.contamination * n as f64).round() as usize;
    let n_norm = n - n_anom;

    let mut rows: Vec<(Vec<T>, u8)> = Vec::with_capacity(n);
    for _ in 0..n_norm {
        rows.push((normal_point(spec.variant, d, rng), 0));
    }
    for _ in 0..n_anom {
        rows.push((anomaly_point(spec.variant, d, rng), 1));
    }
    rows.shuffle(rng);

    let mut data = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for (p, l) in rows {
        data.extend(p);
        y.push(l);
    }
    Dataset::new(
        Matrix::new(n, d, data)?,
        Some(y),
        format!("synthetic-{}-{split}", spec.variant),
    )
}

fn gaussian<T: Scalar, R: Rng>(mean: &[f64], sigma: f64, rng: &mut R) -> Vec<T> {
    mean.iter()
        .map(|&m| T::of(m) + T::of(sigma) * T::standard_normal(rng))
        .collect()
}

fn normal_point<T: Scalar, R: Rng>(variant: SyntheticVariant, d: usize, rng: &mut R) -> Vec<T> {
    match variant {
        SyntheticVariant::A | SyntheticVariant::B => gaussian(&vec![0.0; d], NORMAL_SIGMA, rng),
        SyntheticVariant::C => {
            let theta = T::of(std::f64::consts::TAU) * T::unit(rng);
            let radius = loop {
                let r = T::of(RING_RADIUS) + T::of(RING_SIGMA) * T::standard_normal(rng);
                if r >= T::zero() {
                    break r;
                }
            };
            vec![radius * theta.cos(), radius * theta.sin()]
        }
    }
}

fn anomaly_point<T: Scalar, R: Rng>(variant: SyntheticVariant, d: usize, rng: &mut R) -> Vec<T> {
    match variant {
        SyntheticVariant::A | SyntheticVariant::B => {
            let mut mean = vec![0.0; d];
            mean[0] = ANOMALY_OFFSET;
            gaussian(&mean, ANOMALY_SIGMA, rng)
        }
        SyntheticVariant::C => gaussian(&[0.0, 0.0], ANOMALY_SIGMA, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_counts() {
        let (train, test) = gen_synthetic::<f64>(&SyntheticSpec::new(SyntheticVariant::A), 7).unwrap();
        assert_eq!(train.len(), 1000);
        assert_eq!(test.len(), 1000);
        assert_eq!(train.count_anomalies(), Some(50));
        assert_eq!(test.count_anomalies(), Some(50));
        assert_eq!(train.dim(), 2);
    }

    #[test]
    fn reproducible_and_substreams_disjoint() {
        let spec = SyntheticSpec::new(SyntheticVariant::B);
        let (a1, b1) = gen_synthetic::<f64>(&spec, 3).unwrap();
        let (a2, b2) = gen_synthetic::<f64>(&spec, 3).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(b1, b2);
        assert_ne!(a1.x, b1.x);
        assert_eq!(a1.dim(), 3);
    }

    #[test]
    fn anomaly_mean_near_offset() {
        // 20 seeds x 50 anomalies: std of the pooled mean is 5/sqrt(1000) ~ 0.16
        let spec = SyntheticSpec::new(SyntheticVariant::A);
        let mut sum = [0.0; 2];
        let mut count = 0.0;
        for seed in 0..20 {
            let (train, _) = gen_synthetic::<f64>(&spec, seed).unwrap();
            let anomalies = train.rows_with_label(1).unwrap();
            for r in anomalies.iter_rows() {
                sum[0] += r[0];
                sum[1] += r[1];
                count += 1.0;
            }
        }
        assert!((sum[0] / count - 30.0).abs() < 1.0);
        assert!((sum[1] / count).abs() < 1.0);
    }

    #[test]
    fn ring_radius_mean_near_thirty() {
        let spec = SyntheticSpec::new(SyntheticVariant::C);
        let mut total = 0.0;
        let mut count = 0.0;
        for seed in 0..10 {
            let (train, _) = gen_synthetic::<f64>(&spec, seed).unwrap();
            for r in train.rows_with_label(0).unwrap().iter_rows() {
                total += (r[0] * r[0] + r[1] * r[1]).sqrt();
                count += 1.0;
            }
        }
        assert!((total / count - 30.0).abs() < 0.5);
    }

    #[test]
    fn small_counts_rejected() {
        let mut spec = SyntheticSpec::new(SyntheticVariant::A);
        spec.n_test = 10;
        assert!(gen_synthetic::<f64>(&spec, 0).is_err());
        assert!("d".parse::<SyntheticVariant>().is_err());
        assert_eq!("C".parse::<SyntheticVariant>().unwrap(), SyntheticVariant::C);
    }
}
