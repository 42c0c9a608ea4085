//! Latent priors the encoder distribution is pushed towards.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    /// Independent zero-mean normals with per-dimension standard deviation.
    MultivariateGaussian { dim: usize, sigma: Vec<f64> },
    /// Independent per-dimension generalized Gaussians with density
    /// `beta / (2 alpha Gamma(1/beta)) * exp(-(|x - mu| / alpha)^beta)`.
    GeneralizedGaussian {
        dim: usize,
        mu: f64,
        alpha: f64,
        beta: f64,
    },
    /// Uniform on the sphere `||z|| = radius`.
    Ring { dim: usize, radius: f64 },
}

impl Prior {
    /// Isotropic Gaussian with the same `sigma` on every axis.
    pub fn gaussian(dim: usize, sigma: f64) -> Self {
        Prior::MultivariateGaussian {
            dim,
            sigma: vec![sigma; dim],
        }
    }

    pub fn generalized_gaussian(dim: usize, mu: f64, alpha: f64, beta: f64) -> Self {
        Prior::GeneralizedGaussian {
            dim,
            mu,
            alpha,
            beta,
        }
    }

    pub fn ring(dim: usize, radius: f64) -> Self {
        Prior::Ring { dim, radius }
    }

    pub fn dim(&self) -> usize {
        match self {
            Prior::MultivariateGaussian { dim, .. }
            | Prior::GeneralizedGaussian { dim, .. }
            | Prior::Ring { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Prior::MultivariateGaussian { dim, sigma } => {
                *dim >= 1 && sigma.len() == *dim && sigma.iter().all(|&s| s > 0.0 && s.is_finite())
            }
            Prior::GeneralizedGaussian {
                dim,
                mu,
                alpha,
                beta,
            } => *dim >= 1 && mu.is_finite() && *alpha > 0.0 && *beta > 0.0 && alpha.is_finite() && beta.is_finite(),
            Prior::Ring { dim, radius } => *dim >= 1 && *radius > 0.0 && radius.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid prior {self:?}")))
        }
    }

    /// `n` i.i.d. draws as rows.
    pub fn sample<T: Scalar, R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Matrix<T> {
        let d = self.dim();
        let mut data = Vec::with_capacity(n * d);
        match self {
            Prior::MultivariateGaussian { sigma, .. } => {
                for _ in 0..n {
                    for &s in sigma {
                        data.push(T::of(s) * T::standard_normal(rng));
                    }
                }
            }
            Prior::GeneralizedGaussian {
                mu, alpha, beta, ..
            } => {
                let (mu, alpha, beta) = (T::of(*mu), T::of(*alpha), T::of(*beta));
                for _ in 0..n * d {
                    data.push(sample_generalized_gaussian(mu, alpha, beta, rng));
                }
            }
            Prior::Ring { radius, .. } => {
                for _ in 0..n {
                    data.extend(sphere_point(d, T::of(*radius), rng));
                }
            }
        }
        Matrix::from_vec_unchecked(n, d, data)
    }

    /// Closed-form CDF of `||z||` where one exists: Rayleigh for isotropic
    /// 2-D Gaussians, a step for rings.
    pub fn norm_cdf(&self, r: f64) -> Option<f64> {
        match self {
            Prior::MultivariateGaussian { dim: 2, sigma } if sigma[0] == sigma[1] => {
                let s = sigma[0];
                Some(if r <= 0.0 { 0.0 } else { 1.0 - (-r * r / (2.0 * s * s)).exp() })
            }
            Prior::Ring { radius, .. } => Some(if r < *radius { 0.0 } else { 1.0 }),
            _ => None,
        }
    }
}

/// Exact sampler: `mu + alpha * s * G^(1/beta)` with `G ~ Gamma(1/beta, 1)`
/// and a fair random sign `s`.
pub fn sample_generalized_gaussian<T: Scalar, R: Rng + ?Sized>(mu: T, alpha: T, beta: T, rng: &mut R) -> T {
    let g = T::gamma(T::one() / beta, rng);
    let magnitude = g.powf(T::one() / beta);
    let sign = if rng.random::<bool>() { T::one() } else { -T::one() };
    mu + alpha * sign * magnitude
}

/// Density of the generalized Gaussian.
pub fn generalized_gaussian_pdf(x: f64, mu: f64, alpha: f64, beta: f64) -> f64 {
    let norm = beta / (2.0 * alpha * gamma_fn(1.0 / beta));
    norm * (-((x - mu).abs() / alpha).powf(beta)).exp()
}

/// Lanczos approximation (g = 7, 9 terms), ~1e-15 relative accuracy for
/// positive arguments.
fn gamma_fn(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + G + 0.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Uniform direction on the `d`-sphere scaled to `radius`.
pub(crate) fn sphere_point<T: Scalar, R: Rng + ?Sized>(d: usize, radius: T, rng: &mut R) -> Vec<T> {
    loop {
        let v: Vec<T> = (0..d).map(|_| T::standard_normal(rng)).collect();
        let norm = crate::nn::l2_norm(&v);
        if norm > T::zero() {
            return v.into_iter().map(|x| x / norm * radius).collect();
        }
    }
}
