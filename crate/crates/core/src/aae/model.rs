use serde::{Deserialize, Serialize};

use super::prior::Prior;
use crate::error::{Error, Result};
use crate::nn::{Activation, Matrix, Mlp};
use crate::scalar::Scalar;

/// Per-feature affine map applied before the encoder and undone after the
/// decoder, so the networks always see unit-scale data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![T::zero(); d],
            scale: vec![T::one(); d],
        }
    }

    /// Column means and population standard deviations; constant columns get
    /// scale 1.
    pub fn fit(x: &Matrix<T>) -> Self {
        let n = T::from_count(x.rows().max(1));
        let mean: Vec<T> = x.column_sums().into_iter().map(|s| s / n).collect();
        let mut var = vec![T::zero(); x.cols()];
        for row in x.iter_rows() {
            for ((v, &m), &xv) in var.iter_mut().zip(&mean).zip(row) {
                *v += (xv - m) * (xv - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > T::epsilon() {
                    s
                } else {
                    T::one()
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn forward(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, &m), &s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    pub fn inverse(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, &m), &s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = *v * s + m;
            }
        }
        out
    }
}

/// Trained adversarial autoencoder.
///
/// The encoder maps standardized inputs to `latent_dim` codes, the decoder
/// maps codes back (linear output layer), and the discriminator scores
/// `[code | one-hot label]` rows as prior draws (logit > 0) or encodings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AaeModel<T> {
    pub(crate) encoder: Mlp<T>,
    pub(crate) decoder: Mlp<T>,
    pub(crate) discriminator: Mlp<T>,
    pub(crate) input_dim: usize,
    pub(crate) latent_dim: usize,
    /// Width of the one-hot label appended to discriminator inputs; 0 when
    /// trained without labels.
    pub(crate) label_width: usize,
    pub(crate) prior: Prior,
    /// Prior used for anomalous rows in labeled training.
    pub(crate) anomaly_prior: Option<Prior>,
    pub(crate) scaler: Standardizer<T>,
}

impl<T: Scalar> AaeModel<T> {
    /// Assembles a model and checks every dimension invariant.
    pub fn from_parts(
        encoder: Mlp<T>,
        decoder: Mlp<T>,
        discriminator: Mlp<T>,
        prior: Prior,
        anomaly_prior: Option<Prior>,
        label_width: usize,
        scaler: Standardizer<T>,
    ) -> Result<Self> {
        let model = Self {
            input_dim: encoder.input_dim(),
            latent_dim: encoder.output_dim(),
            encoder,
            decoder,
            discriminator,
            label_width,
            prior,
            anomaly_prior,
            scaler,
        };
        model.validate()?;
        Ok(model)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("inconsistent AAE: {what}")));
        if self.encoder.input_dim() != self.input_dim || self.encoder.output_dim() != self.latent_dim {
            return bad("encoder dims");
        }
        if self.decoder.input_dim() != self.latent_dim || self.decoder.output_dim() != self.input_dim {
            return bad("decoder dims");
        }
        if self.discriminator.input_dim() != self.latent_dim + self.label_width
            || self.discriminator.output_dim() != 1
        {
            return bad("discriminator dims");
        }
        let last = self.decoder.layers().last().expect("non-empty mlp");
        if last.activation() != Activation::Linear {
            return bad("decoder output must be linear");
        }
        if self.prior.dim() != self.latent_dim {
            return bad("prior dim");
        }
        if let Some(p) = &self.anomaly_prior {
            if p.dim() != self.latent_dim {
                return bad("anomaly prior dim");
            }
        }
        if self.scaler.dim() != self.input_dim {
            return bad("scaler dim");
        }
        self.prior.validate()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn label_width(&self) -> usize {
        self.label_width
    }

    pub fn is_labeled(&self) -> bool {
        self.label_width > 0
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    pub fn anomaly_prior(&self) -> Option<&Prior> {
        self.anomaly_prior.as_ref()
    }

    pub fn encoder(&self) -> &Mlp<T> {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp<T> {
        &self.decoder
    }

    pub fn discriminator(&self) -> &Mlp<T> {
        &self.discriminator
    }

    pub fn scaler(&self) -> &Standardizer<T> {
        &self.scaler
    }

    /// `Z = E(X)`
    pub fn encode(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.input_dim {
            return Err(Error::dims("encode", self.input_dim, x.cols()));
        }
        self.encoder.predict(&self.scaler.forward(x))
    }

    /// `X' = D(Z)`
    pub fn decode(&self, z: &Matrix<T>) -> Result<Matrix<T>> {
        if z.cols() != self.latent_dim {
            return Err(Error::dims("decode", self.latent_dim, z.cols()));
        }
        Ok(self.scaler.inverse(&self.decoder.predict(z)?))
    }

    /// Mean squared reconstruction error in the original feature units.
    pub fn reconstruction_mse(&self, x: &Matrix<T>) -> Result<T> {
        let recon = self.decode(&self.encode(x)?)?;
        Ok(crate::nn::mse_loss(&recon, x)?.0)
    }

    /// Discriminator logits for codes `z`, with optional one-hot labels.
    pub fn discriminate(&self, z: &Matrix<T>, labels: Option<&[u8]>) -> Result<Matrix<T>> {
        let input = discriminator_input(z, labels, self.label_width)?;
        self.discriminator.predict(&input)
    }
}

pub(crate) fn discriminator_input<T: Scalar>(
    z: &Matrix<T>,
    labels: Option<&[u8]>,
    label_width: usize,
) -> Result<Matrix<T>> {
    if label_width == 0 {
        return Ok(z.clone());
    }
    let labels = labels.ok_or(Error::MissingLabels)?;
    if labels.len() != z.rows() {
        return Err(Error::dims("discriminator labels", z.rows(), labels.len()));
    }
    let mut onehot = Matrix::zeros(z.rows(), label_width);
    for (r, &l) in labels.iter().enumerate() {
        let l = l as usize;
        if l >= label_width {
            return Err(Error::InvalidLabel(l.to_string()));
        }
        onehot.set(r, l, T::one());
    }
    z.hstack(&onehot)
}
