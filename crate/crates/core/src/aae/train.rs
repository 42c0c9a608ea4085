//! Unlabeled and labeled adversarial autoencoder training.
//!
//! Each minibatch runs three phases in order:
//!
//! 1. reconstruction: encoder and decoder descend `MSE(D(E(x)), x)`;
//! 2. regularization, discriminator side: prior draws are labeled 1 and
//!    encodings 0, the discriminator descends its BCE;
//! 3. regularization, generator side: the encoder descends the BCE of the
//!    discriminator calling its encodings 1 (non-saturating form).

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{discriminator_input, AaeModel, Standardizer};
use super::prior::Prior;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{adam_step, bce_logit_loss, mse_loss, Activation, AdamState, Matrix, Mlp};
use crate::rng::{Rng64, RngHandle};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AaeTrainConfig {
    /// Minibatch steps (each step runs all three phases).
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub seed: u64,
    pub labeled: bool,
    /// One-hot width for labeled training; 2 (normal, anomaly) when labeled.
    pub label_width: usize,
}

impl Default for AaeTrainConfig {
    /// Desk-scale profile for low-dimensional data.
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 100,
            lr: 1e-3,
            hidden_units: 64,
            hidden_layers: 2,
            seed: 0,
            labeled: false,
            label_width: 0,
        }
    }
}

impl AaeTrainConfig {
    /// Two hidden layers of 1000 units and a learning rate of 1e-4.
    pub fn full_scale() -> Self {
        Self {
            hidden_units: 1000,
            lr: 1e-4,
            ..Self::default()
        }
    }

    pub fn labeled(mut self) -> Self {
        self.labeled = true;
        self.label_width = 2;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!("lr must be > 0 (got {})", self.lr)));
        }
        if self.hidden_units == 0 {
            return Err(Error::InvalidConfig("hidden_units must be >= 1".into()));
        }
        if self.labeled && self.label_width < 2 {
            return Err(Error::InvalidConfig("labeled training needs label_width >= 2".into()));
        }
        Ok(())
    }
}

/// Mean losses per epoch (one full pass over the shuffled rows).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub reconstruction: Vec<f64>,
    pub discriminator: Vec<f64>,
    pub generator: Vec<f64>,
}

/// Trains on every row of `train`, ignoring any labels.
pub fn train_unlabeled<T: Scalar>(
    train: &Dataset<T>,
    cfg: &AaeTrainConfig,
    prior: &Prior,
) -> Result<(AaeModel<T>, TrainHistory)> {
    let unlabeled_cfg = AaeTrainConfig {
        labeled: false,
        label_width: 0,
        ..cfg.clone()
    };
    let mut trainer = Trainer::new(&train.x, None, &unlabeled_cfg, prior.clone(), None)?;
    trainer.run(unlabeled_cfg.steps)?;
    Ok(trainer.finish())
}

/// Trains with per-row labels: anomalous rows are matched to
/// `anomaly_prior`, normal rows to `normal_prior`, and the discriminator sees
/// the one-hot label next to each code.
///
/// A labeling with no anomalies carries no information; training then
/// proceeds exactly as [`train_unlabeled`] with the same seed.
pub fn train_labeled<T: Scalar>(
    train: &Dataset<T>,
    labels: &[u8],
    cfg: &AaeTrainConfig,
    normal_prior: &Prior,
    anomaly_prior: &Prior,
) -> Result<(AaeModel<T>, TrainHistory)> {
    if !cfg.labeled {
        return Err(Error::InvalidConfig("train_labeled requires cfg.labeled = true".into()));
    }
    if labels.len() != train.len() {
        return Err(Error::dims("train_labeled labels", train.len(), labels.len()));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidLabel(bad.to_string()));
    }
    if labels.iter().all(|&l| l == 0) {
        return train_unlabeled(train, cfg, normal_prior);
    }
    let mut trainer = Trainer::new(
        &train.x,
        Some(labels),
        cfg,
        normal_prior.clone(),
        Some(anomaly_prior.clone()),
    )?;
    trainer.run(cfg.steps)?;
    Ok(trainer.finish())
}

/// Ring of radius 100 in the latent dimension of `normal_prior`.
pub fn default_anomaly_prior(normal_prior: &Prior) -> Prior {
    Prior::ring(normal_prior.dim(), 100.0)
}

pub(crate) struct Trainer<'a, T: Scalar> {
    model: AaeModel<T>,
    x: Matrix<T>,
    labels: Option<&'a [u8]>,
    batch_size: usize,
    recon_enc: AdamState<T>,
    recon_dec: AdamState<T>,
    disc_opt: AdamState<T>,
    gen_enc: AdamState<T>,
    batch_rng: Rng64,
    prior_rng: Rng64,
    order: Vec<usize>,
    cursor: usize,
    epoch_sums: [f64; 3],
    epoch_steps: usize,
    history: TrainHistory,
}

impl<'a, T: Scalar> Trainer<'a, T> {
    pub(crate) fn new(
        x_raw: &Matrix<T>,
        labels: Option<&'a [u8]>,
        cfg: &AaeTrainConfig,
        prior: Prior,
        anomaly_prior: Option<Prior>,
    ) -> Result<Self> {
        cfg.validate()?;
        prior.validate()?;
        if let Some(p) = &anomaly_prior {
            p.validate()?;
            if p.dim() != prior.dim() {
                return Err(Error::dims("anomaly prior", prior.dim(), p.dim()));
            }
        }
        if x_raw.rows() == 0 {
            return Err(Error::InvalidConfig("cannot train on an empty dataset".into()));
        }
        if !x_raw.is_finite() {
            return Err(Error::NonFinite("training features".into()));
        }
        let label_width = if labels.is_some() { cfg.label_width } else { 0 };

        let handle = RngHandle::new(cfg.seed);
        let mut init_rng = handle.substream(0);
        let d = x_raw.cols();
        let k = prior.dim();
        let h = cfg.hidden_units;
        let hidden = vec![h; cfg.hidden_layers];
        let dims = |a: usize, b: usize| {
            let mut v = vec![a];
            v.extend_from_slice(&hidden);
            v.push(b);
            v
        };
        let encoder = Mlp::glorot(&dims(d, k), Activation::Relu, Activation::Linear, &mut init_rng)?;
        let decoder = Mlp::glorot(&dims(k, d), Activation::Relu, Activation::Linear, &mut init_rng)?;
        let discriminator = Mlp::glorot(
            &dims(k + label_width, 1),
            Activation::Relu,
            Activation::Linear,
            &mut init_rng,
        )?;

        let scaler = Standardizer::fit(x_raw);
        let x = scaler.forward(x_raw);
        let lr = T::of(cfg.lr);
        let model = AaeModel::from_parts(encoder, decoder, discriminator, prior, anomaly_prior, label_width, scaler)?;
        let n = x.rows();
        Ok(Self {
            recon_enc: AdamState::new(&model.encoder, lr)?,
            recon_dec: AdamState::new(&model.decoder, lr)?,
            disc_opt: AdamState::new(&model.discriminator, lr)?,
            gen_enc: AdamState::new(&model.encoder, lr)?,
            model,
            x,
            labels,
            batch_size: cfg.batch_size.min(n),
            batch_rng: handle.substream(1),
            prior_rng: handle.substream(2),
            order: Vec::new(),
            cursor: usize::MAX,
            epoch_sums: [0.0; 3],
            epoch_steps: 0,
            history: TrainHistory::default(),
        })
    }

    pub(crate) fn run(&mut self, steps: usize) -> Result<()> {
        for step in 0..steps {
            let idx = self.next_batch();
            let (xb, lb) = self.batch(&idx);
            let losses = [
                self.reconstruction_step(&xb)?,
                self.discriminator_step(&xb, lb.as_deref())?,
                self.generator_step(&xb, lb.as_deref())?,
            ];
            for (name, l) in ["reconstruction", "discriminator", "generator"].iter().zip(losses) {
                if !l.is_finite() {
                    return Err(Error::NonFinite(format!("{name} loss at step {step}")));
                }
            }
            for (s, l) in self.epoch_sums.iter_mut().zip(losses) {
                *s += l;
            }
            self.epoch_steps += 1;
        }
        Ok(())
    }

    pub(crate) fn finish(mut self) -> (AaeModel<T>, TrainHistory) {
        self.close_epoch();
        (self.model, self.history)
    }

    #[cfg(test)]
    pub(crate) fn model(&self) -> &AaeModel<T> {
        &self.model
    }

    fn close_epoch(&mut self) {
        if self.epoch_steps > 0 {
            let n = self.epoch_steps as f64;
            self.history.reconstruction.push(self.epoch_sums[0] / n);
            self.history.discriminator.push(self.epoch_sums[1] / n);
            self.history.generator.push(self.epoch_sums[2] / n);
        }
        self.epoch_sums = [0.0; 3];
        self.epoch_steps = 0;
    }

    fn next_batch(&mut self) -> Vec<usize> {
        let n = self.x.rows();
        if self.cursor == usize::MAX || self.cursor + self.batch_size > n {
            if self.cursor != usize::MAX {
                self.close_epoch();
            }
            self.order = (0..n).collect();
            self.order.shuffle(&mut self.batch_rng);
            self.cursor = 0;
        }
        let idx = self.order[self.cursor..self.cursor + self.batch_size].to_vec();
        self.cursor += self.batch_size;
        idx
    }

    pub(crate) fn batch(&self, idx: &[usize]) -> (Matrix<T>, Option<Vec<u8>>) {
        (
            self.x.select_rows(idx),
            self.labels.map(|l| idx.iter().map(|&i| l[i]).collect()),
        )
    }

    fn reconstruction_step(&mut self, xb: &Matrix<T>) -> Result<f64> {
        let m = &mut self.model;
        let enc = m.encoder.forward(xb)?;
        let dec = m.decoder.forward(enc.output())?;
        let (loss, g) = mse_loss(dec.output(), xb)?;
        let (g_dec, g_z) = m.decoder.backward(&dec, &g)?;
        let (g_enc, _) = m.encoder.backward(&enc, &g_z)?;
        adam_step(&mut m.decoder, &g_dec, &mut self.recon_dec)?;
        adam_step(&mut m.encoder, &g_enc, &mut self.recon_enc)?;
        Ok(loss.as_f64())
    }

    /// Prior draws for a batch: per-row anomaly prior where labeled anomalous.
    fn prior_draws(&mut self, rows: usize, labels: Option<&[u8]>) -> Matrix<T> {
        let m = &self.model;
        match (labels, &m.anomaly_prior) {
            (Some(labels), Some(anomaly)) => {
                let k = m.latent_dim;
                let mut data = Vec::with_capacity(rows * k);
                for &l in labels {
                    let p = if l == 1 { anomaly } else { &m.prior };
                    data.extend_from_slice(p.sample::<T, _>(1, &mut self.prior_rng).data());
                }
                Matrix::from_vec_unchecked(rows, k, data)
            }
            _ => m.prior.sample(rows, &mut self.prior_rng),
        }
    }

    /// Real codes (label 1) stacked over encodings (label 0).
    pub(crate) fn discriminator_batch(
        &mut self,
        xb: &Matrix<T>,
        labels: Option<&[u8]>,
    ) -> Result<(Matrix<T>, Matrix<T>)> {
        let b = xb.rows();
        let real = self.prior_draws(b, labels);
        let fake = self.model.encoder.predict(xb)?;
        let lw = self.model.label_width;
        let input = discriminator_input(&real, labels, lw)?.vstack(&discriminator_input(&fake, labels, lw)?)?;
        let mut targets = vec![T::one(); b];
        targets.extend(std::iter::repeat_n(T::zero(), b));
        Ok((input, Matrix::from_vec_unchecked(2 * b, 1, targets)))
    }

    pub(crate) fn discriminator_update(&mut self, input: &Matrix<T>, targets: &Matrix<T>) -> Result<f64> {
        let m = &mut self.model;
        let acts = m.discriminator.forward(input)?;
        let (loss, g) = bce_logit_loss(acts.output(), targets)?;
        let (g_disc, _) = m.discriminator.backward(&acts, &g)?;
        adam_step(&mut m.discriminator, &g_disc, &mut self.disc_opt)?;
        Ok(loss.as_f64())
    }

    fn discriminator_step(&mut self, xb: &Matrix<T>, labels: Option<&[u8]>) -> Result<f64> {
        let (input, targets) = self.discriminator_batch(xb, labels)?;
        self.discriminator_update(&input, &targets)
    }

    fn generator_step(&mut self, xb: &Matrix<T>, labels: Option<&[u8]>) -> Result<f64> {
        let m = &mut self.model;
        let enc = m.encoder.forward(xb)?;
        let input = discriminator_input(enc.output(), labels, m.label_width)?;
        let d = m.discriminator.forward(&input)?;
        let ones = Matrix::from_vec_unchecked(xb.rows(), 1, vec![T::one(); xb.rows()]);
        let (loss, g) = bce_logit_loss(d.output(), &ones)?;
        let (_, g_in) = m.discriminator.backward(&d, &g)?;
        let g_z = g_in.left_columns(m.latent_dim);
        let (g_enc, _) = m.encoder.backward(&enc, &g_z)?;
        adam_step(&mut m.encoder, &g_enc, &mut self.gen_enc)?;
        Ok(loss.as_f64())
    }

    #[cfg(test)]
    pub(crate) fn set_lr(&mut self, lr: T) {
        for st in [
            &mut self.recon_enc,
            &mut self.recon_dec,
            &mut self.disc_opt,
            &mut self.gen_enc,
        ] {
            st.lr = lr;
        }
    }
}

/// Fraction of correct discriminator calls on `n` fresh prior draws and the
/// encodings of `n` random rows of `x`.
pub fn discriminator_accuracy<T: Scalar>(
    model: &AaeModel<T>,
    x: &Matrix<T>,
    labels: Option<&[u8]>,
    n: usize,
    seed: u64,
) -> Result<f64> {
    let handle = RngHandle::new(seed);
    let mut rng = handle.rng();
    let idx: Vec<usize> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0..x.rows())).collect();
    let xb = x.select_rows(&idx);
    let lb: Option<Vec<u8>> = labels.map(|l| idx.iter().map(|&i| l[i]).collect());
    let real = match (&lb, model.anomaly_prior()) {
        (Some(lb), Some(anomaly)) => {
            let mut data = Vec::new();
            for &l in lb {
                let p = if l == 1 { anomaly } else { model.prior() };
                data.extend_from_slice(p.sample::<T, _>(1, &mut rng).data());
            }
            Matrix::from_vec_unchecked(n, model.latent_dim(), data)
        }
        _ => model.prior().sample(n, &mut rng),
    };
    let fake = model.encode(&xb)?;
    let lb = if model.is_labeled() { lb } else { None };
    let real_logits = model.discriminate(&real, lb.as_deref())?;
    let fake_logits = model.discriminate(&fake, lb.as_deref())?;
    let correct = real_logits.data().iter().filter(|&&l| l > T::zero()).count()
        + fake_logits.data().iter().filter(|&&l| l <= T::zero()).count();
    Ok(correct as f64 / (2 * n) as f64)
}
