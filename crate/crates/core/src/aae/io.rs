//! Versioned JSON model files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{AaeModel, Standardizer};
use super::prior::Prior;
use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::scalar::Scalar;

pub const MODEL_FORMAT: &str = "doping-aae";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ModelFile<T> {
    format: String,
    version: u32,
    scalar: String,
    input_dim: usize,
    latent_dim: usize,
    label_width: usize,
    prior: Prior,
    anomaly_prior: Option<Prior>,
    scaler: Standardizer<T>,
    encoder: Mlp<T>,
    decoder: Mlp<T>,
    discriminator: Mlp<T>,
}

pub fn to_json<T: Scalar>(model: &AaeModel<T>) -> String {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        scalar: T::NAME.into(),
        input_dim: model.input_dim,
        latent_dim: model.latent_dim,
        label_width: model.label_width,
        prior: model.prior.clone(),
        anomaly_prior: model.anomaly_prior.clone(),
        scaler: model.scaler.clone(),
        encoder: model.encoder.clone(),
        decoder: model.decoder.clone(),
        discriminator: model.discriminator.clone(),
    };
    let mut s = serde_json::to_string(&file).expect("model serializes");
    s.push('\n');
    s
}

pub fn from_json<T: Scalar>(text: &str) -> Result<AaeModel<T>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(MODEL_FORMAT) {
        return Err(Error::CorruptModel("missing or unknown `format` field".into()));
    }
    let version = value
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::CorruptModel("missing `version` field".into()))?;
    if version != u64::from(MODEL_VERSION) {
        return Err(Error::VersionMismatch {
            found: version.min(u64::from(u32::MAX)) as u32,
            expected: MODEL_VERSION,
        });
    }
    let file: ModelFile<T> =
        serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))?;
    if file.scalar != T::NAME {
        return Err(Error::CorruptModel(format!(
            "model stores {} weights, requested {}",
            file.scalar,
            T::NAME
        )));
    }
    for (name, mlp) in [
        ("encoder", &file.encoder),
        ("decoder", &file.decoder),
        ("discriminator", &file.discriminator),
    ] {
        check_mlp(name, mlp)?;
    }
    if file.scaler.mean.len() != file.scaler.scale.len()
        || file.scaler.scale.iter().any(|s| !(s.is_finite() && *s > T::zero()))
    {
        return Err(Error::CorruptModel("bad scaler".into()));
    }
    let model = AaeModel {
        encoder: file.encoder,
        decoder: file.decoder,
        discriminator: file.discriminator,
        input_dim: file.input_dim,
        latent_dim: file.latent_dim,
        label_width: file.label_width,
        prior: file.prior,
        anomaly_prior: file.anomaly_prior,
        scaler: file.scaler,
    };
    model
        .validate()
        .map_err(|e| Error::CorruptModel(e.to_string()))?;
    Ok(model)
}

fn check_mlp<T: Scalar>(name: &str, mlp: &Mlp<T>) -> Result<()> {
    let corrupt = |what: String| Err(Error::CorruptModel(format!("{name}: {what}")));
    if mlp.layers().is_empty() {
        return corrupt("no layers".into());
    }
    for (i, l) in mlp.layers().iter().enumerate() {
        let (r, c) = l.weights().shape();
        if l.weights().data().len() != r * c {
            return corrupt(format!("layer {i} weight count"));
        }
        if l.bias().len() != c {
            return corrupt(format!("layer {i} bias length"));
        }
        if !l.weights().is_finite() || l.bias().iter().any(|b| !b.is_finite()) {
            return corrupt(format!("layer {i} has non-finite parameters"));
        }
    }
    for (i, w) in mlp.layers().windows(2).enumerate() {
        if w[0].output_dim() != w[1].input_dim() {
            return corrupt(format!("layers {i} and {} do not chain", i + 1));
        }
    }
    Ok(())
}

pub fn save_model<T: Scalar>(model: &AaeModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<AaeModel<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
