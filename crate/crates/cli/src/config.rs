use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use doping_core::aae::{AaeTrainConfig, Prior};
use doping_core::detect::DetectorConfig;
use doping_core::eval::{sweep_aae, NSynth, SweepGrid};
use serde::{Deserialize, Serialize};

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "DOPING_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub aae: AaeSection,
    pub detector: DetectorConfig,
    pub sweep: SweepSection,
    pub augment: AugmentSection,
    pub seeds: Vec<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            aae: AaeSection::default(),
            detector: DetectorConfig::default(),
            sweep: SweepSection::default(),
            augment: AugmentSection::default(),
            seeds: vec![1, 2, 3, 4, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AaeSection {
    pub hidden: usize,
    pub hidden_layers: usize,
    pub latent_dim: usize,
    /// Normal-class prior; its dimension is overridden by `latent_dim`.
    pub prior: Prior,
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for AaeSection {
    fn default() -> Self {
        let t = AaeTrainConfig::default();
        Self {
            hidden: t.hidden_units,
            hidden_layers: t.hidden_layers,
            latent_dim: 2,
            prior: Prior::gaussian(2, 10.0),
            steps: t.steps,
            batch: t.batch_size,
            lr: t.lr,
            seed: t.seed,
        }
    }
}

impl AaeSection {
    pub fn train_config(&self, labeled: bool) -> AaeTrainConfig {
        let cfg = AaeTrainConfig {
            steps: self.steps,
            batch_size: self.batch,
            lr: self.lr,
            hidden_units: self.hidden,
            hidden_layers: self.hidden_layers,
            seed: self.seed,
            ..AaeTrainConfig::default()
        };
        if labeled {
            cfg.labeled()
        } else {
            cfg
        }
    }

    pub fn prior(&self) -> Prior {
        let mut p = self.prior.clone();
        match &mut p {
            Prior::MultivariateGaussian { dim, sigma } => {
                if sigma.len() != self.latent_dim {
                    let s = sigma.first().copied().unwrap_or(10.0);
                    *sigma = vec![s; self.latent_dim];
                }
                *dim = self.latent_dim;
            }
            Prior::GeneralizedGaussian { dim, .. } | Prior::Ring { dim, .. } => *dim = self.latent_dim,
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub grid: SweepGrid,
    pub radii: Vec<f64>,
    pub n_synth: usize,
    /// Train the sweep AAE with labels and an anomaly ring prior.
    pub labeled: bool,
    /// Minibatch steps for the sweep AAE; `null` falls back to `aae.steps`.
    pub steps: Option<usize>,
    /// Learning rate for the sweep AAE; `null` falls back to `aae.lr`.
    pub lr: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            grid: SweepGrid::synthetic(),
            radii: (1..=20).map(|i| 5.0 * f64::from(i)).collect(),
            n_synth: 100,
            labeled: true,
            steps: Some(sweep_aae().steps),
            lr: Some(sweep_aae().lr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub method: String,
    pub n_synth: String,
    pub grid: SweepGrid,
    pub tpr_target: Option<f64>,
}

impl Default for AugmentSection {
    fn default() -> Self {
        Self {
            method: "doping".into(),
            n_synth: "10%".into(),
            grid: SweepGrid::real_world(),
            tpr_target: None,
        }
    }
}

impl AugmentSection {
    pub fn n_synth(&self) -> Result<NSynth> {
        Ok(self.n_synth.parse()?)
    }
}

/// `--config`, then `$DOPING_CONFIG`, then built-in defaults.
pub fn load(explicit: Option<&Path>) -> Result<RunConfig> {
    let path: Option<PathBuf> = explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(&p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_defaults_match_builtin() {
        let text = include_str!("../../../configs/default.json");
        let parsed: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(parsed, RunConfig::default());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"aae": {"steps": 10}}"#).unwrap();
        assert_eq!(cfg.aae.steps, 10);
        assert_eq!(cfg.aae.batch, 100);
        assert_eq!(cfg.detector.n_trees, 100);
        assert!(serde_json::from_str::<RunConfig>(r#"{"aae": {"stepz": 10}}"#).is_err());
    }

    #[test]
    fn prior_follows_latent_dim() {
        let s = AaeSection {
            latent_dim: 3,
            ..AaeSection::default()
        };
        assert_eq!(s.prior(), Prior::gaussian(3, 10.0));
    }
}
