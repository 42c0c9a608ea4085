use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::roc::{evaluate_detector, MetricReport, SweepGrid};
use crate::aae::{default_anomaly_prior, train_labeled, train_unlabeled, AaeModel, AaeTrainConfig, Prior};
use crate::augment::{append_rows, augment_dataset, magnitude_sample, AugmenterKind};
use crate::data::Dataset;
use crate::detect::{DetectorConfig, IsolationForest};
use crate::error::{Error, Result};
use crate::rng::RngHandle;
use crate::scalar::Scalar;

/// Independent random streams for one seed of an experiment.
#[derive(Debug, Clone, Copy)]
pub struct SeedStreams {
    pub aae_seed: u64,
    pub synth: RngHandle,
    pub detector: RngHandle,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        let root = RngHandle::new(seed);
        Self {
            aae_seed: root.derive(1).seed,
            synth: root.derive(2),
            detector: root.derive(3),
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

fn default_prior() -> Prior {
    Prior::gaussian(2, 10.0)
}

/// Labeled profile for the magnitude sweep. The anomaly codes have to travel
/// out to the ring prior, which takes longer than matching the normal prior.
pub fn sweep_aae() -> AaeTrainConfig {
    AaeTrainConfig {
        steps: 5000,
        lr: 2e-3,
        ..AaeTrainConfig::default()
    }
    .labeled()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MagnitudeSweepConfig {
    /// `labeled = true` trains the per-seed AAE with the training labels and
    /// an anomaly ring prior.
    pub aae: AaeTrainConfig,
    pub prior: Prior,
    pub detector: DetectorConfig,
    pub grid: SweepGrid,
    pub radii: Vec<f64>,
    pub n_synth: usize,
    pub seeds: Vec<u64>,
}

impl Default for MagnitudeSweepConfig {
    fn default() -> Self {
        Self {
            aae: sweep_aae(),
            prior: default_prior(),
            detector: DetectorConfig::default(),
            grid: SweepGrid::synthetic(),
            radii: (1..=20).map(|i| 5.0 * i as f64).collect(),
            n_synth: 100,
            seeds: default_seeds(),
        }
    }
}

impl MagnitudeSweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.aae.validate()?;
        self.prior.validate()?;
        self.grid.validate()?;
        if let Some(r) = self.radii.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidConfig(format!("radius must be > 0 (got {r})")));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        Ok(())
    }
}

/// Trains the AAE used by every radius of one seed.
pub fn train_sweep_model<T: Scalar>(train: &Dataset<T>, cfg: &MagnitudeSweepConfig, seed: u64) -> Result<AaeModel<T>> {
    let aae = cfg.aae.clone().with_seed(SeedStreams::new(seed).aae_seed);
    let (model, _) = if aae.labeled {
        let anomaly = default_anomaly_prior(&cfg.prior);
        train_labeled(train, train.labels()?, &aae, &cfg.prior, &anomaly)?
    } else {
        train_unlabeled(train, &aae, &cfg.prior)?
    };
    Ok(model)
}

/// One (radius, seed) cell; `radius = None` is the no-augmentation baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeCell {
    pub radius: Option<f64>,
    pub seed: u64,
    pub auc: f64,
}

fn fit_detector<T: Scalar>(x: &Dataset<T>, cfg: &DetectorConfig, seed: u64) -> Result<IsolationForest<T>> {
    IsolationForest::fit_with(&x.x, cfg, &mut SeedStreams::new(seed).detector.rng())
}

/// The detector stream is shared by every cell of a seed, so the baseline and
/// each radius differ only in the training data.
pub fn magnitude_cell<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    model: &AaeModel<T>,
    radius: Option<f64>,
    cfg: &MagnitudeSweepConfig,
    seed: u64,
) -> Result<MagnitudeCell> {
    let augmented = match radius {
        None => Dataset::unlabeled(train.x.clone(), train.name.clone()),
        Some(r) => {
            let mut rng = SeedStreams::new(seed).synth.substream(r.to_bits());
            let z = magnitude_sample(model.latent_dim(), T::of(r), cfg.n_synth, &mut rng)?;
            let synth = if cfg.n_synth == 0 { z } else { model.decode(&z)? };
            append_rows(train, &synth)?
        }
    };
    let detector = fit_detector(&augmented, &cfg.detector, seed)?;
    let report = evaluate_detector(&detector, test, &cfg.grid, None)?;
    Ok(MagnitudeCell {
        radius,
        seed,
        auc: report.auc,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeRow {
    pub radius: Option<f64>,
    pub mean_auc: f64,
    pub std_auc: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeSweepTable {
    pub cells: Vec<MagnitudeCell>,
    /// Baseline first, then radii ascending.
    pub rows: Vec<MagnitudeRow>,
}

impl MagnitudeSweepTable {
    /// Cells may arrive in any order.
    pub fn from_cells(mut cells: Vec<MagnitudeCell>) -> Self {
        let key = |c: &MagnitudeCell| c.radius.unwrap_or(f64::NEG_INFINITY);
        cells.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.seed.cmp(&b.seed)));
        let mut rows: Vec<MagnitudeRow> = Vec::new();
        for group in cells.chunk_by(|a, b| a.radius == b.radius) {
            let aucs: Vec<f64> = group.iter().map(|c| c.auc).collect();
            let (mean_auc, std_auc) = mean_std(&aucs);
            rows.push(MagnitudeRow {
                radius: group[0].radius,
                mean_auc,
                std_auc,
                n: aucs.len(),
            });
        }
        Self { cells, rows }
    }

    pub fn baseline(&self) -> Option<&MagnitudeRow> {
        self.rows.iter().find(|r| r.radius.is_none())
    }

    pub fn row(&self, radius: f64) -> Option<&MagnitudeRow> {
        self.rows.iter().find(|r| r.radius == Some(radius))
    }

    /// Radius row with the highest mean AUC.
    pub fn best(&self) -> Option<&MagnitudeRow> {
        self.rows
            .iter()
            .filter(|r| r.radius.is_some())
            .fold(None, |b: Option<&MagnitudeRow>, r| match b {
                Some(b) if b.mean_auc >= r.mean_auc => Some(b),
                _ => Some(r),
            })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "radius,seed,auc")?;
        for c in &self.cells {
            match c.radius {
                Some(r) => writeln!(w, "{r},{},{}", c.seed, c.auc)?,
                None => writeln!(w, "none,{},{}", c.seed, c.auc)?,
            }
        }
        Ok(())
    }
}

/// Baseline plus every radius, for every seed, run in sequence.
pub fn magnitude_sweep_experiment<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    cfg: &MagnitudeSweepConfig,
) -> Result<MagnitudeSweepTable> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &seed in &cfg.seeds {
        let model = train_sweep_model(train, cfg, seed)?;
        for radius in std::iter::once(None).chain(cfg.radii.iter().map(|&r| Some(r))) {
            cells.push(magnitude_cell(train, test, &model, radius, cfg, seed)?);
        }
    }
    Ok(MagnitudeSweepTable::from_cells(cells))
}

/// Training-set treatment compared by [`compare_augmenters`]. Serialized as
/// its display name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    None,
    Augment(AugmenterKind),
}

impl Method {
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::None => f.write_str("none"),
            Method::Augment(AugmenterKind::Doping) => f.write_str("doping"),
            Method::Augment(AugmenterKind::SmoteVariant) => f.write_str("smote"),
            Method::Augment(AugmenterKind::RandomNoise { fraction }) => write!(f, "noise:{fraction}"),
        }
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Method {
    type Err = Error;

    /// `none`, `doping`, `smote`, `noise` (10% of coordinates) or `noise:<fraction>`.
    fn from_str(s: &str) -> Result<Self> {
        let m = match s.trim().to_ascii_lowercase().as_str() {
            "none" => Method::None,
            "doping" => Method::Augment(AugmenterKind::Doping),
            "smote" => Method::Augment(AugmenterKind::SmoteVariant),
            "noise" => Method::Augment(AugmenterKind::RandomNoise { fraction: 0.1 }),
            other => match other.strip_prefix("noise:") {
                Some(f) => {
                    let fraction = f
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad noise fraction {f:?}")))?;
                    Method::Augment(AugmenterKind::RandomNoise { fraction })
                }
                None => return Err(Error::InvalidConfig(format!("unknown method {s:?}"))),
            },
        };
        if let Method::Augment(kind) = &m {
            kind.validate()?;
        }
        Ok(m)
    }
}

/// Number of synthetic rows, absolute or as a fraction of the training size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NSynth {
    Count(usize),
    Fraction(f64),
}

impl NSynth {
    pub fn resolve(&self, train_len: usize) -> usize {
        match *self {
            NSynth::Count(n) => n,
            NSynth::Fraction(f) => (f * train_len as f64).round() as usize,
        }
    }
}

impl Default for NSynth {
    fn default() -> Self {
        NSynth::Fraction(0.1)
    }
}

impl FromStr for NSynth {
    type Err = Error;

    /// `10%` or `100`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidConfig(format!("bad synthetic count {s:?}"));
        match s.strip_suffix('%') {
            Some(p) => {
                let pct: f64 = p.trim().parse().map_err(|_| bad())?;
                if !(pct >= 0.0 && pct.is_finite()) {
                    return Err(bad());
                }
                Ok(NSynth::Fraction(pct / 100.0))
            }
            None => s.parse().map(NSynth::Count).map_err(|_| bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub aae: AaeTrainConfig,
    pub prior: Prior,
    pub detector: DetectorConfig,
    pub grid: SweepGrid,
    pub methods: Vec<Method>,
    pub n_synth: NSynth,
    pub seeds: Vec<u64>,
    pub tpr_target: Option<f64>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            aae: AaeTrainConfig::default(),
            prior: default_prior(),
            detector: DetectorConfig::default(),
            grid: SweepGrid::real_world(),
            methods: vec![
                Method::None,
                Method::Augment(AugmenterKind::Doping),
                Method::Augment(AugmenterKind::SmoteVariant),
            ],
            n_synth: NSynth::default(),
            seeds: default_seeds(),
            tpr_target: None,
        }
    }
}

impl CompareConfig {
    pub fn validate(&self) -> Result<()> {
        self.aae.validate()?;
        self.prior.validate()?;
        self.grid.validate()?;
        for m in &self.methods {
            if let Method::Augment(k) = m {
                k.validate()?;
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareCell {
    pub method: String,
    pub seed: u64,
    pub auc: f64,
    pub best_f1: f64,
    pub g_measure: f64,
}

/// Unlabeled AAE for a DOPING cell.
pub fn train_compare_model<T: Scalar>(train: &Dataset<T>, cfg: &CompareConfig, seed: u64) -> Result<AaeModel<T>> {
    let aae = AaeTrainConfig {
        labeled: false,
        label_width: 0,
        ..cfg.aae.clone()
    }
    .with_seed(SeedStreams::new(seed).aae_seed);
    Ok(train_unlabeled(train, &aae, &cfg.prior)?.0)
}

/// Full report for one (method, seed) cell. `model` is trained on demand for
/// DOPING when not supplied.
pub fn compare_report<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    method: &Method,
    cfg: &CompareConfig,
    seed: u64,
    model: Option<&AaeModel<T>>,
) -> Result<MetricReport> {
    let streams = SeedStreams::new(seed);
    let augmented = match method {
        Method::None => Dataset::unlabeled(train.x.clone(), train.name.clone()),
        Method::Augment(kind) => {
            let trained;
            let model = match (kind, model) {
                (AugmenterKind::Doping, None) => {
                    trained = train_compare_model(train, cfg, seed)?;
                    Some(&trained)
                }
                (_, m) => m,
            };
            let n = cfg.n_synth.resolve(train.len());
            let mut rng = streams.synth.substream(method_tag(kind));
            augment_dataset(train, kind, n, model, &mut rng)?
        }
    };
    let detector = fit_detector(&augmented, &cfg.detector, seed)?;
    evaluate_detector(&detector, test, &cfg.grid, cfg.tpr_target)
}

fn method_tag(kind: &AugmenterKind) -> u64 {
    match kind {
        AugmenterKind::Doping => 1,
        AugmenterKind::RandomNoise { .. } => 2,
        AugmenterKind::SmoteVariant => 3,
    }
}

pub fn compare_cell<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    method: &Method,
    cfg: &CompareConfig,
    seed: u64,
    model: Option<&AaeModel<T>>,
) -> Result<CompareCell> {
    let r = compare_report(train, test, method, cfg, seed, model)?;
    Ok(CompareCell {
        method: method.name(),
        seed,
        auc: r.auc,
        best_f1: r.best_f1,
        g_measure: r.g_measure,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStats {
    pub method: String,
    pub n: usize,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub best_f1_mean: f64,
    pub best_f1_std: f64,
    pub g_measure_mean: f64,
    pub g_measure_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareTable {
    pub cells: Vec<CompareCell>,
    pub stats: Vec<MethodStats>,
}

impl CompareTable {
    /// Cells may arrive in any order; `order` fixes the method order.
    pub fn from_cells(mut cells: Vec<CompareCell>, order: &[Method]) -> Self {
        let rank: BTreeMap<String, usize> = order.iter().enumerate().map(|(i, m)| (m.name(), i)).collect();
        let pos = |c: &CompareCell| rank.get(&c.method).copied().unwrap_or(usize::MAX);
        cells.sort_by(|a, b| pos(a).cmp(&pos(b)).then(a.method.cmp(&b.method)).then(a.seed.cmp(&b.seed)));
        let stats = cells
            .chunk_by(|a, b| a.method == b.method)
            .map(|g| {
                let col = |f: fn(&CompareCell) -> f64| mean_std(&g.iter().map(f).collect::<Vec<_>>());
                let (auc_mean, auc_std) = col(|c| c.auc);
                let (best_f1_mean, best_f1_std) = col(|c| c.best_f1);
                let (g_measure_mean, g_measure_std) = col(|c| c.g_measure);
                MethodStats {
                    method: g[0].method.clone(),
                    n: g.len(),
                    auc_mean,
                    auc_std,
                    best_f1_mean,
                    best_f1_std,
                    g_measure_mean,
                    g_measure_std,
                }
            })
            .collect();
        Self { cells, stats }
    }

    pub fn stats_for(&self, method: &str) -> Option<&MethodStats> {
        self.stats.iter().find(|s| s.method == method)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "method,seed,auc,best_f1,g_measure")?;
        for c in &self.cells {
            writeln!(w, "{},{},{},{},{}", c.method, c.seed, c.auc, c.best_f1, c.g_measure)?;
        }
        Ok(())
    }
}

/// Every method for every seed, run in sequence.
pub fn compare_augmenters<T: Scalar>(train: &Dataset<T>, test: &Dataset<T>, cfg: &CompareConfig) -> Result<CompareTable> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &seed in &cfg.seeds {
        for method in &cfg.methods {
            cells.push(compare_cell(train, test, method, cfg, seed, None)?);
        }
    }
    Ok(CompareTable::from_cells(cells, &cfg.methods))
}

/// Sample mean and standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// JSON summary written next to an experiment's CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment: String,
    pub config_hash: String,
    pub stats: serde_json::Value,
}

impl ExperimentSummary {
    pub fn new<C: Serialize, S: Serialize>(experiment: &str, config: &C, stats: &S) -> Result<Self> {
        Ok(Self {
            experiment: experiment.to_string(),
            config_hash: config_hash(config)?,
            stats: serde_json::to_value(stats).map_err(|e| Error::InvalidConfig(e.to_string()))?,
        })
    }
}

/// Hex SHA-256 of the config's compact JSON form.
pub fn config_hash<C: Serialize>(config: &C) -> Result<String> {
    let json = serde_json::to_vec(config).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect())
}
