mod config;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use doping_core::aae::{self, AaeModel};
use doping_core::augment::doping;
use doping_core::data::{gen_synthetic, load_csv, write_csv_to, Dataset, SyntheticSpec, SyntheticVariant};
use doping_core::eval::{
    compare_report, magnitude_cell, train_compare_model, train_sweep_model, CompareCell, CompareConfig, CompareTable,
    ExperimentSummary, MagnitudeSweepConfig, MagnitudeSweepTable, Method, MetricReport, NSynth,
};
use doping_core::rng::RngHandle;
use doping_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use config::{RunConfig, CONFIG_ENV};

#[derive(Parser)]
#[command(name = "doping", version, about = "Latent-space augmentation for unsupervised anomaly detection")]
struct Cli {
    /// JSON run config; defaults to $DOPING_CONFIG, then built-in defaults.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic train/test pair.
    Gen(GenArgs),
    /// Train an adversarial autoencoder on a CSV.
    TrainAae(TrainArgs),
    /// Synthesize edge-of-latent samples with a trained model.
    Doping(DopingArgs),
    /// AUC against latent magnitude of the decoded samples.
    Sweep(SweepArgs),
    /// Contamination-sweep metrics with and without augmentation.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetName {
    A,
    B,
    C,
}

impl From<DatasetName> for SyntheticVariant {
    fn from(d: DatasetName) -> Self {
        match d {
            DatasetName::A => SyntheticVariant::A,
            DatasetName::B => SyntheticVariant::B,
            DatasetName::C => SyntheticVariant::C,
        }
    }
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    dataset: DatasetName,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for train.csv, test.csv and manifest.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n_train: usize,
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    #[arg(long, default_value_t = 0.05)]
    contamination: f64,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Use the label column: anomalies are matched to a ring prior.
    #[arg(long)]
    labeled: bool,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct DopingArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    train: PathBuf,
    /// Number of samples to synthesize.
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "label")]
    label_column: String,
}

#[derive(clap::Args)]
struct SweepArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// `start:stop:step`, inclusive, or a comma list.
    #[arg(long, value_parser = parse_radii)]
    radii: Option<Radii>,
    /// Comma-separated seeds.
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    #[arg(long)]
    n_synth: Option<usize>,
    /// Train the sweep AAE without labels.
    #[arg(long)]
    unlabeled: bool,
    /// CSV with columns radius,seed,auc.
    #[arg(long)]
    out: PathBuf,
    /// JSON summary; defaults to the CSV path with a .json extension.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// none, doping, smote, noise or noise:<fraction>; comma-separated for several.
    #[arg(long, value_parser = parse_methods)]
    augment: Option<Methods>,
    /// Percent of the training rows (`10%`) or an absolute count.
    #[arg(long, value_parser = parse_n_synth)]
    n_synth: Option<NSynth>,
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    /// Report JSON.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV with columns method,seed,auc,best_f1,g_measure.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Debug)]
struct Radii(Vec<f64>);

#[derive(Clone, Debug)]
struct Seeds(Vec<u64>);

#[derive(Clone, Debug)]
struct Methods(Vec<Method>);

fn parse_radii(s: &str) -> std::result::Result<Radii, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number {t:?} in radii"));
    let radii = match s.split(':').collect::<Vec<_>>().as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0 && start > 0.0 && stop >= start) {
                return Err("radii need 0 < start <= stop and step > 0".into());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..n).map(|i| start + i as f64 * step).collect()
        }
        [single] => single.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>()?,
        _ => return Err(format!("radii must be start:stop:step or a comma list, got {s:?}")),
    };
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err("radii must be positive".into());
    }
    Ok(Radii(radii))
}

fn parse_seeds(s: &str) -> std::result::Result<Seeds, String> {
    let seeds = s
        .split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| format!("bad seed {t:?}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Seeds(seeds))
}

fn parse_methods(s: &str) -> std::result::Result<Methods, String> {
    s.split(',')
        .map(|t| t.parse::<Method>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(Methods)
}

fn parse_n_synth(s: &str) -> std::result::Result<NSynth, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::TrainAae(a) => cmd_train_aae(a, &cfg),
        Command::Doping(a) => cmd_doping(a),
        Command::Sweep(a) => cmd_sweep(a, &cfg),
        Command::Eval(a) => cmd_eval(a, &cfg),
    }
}

/// Writes through a temp file in the destination directory, then renames.
fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        write(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_atomic(path, |w| writeln!(w, "{text}"))
}

fn write_dataset(path: &Path, ds: &Dataset<f64>) -> Result<()> {
    write_atomic(path, |w| write_csv_to(ds, w))
}

/// Loads `path`, splitting out `label_column` if the file has it.
fn load_optional_labels(path: &Path, label_column: &str) -> Result<Dataset<f64>> {
    match load_csv(path, Some(label_column)) {
        Err(Error::MissingLabelColumn(_)) => Ok(load_csv(path, None)?),
        other => Ok(other.with_context(|| format!("loading {}", path.display()))?),
    }
}

fn load_labeled(path: &Path, label_column: &str) -> Result<Dataset<f64>> {
    load_csv(path, Some(label_column)).with_context(|| format!("loading {}", path.display()))
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            bail!("--jobs must be >= 1");
        }
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

#[derive(Serialize)]
struct Manifest<'a> {
    dataset: String,
    seed: u64,
    n_train: usize,
    n_test: usize,
    contamination: f64,
    files: [&'a str; 2],
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let spec = SyntheticSpec {
        variant: a.dataset.into(),
        n_train: a.n_train,
        n_test: a.n_test,
        contamination: a.contamination,
    };
    let (train, test) = gen_synthetic::<f64>(&spec, a.seed)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_dataset(&a.out.join("train.csv"), &train)?;
    write_dataset(&a.out.join("test.csv"), &test)?;
    write_json(
        &a.out.join("manifest.json"),
        &Manifest {
            dataset: spec.variant.to_string(),
            seed: a.seed,
            n_train: spec.n_train,
            n_test: spec.n_test,
            contamination: spec.contamination,
            files: ["train.csv", "test.csv"],
        },
    )
}

fn cmd_train_aae(a: TrainArgs, cfg: &RunConfig) -> Result<()> {
    let mut section = cfg.aae.clone();
    if let Some(v) = a.steps {
        section.steps = v;
    }
    if let Some(v) = a.lr {
        section.lr = v;
    }
    if let Some(v) = a.hidden {
        section.hidden = v;
    }
    if let Some(v) = a.batch {
        section.batch = v;
    }
    if let Some(v) = a.seed {
        section.seed = v;
    }
    let prior = section.prior();
    let train_cfg = section.train_config(a.labeled);
    let (model, history) = if a.labeled {
        let train = load_labeled(&a.train, &a.label_column)?;
        let anomaly = aae::default_anomaly_prior(&prior);
        aae::train_labeled(&train, train.labels()?, &train_cfg, &prior, &anomaly)?
    } else {
        let train = load_optional_labels(&a.train, &a.label_column)?;
        aae::train_unlabeled(&train, &train_cfg, &prior)?
    };
    if let (Some(first), Some(last)) = (history.reconstruction.first(), history.reconstruction.last()) {
        log::info!("reconstruction loss {first:.6} -> {last:.6}");
    }
    let text = aae::to_json(&model);
    write_atomic(&a.out, |w| w.write_all(text.as_bytes()))
}

fn cmd_doping(a: DopingArgs) -> Result<()> {
    let model: AaeModel<f64> = aae::load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let train = load_optional_labels(&a.train, &a.label_column)?;
    let synth = doping(&model, &train.x, a.k, &mut RngHandle::new(a.seed).rng())?;
    write_dataset(&a.out, &Dataset::unlabeled(synth, "synthetic"))
}

fn cmd_sweep(a: SweepArgs, cfg: &RunConfig) -> Result<()> {
    let labeled = cfg.sweep.labeled && !a.unlabeled;
    let train = if labeled {
        load_labeled(&a.train, &a.label_column)?
    } else {
        load_optional_labels(&a.train, &a.label_column)?
    };
    let test = load_labeled(&a.test, &a.label_column)?;
    let mut aae_cfg = cfg.aae.train_config(labeled);
    if let Some(steps) = cfg.sweep.steps {
        aae_cfg.steps = steps;
    }
    if let Some(lr) = cfg.sweep.lr {
        aae_cfg.lr = lr;
    }
    let sweep = MagnitudeSweepConfig {
        aae: aae_cfg,
        prior: cfg.aae.prior(),
        detector: cfg.detector,
        grid: cfg.sweep.grid,
        radii: a.radii.map(|r| r.0).unwrap_or_else(|| cfg.sweep.radii.clone()),
        n_synth: a.n_synth.unwrap_or(cfg.sweep.n_synth),
        seeds: a.seeds.map(|s| s.0).unwrap_or_else(|| cfg.seeds.clone()),
    };
    sweep.validate()?;

    let pool = thread_pool(a.jobs)?;
    let table = pool.install(|| -> Result<MagnitudeSweepTable> {
        let models: Vec<(u64, AaeModel<f64>)> = sweep
            .seeds
            .par_iter()
            .map(|&s| Ok((s, train_sweep_model(&train, &sweep, s)?)))
            .collect::<Result<_>>()?;
        let radii: Vec<Option<f64>> = std::iter::once(None).chain(sweep.radii.iter().map(|&r| Some(r))).collect();
        let jobs: Vec<(&u64, &AaeModel<f64>, Option<f64>)> = models
            .iter()
            .flat_map(|(s, m)| radii.iter().map(move |&r| (s, m, r)))
            .collect();
        let cells = jobs
            .into_par_iter()
            .map(|(&s, m, r)| Ok(magnitude_cell(&train, &test, m, r, &sweep, s)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(MagnitudeSweepTable::from_cells(cells))
    })?;

    write_atomic(&a.out, |w| table.write_csv(w))?;
    let summary = ExperimentSummary::new("magnitude_sweep", &sweep, &table.rows)?;
    write_json(&a.summary.unwrap_or_else(|| a.out.with_extension("json")), &summary)
}

#[derive(Serialize)]
struct SeedReport {
    seed: u64,
    report: MetricReport,
}

#[derive(Serialize)]
struct MethodReport {
    method: String,
    n_synth: usize,
    runs: Vec<SeedReport>,
}

#[derive(Serialize)]
struct EvalReport {
    experiment: &'static str,
    config_hash: String,
    methods: Vec<MethodReport>,
    stats: Vec<doping_core::eval::MethodStats>,
}

fn cmd_eval(a: EvalArgs, cfg: &RunConfig) -> Result<()> {
    let train = load_optional_labels(&a.train, &a.label_column)?;
    let test = load_labeled(&a.test, &a.label_column)?;
    let methods = match a.augment {
        Some(m) => m.0,
        None => parse_methods(&cfg.augment.method).map_err(anyhow::Error::msg)?.0,
    };
    let compare = CompareConfig {
        aae: cfg.aae.train_config(false),
        prior: cfg.aae.prior(),
        detector: cfg.detector,
        grid: cfg.augment.grid,
        methods: methods.clone(),
        n_synth: match a.n_synth {
            Some(n) => n,
            None => cfg.augment.n_synth()?,
        },
        seeds: a.seeds.map(|s| s.0).unwrap_or_else(|| cfg.seeds.clone()),
        tpr_target: cfg.augment.tpr_target,
    };
    compare.validate()?;
    let n_synth = compare.n_synth.resolve(train.len());

    let pool = thread_pool(a.jobs)?;
    let jobs: Vec<(Method, u64)> = methods
        .iter()
        .flat_map(|m| compare.seeds.iter().map(move |&s| (*m, s)))
        .collect();
    let reports = pool.install(|| {
        jobs.par_iter()
            .map(|(m, s)| {
                let model = match m {
                    Method::Augment(doping_core::AugmenterKind::Doping) => Some(train_compare_model(&train, &compare, *s)?),
                    _ => None,
                };
                Ok(compare_report(&train, &test, m, &compare, *s, model.as_ref())?)
            })
            .collect::<Result<Vec<MetricReport>>>()
    })?;

    let cells: Vec<CompareCell> = jobs
        .iter()
        .zip(&reports)
        .map(|((m, s), r)| CompareCell {
            method: m.name(),
            seed: *s,
            auc: r.auc,
            best_f1: r.best_f1,
            g_measure: r.g_measure,
        })
        .collect();
    let table = CompareTable::from_cells(cells, &methods);
    let mut per_method: Vec<MethodReport> = methods
        .iter()
        .map(|m| MethodReport {
            method: m.name(),
            n_synth: if *m == Method::None { 0 } else { n_synth },
            runs: Vec::new(),
        })
        .collect();
    for ((m, s), r) in jobs.iter().zip(reports) {
        let slot = per_method.iter_mut().find(|p| p.method == m.name()).expect("method listed");
        slot.runs.push(SeedReport { seed: *s, report: r });
    }

    if let Some(csv) = &a.csv {
        write_atomic(csv, |w| table.write_csv(w))?;
    }
    let summary = ExperimentSummary::new("compare_augmenters", &compare, &table.stats)?;
    write_json(
        &a.out,
        &EvalReport {
            experiment: "compare_augmenters",
            config_hash: summary.config_hash,
            methods: per_method,
            stats: table.stats,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_specs() {
        let r = parse_radii("5:100:5").unwrap().0;
        assert_eq!(r.len(), 20);
        assert_eq!(r[19], 100.0);
        assert_eq!(parse_radii("15,20").unwrap().0, vec![15.0, 20.0]);
        assert!(parse_radii("5:100").is_err());
        assert!(parse_radii("5:1:1").is_err());
        assert!(parse_radii("a:b:c").is_err());
        assert!(parse_radii("0:10:5").is_err());
    }

    #[test]
    fn seed_and_method_lists() {
        assert_eq!(parse_seeds("1,2,3").unwrap().0, vec![1, 2, 3]);
        assert!(parse_seeds("1,x").is_err());
        assert_eq!(parse_methods("none,doping").unwrap().0.len(), 2);
        assert!(parse_methods("gan").is_err());
        assert_eq!(parse_n_synth("10%").unwrap().resolve(1000), 100);
    }
}
