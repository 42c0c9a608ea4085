use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL_CONFIG: &str = r#"{
  "aae": {"steps": 60, "hidden": 16},
  "detector": {"n_trees": 25, "psi": 64},
  "sweep": {"steps": 60, "lr": 0.001},
  "seeds": [1, 2]
}"#;

fn doping(dir: &Path, args: &[&str]) -> Output {
    let config = dir.join("small.json");
    if !config.exists() {
        fs::write(&config, SMALL_CONFIG).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_doping"))
        .current_dir(dir)
        .env("DOPING_CONFIG", &config)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn lines(path: impl AsRef<Path>) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

fn gen_a(dir: &TempDir) -> PathBuf {
    ok(doping(dir.path(), &["gen", "--dataset", "a", "--seed", "7", "--out", "a"]));
    dir.path().join("a")
}

#[test]
fn gen_writes_thousand_rows_reproducibly() {
    let dir = TempDir::new().unwrap();
    let a = gen_a(&dir);
    assert_eq!(lines(a.join("train.csv")), 1001);
    assert_eq!(lines(a.join("test.csv")), 1001);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);

    ok(doping(dir.path(), &["gen", "--dataset", "a", "--seed", "7", "--out", "again"]));
    for f in ["train.csv", "test.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(dir.path().join("again").join(f)).unwrap());
    }
}

#[test]
fn unknown_dataset_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = doping(dir.path(), &["gen", "--dataset", "z", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_then_dope() {
    let dir = TempDir::new().unwrap();
    gen_a(&dir);
    ok(doping(dir.path(), &["train-aae", "--train", "a/train.csv", "--out", "m.json"]));
    let model: doping_core::AaeModel<f64> = doping_core::aae::load_model(dir.path().join("m.json")).unwrap();
    assert_eq!(model.latent_dim(), 2);

    ok(doping(dir.path(), &["doping", "--model", "m.json", "--train", "a/train.csv", "--k", "500", "--out", "s.csv"]));
    assert_eq!(lines(dir.path().join("s.csv")), 501);
    ok(doping(dir.path(), &["doping", "--model", "m.json", "--train", "a/train.csv", "--k", "0", "--out", "e.csv"]));
    assert_eq!(fs::read_to_string(dir.path().join("e.csv")).unwrap().trim(), "f0,f1");

    fs::write(dir.path().join("flat.csv"), "f0,f1\n1,1\n1,1\n1,1\n").unwrap();
    let out = doping(dir.path(), &["doping", "--model", "m.json", "--train", "flat.csv", "--k", "5", "--out", "f.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("edge band"));
}

#[test]
fn labeled_training_needs_label_column() {
    let dir = TempDir::new().unwrap();
    gen_a(&dir);
    ok(doping(dir.path(), &["train-aae", "--labeled", "--train", "a/train.csv", "--out", "l.json"]));
    let model: doping_core::AaeModel<f64> = doping_core::aae::load_model(dir.path().join("l.json")).unwrap();
    assert!(model.is_labeled());

    fs::write(dir.path().join("nolabel.csv"), "f0,f1\n0,1\n2,3\n4,5\n").unwrap();
    let out = doping(dir.path(), &["train-aae", "--labeled", "--train", "nolabel.csv", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_rows_and_byte_reproducibility() {
    let dir = TempDir::new().unwrap();
    gen_a(&dir);
    let base = ["sweep", "--train", "a/train.csv", "--test", "a/test.csv", "--radii", "10:30:10"];
    let run = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        ok(doping(dir.path(), &args));
    };
    run(&["--seeds", "1,2,3", "--out", "s1.csv", "--jobs", "1"]);
    // header + (baseline + 3 radii) x 3 seeds
    assert_eq!(lines(dir.path().join("s1.csv")), 13);
    assert!(dir.path().join("s1.json").exists());
    run(&["--seeds", "1,2,3", "--out", "s2.csv", "--jobs", "2"]);
    assert_eq!(fs::read(dir.path().join("s1.csv")).unwrap(), fs::read(dir.path().join("s2.csv")).unwrap());
    assert_eq!(fs::read(dir.path().join("s1.json")).unwrap(), fs::read(dir.path().join("s2.json")).unwrap());

    let out = doping(dir.path(), &["sweep", "--train", "a/train.csv", "--test", "a/test.csv", "--radii", "5:x", "--out", "b.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_methods_and_percent_count() {
    let dir = TempDir::new().unwrap();
    gen_a(&dir);
    let base = ["eval", "--train", "a/train.csv", "--test", "a/test.csv"];
    let run = |extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        ok(doping(dir.path(), &args));
    };
    run(&["--augment", "none", "--out", "none.json"]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("none.json")).unwrap()).unwrap();
    assert_eq!(report["methods"][0]["method"], "none");
    assert_eq!(report["methods"][0]["runs"].as_array().unwrap().len(), 2);
    let auc = report["methods"][0]["runs"][0]["report"]["auc"].as_f64().unwrap();
    assert!(auc > 0.5 && auc <= 1.0);

    run(&["--augment", "doping,smote", "--n-synth", "10%", "--out", "r1.json", "--csv", "r1.csv"]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r1.json")).unwrap()).unwrap();
    assert_eq!(report["methods"][0]["n_synth"], 100);
    assert_eq!(lines(dir.path().join("r1.csv")), 5);
    run(&["--augment", "doping,smote", "--n-synth", "10%", "--out", "r2.json", "--jobs", "1"]);
    assert_eq!(fs::read(dir.path().join("r1.json")).unwrap(), fs::read(dir.path().join("r2.json")).unwrap());
}

/// Maps every feature of a generated CSV into [0, 1].
fn rescale(src: &Path, dst: &Path) {
    let text = fs::read_to_string(src).unwrap();
    let mut rows = text.lines();
    let mut out = format!("{}\n", rows.next().unwrap());
    for row in rows {
        let cells: Vec<&str> = row.split(',').collect();
        let (label, feats) = cells.split_last().unwrap();
        for f in feats {
            let v: f64 = f.parse().unwrap();
            out += &format!("{},", ((v + 80.0) / 160.0).clamp(0.0, 1.0));
        }
        out += &format!("{label}\n");
    }
    fs::write(dst, out).unwrap();
}

#[test]
fn noise_needs_unit_scaled_features() {
    let dir = TempDir::new().unwrap();
    let a = gen_a(&dir);
    let raw = doping(dir.path(), &["eval", "--train", "a/train.csv", "--test", "a/test.csv", "--augment", "noise", "--out", "n.json"]);
    assert_eq!(raw.status.code(), Some(1));

    rescale(&a.join("train.csv"), &dir.path().join("train01.csv"));
    rescale(&a.join("test.csv"), &dir.path().join("test01.csv"));
    ok(doping(
        dir.path(),
        &["eval", "--train", "train01.csv", "--test", "test01.csv", "--augment", "none,noise:0.5", "--out", "n.json"],
    ));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("n.json")).unwrap()).unwrap();
    assert_eq!(report["methods"][1]["method"], "noise:0.5");
}
