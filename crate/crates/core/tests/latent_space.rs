use std::sync::OnceLock;

use doping_core::aae::{
    default_anomaly_prior, discriminator_accuracy, from_json, load_model, save_model, to_json, train_labeled,
    train_unlabeled, AaeModel, AaeTrainConfig, Prior,
};
use doping_core::augment::{doping, doping_detailed, magnitude_sample};
use doping_core::data::{gen_synthetic, Dataset, SyntheticSpec, SyntheticVariant};
use doping_core::eval::sweep_aae;
use doping_core::rng::RngHandle;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn data(variant: SyntheticVariant) -> (Dataset<f64>, Dataset<f64>) {
    gen_synthetic(&SyntheticSpec::new(variant), 1).unwrap()
}

fn unlabeled_a() -> &'static (AaeModel<f64>, Dataset<f64>) {
    static CELL: OnceLock<(AaeModel<f64>, Dataset<f64>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let (train, _) = data(SyntheticVariant::A);
        let cfg = AaeTrainConfig::default().with_seed(7);
        let (model, _) = train_unlabeled(&train, &cfg, &Prior::gaussian(2, 10.0)).unwrap();
        (model, train)
    })
}

fn labeled(variant: SyntheticVariant) -> (AaeModel<f64>, Dataset<f64>, Dataset<f64>) {
    let (train, test) = data(variant);
    let prior = Prior::gaussian(2, 10.0);
    let cfg = sweep_aae().with_seed(11);
    let (model, _) = train_labeled(&train, train.labels().unwrap(), &cfg, &prior, &default_anomaly_prior(&prior)).unwrap();
    (model, train, test)
}

#[test]
fn unlabeled_discriminator_is_near_chance() {
    let (model, train) = unlabeled_a();
    let acc = discriminator_accuracy(model, &train.x, None, 1000, 3).unwrap();
    assert!((0.4..=0.6).contains(&acc), "discriminator accuracy {acc}");
}

#[test]
fn encode_is_deterministic_and_reconstructs() {
    let (model, train) = unlabeled_a();
    let a = model.encode(&train.x).unwrap();
    let b = model.encode(&train.x).unwrap();
    assert_eq!(a.data(), b.data());
    // raw coordinates have variance of about 100
    let mse = model.reconstruction_mse(&train.x).unwrap();
    assert!(mse < 1.0, "reconstruction mse {mse}");
}

#[test]
fn saved_model_reloads_with_same_encodings() {
    let (model, train) = unlabeled_a();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(model, &path).unwrap();
    let loaded: AaeModel<f64> = load_model(&path).unwrap();
    assert_eq!(to_json(&loaded), std::fs::read_to_string(&path).unwrap());
    assert_eq!(loaded.encode(&train.x).unwrap().data(), model.encode(&train.x).unwrap().data());
    let text = to_json(model);
    assert!(from_json::<f64>(&text[..text.len() / 2]).is_err());
}

#[test]
fn radius_twenty_decodes_near_normal_boundary() {
    let (model, _) = unlabeled_a();
    let z = magnitude_sample::<f64, _>(2, 20.0, 500, &mut RngHandle::new(5).rng()).unwrap();
    let x = model.decode(&z).unwrap();
    let norms = x.row_norms();
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    assert!((15.0..=35.0).contains(&mean), "mean decoded norm {mean}");
}

#[test]
fn doping_shapes_and_closure() {
    let (model, train) = unlabeled_a();
    let small = doping(model, &train.x, 50, &mut RngHandle::new(1).rng()).unwrap();
    assert_eq!(small.shape(), (50, 2));
    assert!(small.is_finite());
    assert_eq!(doping(model, &train.x, 0, &mut RngHandle::new(1).rng()).unwrap().rows(), 0);

    let out = doping_detailed(model, &train.x, 500, &mut RngHandle::new(2).rng()).unwrap();
    let re = median(model.encode(&out.samples).unwrap().row_norms());
    let (lo, hi) = (0.8 * out.edge.alpha, 1.2 * out.edge.beta);
    assert!(re >= lo && re <= hi, "median re-encoded norm {re} outside [{lo}, {hi}]");
}

#[test]
fn labeled_codes_separate_anomalies_on_a() {
    let (model, _, test) = labeled(SyntheticVariant::A);
    let normal = median(model.encode(&test.rows_with_label(0).unwrap()).unwrap().row_norms());
    let anomalous = median(model.encode(&test.rows_with_label(1).unwrap()).unwrap().row_norms());
    assert!(anomalous > 3.0 * normal, "anomaly median {anomalous} vs normal {normal}");
}

#[test]
fn labeled_ring_data_maps_normals_to_center() {
    let (model, train, _) = labeled(SyntheticVariant::C);
    let norms = model.encode(&train.rows_with_label(0).unwrap()).unwrap().row_norms();
    let inside = norms.iter().filter(|&&r| r < 30.0).count() as f64 / norms.len() as f64;
    assert!(inside >= 0.9, "{inside} of normal codes inside 30");
}
