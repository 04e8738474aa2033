//! JSON wire-format checks for the serializable artifacts.

use ndarray::Array2;
use rff_core::erm::{train_rff, Loss, TrainOptions};
use rff_core::features::RandomFeatureMap;
use rff_core::kernel::KernelSpec;
use rff_core::leverage::LeverageProfile;

fn inputs(n: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5)
}

#[test]
fn feature_map_roundtrip_and_schema() {
    let spec = KernelSpec::gaussian(1.3, 2).unwrap();
    let map = RandomFeatureMap::plain(&spec, 5, 99).unwrap();
    let json = serde_json::to_value(&map).unwrap();
    // Documented field names.
    for key in ["kernel", "s", "scheme", "frequencies", "phases", "weights", "seed"] {
        assert!(json.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(json["s"], 5);
    assert_eq!(json["scheme"], "plain");
    let back: RandomFeatureMap = serde_json::from_value(json).unwrap();
    assert_eq!(back, map);
}

#[test]
fn feature_map_rejects_corrupt_documents() {
    let spec = KernelSpec::gaussian(1.0, 2).unwrap();
    let map = RandomFeatureMap::plain(&spec, 3, 1).unwrap();
    let mut json = serde_json::to_value(&map).unwrap();
    json["weights"] = serde_json::json!([1.0, -2.0, 1.0]);
    assert!(serde_json::from_value::<RandomFeatureMap>(json.clone()).is_err());
    json["weights"] = serde_json::json!([1.0, 1.0]);
    assert!(serde_json::from_value::<RandomFeatureMap>(json).is_err());
}

#[test]
fn profile_roundtrip() {
    let spec = KernelSpec::laplacian(0.8, 2).unwrap();
    let x = inputs(12, 2);
    let profile = LeverageProfile::build(&spec, x.view(), 0.25, 40, 3).unwrap();
    let json = serde_json::to_string(&profile).unwrap();
    let back: LeverageProfile = serde_json::from_str(&json).unwrap();
    assert_eq!(back, profile);
}

#[test]
fn model_roundtrip() {
    let phi = inputs(8, 3);
    let y: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let model = train_rff(
        phi.view(),
        &y,
        Loss::logistic(),
        0.5,
        &TrainOptions::default(),
    )
    .unwrap();
    let json = serde_json::to_string(&model).unwrap();
    let back: rff_core::erm::TrainedModel = serde_json::from_str(&json).unwrap();
    assert_eq!(back, model);
}

#[test]
fn spectrum_report_serializes() {
    let k = Array2::<f64>::eye(4) * 4.0;
    let report = rff_core::diagnostics::gram_spectrum(k.view()).unwrap();
    let json = serde_json::to_value(&report).unwrap();
    assert_eq!(json["decay_class"], "finite_rank");
    let back: rff_core::diagnostics::SpectrumReport = serde_json::from_value(json).unwrap();
    assert_eq!(back, report);
}
