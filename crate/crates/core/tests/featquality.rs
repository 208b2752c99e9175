mod support;

use imicnn_core::dsp::{make_samples, PipelineConfig};
use imicnn_core::featquality::{extract_features, gsi, read_features, write_features, FeatureQuality};
use imicnn_core::ingest::synth_record;
use imicnn_core::nn::{Architecture, ModelParams};
use imicnn_core::Label;
use support::oracles::featquality_checks;

#[test]
fn gsi_and_intra_distance_match_brute_force() {
    let r = featquality_checks(0..20, 100, 84);
    assert!(r.gsi_max_diff <= 1e-12, "{r:?}");
    assert!(r.intra_max_diff <= 1e-12, "{r:?}");
    assert_eq!(r.gsi_isometry_max_diff, 0.0, "{r:?}");
    assert_eq!(r.gsi_scale_max_diff, 0.0, "{r:?}");
    assert!(r.intra_scale_max_rel_diff <= 1e-12, "{r:?}");
}

#[test]
fn features_from_model_and_dump_round_trip() {
    let cfg = PipelineConfig::default();
    let mut samples = Vec::new();
    for (i, label) in [Label::Hc, Label::Imi, Label::Hc, Label::Imi].into_iter().enumerate() {
        samples.extend(make_samples(&synth_record(label, 8.0, 1000.0, i as u64), &cfg).unwrap());
    }
    let params = ModelParams::init(&Architecture::default(), 1);
    let fs = extract_features(&samples, &params).unwrap();
    assert_eq!(fs.len(), samples.len());
    assert_eq!(fs.dim(), 84);
    let g = gsi(&fs).unwrap();
    assert!((0.0..=1.0).contains(&g));
    FeatureQuality::compute(&fs).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("features.json");
    write_features(&path, &fs, &samples).unwrap();
    let (manifest, back) = read_features(&path).unwrap();
    assert_eq!(manifest.n, samples.len());
    assert_eq!(back.labels(), fs.labels());
    for (a, b) in back.vectors().iter().flatten().zip(fs.vectors().iter().flatten()) {
        assert_eq!(*a, *b as f32 as f64);
    }
}
