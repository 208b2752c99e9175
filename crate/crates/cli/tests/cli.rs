use std::path::Path;
use std::process::{Command, Output};

use imicnn_core::dsp::{make_samples, write_dataset, PipelineConfig};
use imicnn_core::ingest::synth_record;
use imicnn_core::nn::load_checkpoint;
use imicnn_core::Label;

fn imicnn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imicnn"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synth_tree(dir: &Path) {
    let o = imicnn(
        &[
            "--data-dir",
            "data",
            "synth",
            "--hc",
            "2",
            "--imi",
            "2",
            "--duration",
            "8",
        ],
        dir,
    );
    assert!(o.status.success(), "{o:?}");
}

#[test]
fn preprocess_counts_and_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    synth_tree(dir.path());
    let o = imicnn(&["--data-dir", "data", "--out-dir", "a", "preprocess"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o).lines().next(), Some("IMI: 4, HC: 4"));
    let o = imicnn(&["--data-dir", "data", "--out-dir", "b", "preprocess"], dir.path());
    assert!(o.status.success());
    for f in ["dataset.json", "dataset.bin"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn synthetic_spec_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("data")).unwrap();
    std::fs::write(
        dir.path().join("data/synth.toml"),
        "hc_patients = 1\nimi_patients = 2\nduration_s = 4.0\n",
    )
    .unwrap();
    let o = imicnn(&["--data-dir", "data", "preprocess"], dir.path());
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).starts_with("IMI: 2, HC: 1"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::create_dir(p.join("empty")).unwrap();
    assert_eq!(imicnn(&["--data-dir", "empty", "preprocess"], p).status.code(), Some(3));
    assert_eq!(
        imicnn(&["--data-dir", "absent", "preprocess"], p).status.code(),
        Some(5)
    );
    assert_eq!(imicnn(&["train"], p).status.code(), Some(5));
    assert_eq!(imicnn(&["eval"], p).status.code(), Some(5));
    assert_eq!(imicnn(&["--batch-size", "0", "train"], p).status.code(), Some(2));
    assert_eq!(imicnn(&["--batch-size", "x", "train"], p).status.code(), Some(2));

    std::fs::create_dir(p.join("bad")).unwrap();
    std::fs::write(p.join("bad/r.hea"), "r 3 1000\n").unwrap();
    assert_eq!(imicnn(&["--data-dir", "bad", "preprocess"], p).status.code(), Some(2));

    std::fs::create_dir(p.join("out")).unwrap();
    std::fs::write(p.join("out/dataset.json"), "{\"format\": 1}").unwrap();
    assert_eq!(imicnn(&["train"], p).status.code(), Some(4));
}

#[test]
fn train_eval_features_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    synth_tree(p);
    assert!(imicnn(&["--data-dir", "data", "preprocess"], p).status.success());
    let o = imicnn(&["--seed", "1", "--max-epochs", "1", "train"], p);
    assert!(o.status.success(), "{o:?}");
    let log = std::fs::read_to_string(p.join("out/train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 1);
    let (header, _) = load_checkpoint(&p.join("out/model.json")).unwrap();
    assert_eq!(header.trainable_count, 2054);
    assert_eq!(header.seed, 1);

    let o = imicnn(&["eval"], p);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("Predicted") && text.contains("Ac: "), "{text}");

    let o = imicnn(&["features"], p);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("GSI"));
    assert!(p.join("out/features.bin").is_file());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("out/feature_quality.json")).unwrap()).unwrap();
    assert_eq!(report["dim"], 84);
}

#[test]
fn eval_single_sample() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    synth_tree(p);
    assert!(imicnn(&["--data-dir", "data", "preprocess"], p).status.success());
    assert!(imicnn(&["--max-epochs", "1", "train"], p).status.success());

    let cfg = PipelineConfig::default();
    let one = make_samples(&synth_record(Label::Imi, 4.0, 1000.0, 77), &cfg).unwrap();
    assert_eq!(one.len(), 1);
    write_dataset(&p.join("one.json"), &one, &cfg, None).unwrap();
    let o = imicnn(&["eval", "--dataset", "one.json"], p);
    assert!(o.status.success(), "{o:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("out/eval_report.json")).unwrap()).unwrap();
    let c = &report["confusion"];
    let total: u64 = ["tp", "tn", "fp", "fn"].iter().map(|k| c[k].as_u64().unwrap()).sum();
    assert_eq!(total, 1);
    assert_eq!(c["tn"], 0);
    assert_eq!(c["fp"], 0);
}

#[test]
fn loso_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    synth_tree(p);
    assert!(imicnn(&["--data-dir", "data", "preprocess"], p).status.success());
    let o = imicnn(&["--max-epochs", "2", "loso"], p);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("Avg. Ac%"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("out/cv_report.json")).unwrap()).unwrap();
    assert_eq!(report["patient_count"], 4);
    assert_eq!(report["folds"].as_array().unwrap().len(), 4);
    assert!(p.join("out/cv_table.txt").is_file());
}
