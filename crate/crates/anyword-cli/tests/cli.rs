//! Command-level integration: bench and adapt subcommands, config loading,
//! and the backend-URI environment override.

use std::process::Command;

fn anyword() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anyword"))
}

#[test]
fn bench_synthetic_grounded_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let output = anyword()
        .args([
            "bench",
            "--dataset",
            "synthetic:6",
            "--task",
            "grounded",
            "--report",
            report.to_str().unwrap(),
            "--seed",
            "3",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("mIoU"));
    assert!(stdout.contains("AP50"));

    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(parsed["miou"].as_f64().unwrap() > 0.9);
    assert_eq!(parsed["records_failed"].as_u64(), Some(0));
}

#[test]
fn bench_stability_emits_per_image_csv() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let csv = dir.path().join("stability.csv");
    let output = anyword()
        .args([
            "bench",
            "--dataset",
            "synthetic:4",
            "--task",
            "stability",
            "--report",
            report.to_str().unwrap(),
            "--per-image",
            csv.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        csv_text.lines().count(),
        1 + 4,
        "header plus one row per image"
    );
}

#[test]
fn bench_reads_a_dataset_file() {
    let dir = tempfile::tempdir().unwrap();
    // A 2x2 gray PNG plus a one-record refs dataset pointing at it.
    let png = dir.path().join("img.png");
    image::GrayImage::from_fn(16, 16, |x, _| image::Luma([if x < 8 { 30 } else { 200 }]))
        .save(&png)
        .unwrap();
    let dataset = dir.path().join("refs.json");
    std::fs::write(
        &dataset,
        r#"{"refs": [{"image": "img.png", "width": 16, "height": 16,
            "sentences": ["the white box"],
            "segmentation": {"counts": [128, 128], "size": [16, 16]}}]}"#,
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let output = anyword()
        .args([
            "bench",
            "--dataset",
            dataset.to_str().unwrap(),
            "--task",
            "reference",
            "--report",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(parsed["ciou"].is_number());
    assert!(parsed["giou"].is_number());
}

#[test]
fn adapt_fits_and_saves_an_adapter() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.json");
    std::fs::write(
        &samples,
        r#"[["a.png", "a red cat"], ["b.png", "a blue dog"], ["c.png", "a green ball"]]"#,
    )
    .unwrap();
    let out = dir.path().join("encoder.adapter");
    let output = anyword()
        .args([
            "adapt",
            "--samples",
            samples.to_str().unwrap(),
            "--rank",
            "16",
            "--steps",
            "100",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let adapter = anyword::embedopt::TextAdapter::load(&out).unwrap();
    assert_eq!(adapter.rank(), 16);
}

#[test]
fn adapt_rejects_empty_sample_sets() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.json");
    std::fs::write(&samples, "[]").unwrap();
    let out = dir.path().join("a.adapter");
    let output = anyword()
        .args([
            "adapt",
            "--samples",
            samples.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(!out.exists());
}

#[test]
fn config_file_drives_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("anyword.toml");
    std::fs::write(
        &config,
        "seed = 11\nthreshold = 0.6\n\n[optimizer]\nsteps = 20\n",
    )
    .unwrap();
    let report = dir.path().join("report.json");
    let output = anyword()
        .args([
            "bench",
            "--dataset",
            "synthetic:2",
            "--task",
            "grounded",
            "--report",
            report.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
}

#[test]
fn backend_uri_env_override_redirects_and_fails_fast() {
    // Pointing both backends at an unreachable endpoint must fail the run
    // (proving the override is honored) rather than silently using toys.
    let dir = tempfile::tempdir().unwrap();
    let png = dir.path().join("img.png");
    image::GrayImage::from_fn(8, 8, |_, _| image::Luma([128]))
        .save(&png)
        .unwrap();
    let output = anyword()
        .env("ANYWORD_BACKEND_URI", "127.0.0.1:1")
        .args([
            "segment",
            "--image",
            png.to_str().unwrap(),
            "--text",
            "a cat",
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("127.0.0.1:1"), "{stderr}");
}
