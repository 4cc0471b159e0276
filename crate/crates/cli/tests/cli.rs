use std::path::Path;
use std::process::{Command, Output};

use vqc_transfer::train::CircuitSpec;
use vqc_transfer::{load_checkpoint, FrozenExtractor};

fn vqct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vqct"))
        .args(args)
        .output()
        .expect("spawn vqct")
}

fn ok(args: &[&str]) -> Output {
    let out = vqct(args);
    assert!(
        out.status.success(),
        "vqct {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn ckpt_extractor(path: &Path) -> FrozenExtractor {
    load_checkpoint(std::fs::File::open(path).unwrap()).unwrap().extractor
}

fn tfbs(dir: &Path, n: &str) {
    ok(&["datagen", "--task", "tfbs", "--n", n, "--seed", "3", "--out", p(dir)]);
}

#[test]
fn datagen_writes_four_files_and_reruns_identically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        ok(&[
            "datagen",
            "--task",
            "dots",
            "--n",
            "20",
            "--seed",
            "7",
            "--out",
            p(d.path()),
        ]);
    }
    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "dots_clean.json",
            "dots_clean.vqcd",
            "dots_noisy.json",
            "dots_noisy.vqcd"
        ]
    );
    for n in &names {
        assert_eq!(
            std::fs::read(a.path().join(n)).unwrap(),
            std::fs::read(b.path().join(n)).unwrap(),
            "{n}"
        );
    }
}

#[test]
fn odd_sample_count_is_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let out = vqct(&["datagen", "--task", "dots", "--n", "3", "--out", p(d.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("even"));
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(vqct(&["datagen", "--bogus"]).status.code(), Some(2));
}

#[test]
fn corrupt_container_is_format_error() {
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.vqcd");
    std::fs::write(&bad, b"NOPE-not-a-container").unwrap();
    let out = vqct(&[
        "pretrain",
        "--data",
        p(&bad),
        "--kind",
        "pca",
        "--out",
        p(&d.path().join("x.vqcm")),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn newer_checkpoint_version_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    tfbs(d.path(), "20");
    let data = d.path().join("tfbs.vqcd");
    let ck = d.path().join("pca.vqcm");
    ok(&[
        "pretrain",
        "--data",
        p(&data),
        "--kind",
        "pca",
        "--qubits",
        "2",
        "--out",
        p(&ck),
    ]);
    let mut bytes = std::fs::read(&ck).unwrap();
    let v = u16::from_le_bytes([bytes[4], bytes[5]]) + 1;
    bytes[4..6].copy_from_slice(&v.to_le_bytes());
    std::fs::write(&ck, &bytes).unwrap();
    let out = vqct(&[
        "train",
        "--extractor",
        p(&ck),
        "--data",
        p(&data),
        "--qubits",
        "2",
        "--out",
        p(&d.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));
}

#[test]
fn pretrain_records_extractor_shape_and_provenance() {
    let d = tempfile::tempdir().unwrap();
    ok(&[
        "datagen",
        "--task",
        "dots",
        "--n",
        "20",
        "--seed",
        "1",
        "--out",
        p(d.path()),
    ]);
    let data = d.path().join("dots_clean.vqcd");
    let pca = d.path().join("pca.vqcm");
    ok(&[
        "pretrain",
        "--data",
        p(&data),
        "--kind",
        "pca",
        "--qubits",
        "8",
        "--out",
        p(&pca),
    ]);
    assert_eq!(ckpt_extractor(&pca).output_dim(), 8);
    assert!(d.path().join("pca.manifest.json").exists());

    let mlp = d.path().join("mlp.vqcm");
    ok(&[
        "pretrain",
        "--data",
        p(&data),
        "--kind",
        "mlp",
        "--hidden",
        "4",
        "--epochs",
        "0",
        "--out",
        p(&mlp),
    ]);
    assert_eq!(ckpt_extractor(&mlp).provenance().epochs, 0);

    // A run asking for 12 qubits cannot use the 8-output extractor.
    let out = vqct(&[
        "train",
        "--extractor",
        p(&pca),
        "--data",
        p(&data),
        "--qubits",
        "12",
        "--out",
        p(&d.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("12") && err.contains('8'), "{err}");
}

#[test]
fn train_writes_trace_and_is_reproducible() {
    let d = tempfile::tempdir().unwrap();
    tfbs(d.path(), "20");
    let data = d.path().join("tfbs.vqcd");
    let ck = d.path().join("pca.vqcm");
    ok(&[
        "pretrain",
        "--data",
        p(&data),
        "--kind",
        "pca",
        "--qubits",
        "3",
        "--out",
        p(&ck),
    ]);
    let run = |out: &Path| {
        ok(&[
            "train",
            "--extractor",
            p(&ck),
            "--data",
            p(&data),
            "--qubits",
            "3",
            "--epochs",
            "3",
            "--seed",
            "2",
            "--out",
            p(out),
        ]);
    };
    let (r1, r2) = (d.path().join("r1"), d.path().join("r2"));
    run(&r1);
    run(&r2);
    let trace = std::fs::read_to_string(r1.join("trace.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "epoch,train_loss,train_acc,test_loss,test_acc,grad_norm_mean,grad_norm_max"
    );
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
    for f in ["trace.csv", "model.vqcm", "decomposition.json"] {
        assert_eq!(
            std::fs::read(r1.join(f)).unwrap(),
            std::fs::read(r2.join(f)).unwrap(),
            "{f}"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(r1.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["results"]["extractor_frozen"], true);
}

#[test]
fn zero_learning_rate_keeps_initial_angles() {
    let d = tempfile::tempdir().unwrap();
    tfbs(d.path(), "20");
    let data = d.path().join("tfbs.vqcd");
    let ck = d.path().join("pca.vqcm");
    ok(&[
        "pretrain",
        "--data",
        p(&data),
        "--kind",
        "pca",
        "--qubits",
        "2",
        "--out",
        p(&ck),
    ]);
    let out = d.path().join("r");
    ok(&[
        "train",
        "--extractor",
        p(&ck),
        "--data",
        p(&data),
        "--qubits",
        "2",
        "--lr",
        "0",
        "--epochs",
        "2",
        "--seed",
        "5",
        "--out",
        p(&out),
    ]);
    let model = load_checkpoint(std::fs::File::open(out.join("model.vqcm")).unwrap())
        .unwrap()
        .model()
        .unwrap();
    let init = CircuitSpec {
        init_seed: 5,
        ..CircuitSpec::default()
    }
    .build(ckpt_extractor(&ck))
    .unwrap();
    assert_eq!(model.params(), init.params());
}

#[test]
fn theorem3_rate_recorded_in_manifest() {
    let d = tempfile::tempdir().unwrap();
    tfbs(d.path(), "10");
    let data = d.path().join("tfbs.vqcd");
    let ck = d.path().join("pca.vqcm");
    ok(&[
        "pretrain",
        "--data",
        p(&data),
        "--kind",
        "pca",
        "--qubits",
        "2",
        "--out",
        p(&ck),
    ]);
    let out = d.path().join("r");
    let base = [
        "train",
        "--extractor",
        p(&ck),
        "--data",
        p(&data),
        "--qubits",
        "2",
        "--depth",
        "1",
    ];
    let mut args = base.to_vec();
    args.extend([
        "--epochs",
        "100",
        "--oracle-epochs",
        "1",
        "--lr-mode",
        "theorem3",
        "--R",
        "1",
        "--L",
        "1",
        "--beta",
        "0",
        "--out",
        p(&out),
    ]);
    ok(&args);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["results"]["learning_rate"].as_f64(), Some(0.1));

    let mut missing = base.to_vec();
    missing.extend(["--lr-mode", "theorem3", "--R", "1", "--L", "1", "--out", p(&out)]);
    let res = vqct(&missing);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("--beta"));
}

#[test]
fn bounds_report_and_missing_flag() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("b.json");
    let full = [
        "bounds", "--beta", "0", "--L", "1", "--R", "1", "--T", "100", "--M", "100", "--U", "8", "--C-fx", "100",
        "--DA", "10000", "--DB", "6400", "--D", "6400", "--C-fv", "64",
    ];
    let mut args = full.to_vec();
    args.extend(["--out", p(&out)]);
    ok(&args);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let col = &report["pretrained_vqc"];
    for (term, want) in [("approximation", 0.2), ("estimation", 0.1), ("optimization", 0.1)] {
        assert!((col[term]["value"].as_f64().unwrap() - want).abs() < 1e-12, "{term}");
    }
    let res = vqct(&full[..full.len() - 2]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("--C-fv"));
}

#[test]
fn sweeps_write_expected_rows() {
    let d = tempfile::tempdir().unwrap();
    tfbs(d.path(), "20");
    ok(&[
        "datagen",
        "--task",
        "tfbs",
        "--n",
        "20",
        "--seed",
        "4",
        "--source",
        "--out",
        p(d.path()),
    ]);
    let data = d.path().join("tfbs.vqcd");
    let source = d.path().join("tfbs_source.vqcd");
    let ck = d.path().join("pca.vqcm");
    ok(&[
        "pretrain",
        "--data",
        p(&source),
        "--kind",
        "pca",
        "--qubits",
        "2",
        "--out",
        p(&ck),
    ]);

    let csv = d.path().join("size.csv");
    let out = ok(&[
        "sweep",
        "--axis",
        "target-size",
        "--values",
        "4,8,8,18",
        "--extractor",
        p(&ck),
        "--data",
        p(&data),
        "--qubits",
        "2",
        "--epochs",
        "1",
        "--out",
        p(&csv),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("value,train_loss,train_acc,test_loss,test_acc,est_proxy,exact_test_loss"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));

    let fig = d.path().join("fig6.csv");
    ok(&[
        "sweep",
        "--preset",
        "figure6",
        "--source",
        p(&source),
        "--kind",
        "pca",
        "--data",
        p(&data),
        "--epochs",
        "1",
        "--depth",
        "1",
        "--out",
        p(&fig),
    ]);
    let rows: Vec<String> = std::fs::read_to_string(&fig)
        .unwrap()
        .lines()
        .skip(1)
        .map(String::from)
        .collect();
    let values: Vec<&str> = rows.iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(values, ["8", "12", "16"]);
}

#[test]
fn config_file_supplies_flags_and_cli_wins() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# datagen defaults\ntask = tfbs\nn = 12\nseed = 1\nout = {}\n",
            p(d.path())
        ),
    )
    .unwrap();
    ok(&["datagen", "--config", p(&cfg), "--n", "10"]);
    let ds = vqc_transfer::datagen::read_container(std::fs::File::open(d.path().join("tfbs.vqcd")).unwrap()).unwrap();
    assert_eq!(ds.0.count, 10);
}
