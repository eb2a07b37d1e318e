use std::path::Path;
use std::process::{Command, Output};

fn einkrylov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_einkrylov"))
        .args(args)
        .env("EINKRYLOV_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = einkrylov(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn psf_prints_kernel_rows() {
    let text = ok(&["psf", "--size", "3", "--sigma", "2"]);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][1], 1.0);
    assert!((rows[0][1] - (-0.125f64).exp()).abs() < 1e-15);
    let norm = ok(&["psf", "--size", "5", "--normalize"]);
    let sum: f64 = norm.split_whitespace().map(|v| v.parse::<f64>().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-12);
}

#[test]
fn synth_deblur_and_metrics_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let sharp = dir.path().join("sharp.png");
    let restored = dir.path().join("restored.ppm");
    let metrics = dir.path().join("m.json");
    let residuals = dir.path().join("r.csv");
    ok(&["synth", "--size", "32", "-o", p(&sharp)]);
    let stdout = ok(&[
        "deblur",
        "-i",
        p(&sharp),
        "-o",
        p(&restored),
        "--method",
        "ggkb",
        "--psf-size",
        "5",
        "--sigma",
        "1.5",
        "--noise-level",
        "1e-2",
        "--seed",
        "3",
        "--metrics",
        p(&metrics),
        "--residuals",
        p(&residuals),
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    for key in ["method", "mu", "re", "snr", "psnr", "seconds", "iterations"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["method"], "ggkb");
    assert_eq!(json["psf_size"], 5);
    assert!(json["re"].as_f64().unwrap() < 0.2);
    assert!(restored.exists() && metrics.exists());
    let csv = std::fs::read_to_string(&residuals).unwrap();
    assert!(csv.starts_with("iteration,residual\n1,"));

    let m = ok(&["metrics", "--reference", p(&sharp), "--restored", p(&restored)]);
    let mv: serde_json::Value = serde_json::from_str(&m).unwrap();
    assert!(mv["re"].as_f64().unwrap() < 0.2);
    let same = ok(&["metrics", "--reference", p(&sharp), "--restored", p(&sharp)]);
    assert_eq!(serde_json::from_str::<serde_json::Value>(&same).unwrap()["re"], 0.0);
}

#[test]
fn gmres_on_video_directory() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    let out = dir.path().join("out");
    ok(&["synth", "--size", "16", "--frames", "3", "-o", p(&frames)]);
    assert!(frames.join("frame_0003.png").exists());
    let stdout = ok(&[
        "deblur", "-i", p(&frames), "-o", p(&out), "--method", "gmres", "--psf-size", "3", "--m", "4", "--maxit", "2",
        "--gcv-variant", "standard",
    ]);
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(json["method"], "gmres");
    assert_eq!(json["iterations"], 2);
    assert!(out.join("frame_0001.png").exists() && out.join("frame_0003.png").exists());
}

#[test]
fn blur_reports_eps_and_writes_observation() {
    let dir = tempfile::tempdir().unwrap();
    let sharp = dir.path().join("s.png");
    let blurred = dir.path().join("b.png");
    ok(&["synth", "--size", "16", "-o", p(&sharp)]);
    let stdout = ok(&["blur", "-i", p(&sharp), "-o", p(&blurred), "--noise-level", "0"]);
    let json: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(json["eps"], 0.0);
    assert!(blurred.exists());
}

#[test]
fn bad_inputs_fail_cleanly() {
    let out = einkrylov(&["deblur", "-i", "/nonexistent.png", "-o", "/tmp/x.png"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = einkrylov(&["psf", "--size", "4"]);
    assert!(!out.status.success());
    let out = einkrylov(&["deblur", "-i", "a.png", "-o", "b.png", "--method", "cg"]);
    assert!(!out.status.success());
}
