use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ptycho(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptycho"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn end_to_end_single_solve() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("images");
    let out = ptycho(&["synth", "--count", "2", "--size", "16", "--seed", "3", "--out", path(&images)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let image = images.join("img_00000.ptyt");
    assert!(image.is_file() && images.join("img_00001.pgm").is_file());

    let bundle = dir.path().join("m.ptym");
    let out = ptycho(&[
        "simulate",
        "--image",
        path(&image),
        "--grid",
        "2",
        "--aperture-diameter",
        "7",
        "--overlap-frac",
        "0.5",
        "--subsampling-fraction",
        "0.5",
        "--out",
        path(&bundle),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let recon = dir.path().join("recon");
    let out = ptycho(&[
        "recon",
        "--measurements",
        path(&bundle),
        "--solver",
        "iera",
        "--iters",
        "5",
        "--reference",
        path(&image),
        "--out",
        path(&recon),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("psnr_db"), "{stdout}");
    assert!(recon.join("recon.ptyt").is_file() && recon.join("recon.txt").is_file());

    let out = ptycho(&["metrics", "--image", path(&image), "--reference", path(&image)]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ssim"], 1.0);
}

#[test]
fn train_then_sweep_with_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("g.ptyg");
    let out = ptycho(&[
        "train",
        "--count",
        "20",
        "--size",
        "16",
        "--latent",
        "4",
        "--hidden",
        "16",
        "--epochs",
        "2",
        "--out",
        path(&weights),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let config = dir.path().join("sweep.json");
    fs::write(
        &config,
        r#"{
            "dataset": {"kind": "synthetic", "count": 2, "seed": 4},
            "image_size": 16, "grid": 2, "aperture_diameter": 7.0, "overlap_frac": 0.5,
            "sweep": [{"subsampling_fraction": 0.5, "noise_std": 0.0}],
            "solvers": ["iera", "dp"],
            "iera_iters": 3,
            "dp": {"steps": 5},
            "test_count": 2
        }"#,
    )
    .unwrap();
    let run = |name: &str, seed: &str| {
        let out_dir = dir.path().join(name);
        let out = ptycho(&[
            "sweep",
            "--config",
            path(&config),
            "--generator",
            path(&weights),
            "--seed",
            seed,
            "--out",
            path(&out_dir),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read_to_string(out_dir.join("results.csv")).unwrap()
    };
    let a = run("a", "1");
    assert_eq!(a.lines().count(), 5);
    assert_eq!(a, run("b", "1"));
    let manifest = fs::read_to_string(dir.path().join("a/manifest.json")).unwrap();
    assert!(manifest.contains("\"master_seed\": 1"));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"grid": 3, "typo_key": 1}"#).unwrap();
    let out = ptycho(&["sweep", "--config", path(&config), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo_key"));

    let out = ptycho(&["metrics", "--image", "/nonexistent.ptyt", "--reference", "/nonexistent.ptyt"]);
    assert_eq!(out.status.code(), Some(2));

    let out = ptycho(&["recon", "--measurements", "x", "--solver", "nope", "--out", "y"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("images");
    assert!(ptycho(&["synth", "--count", "1", "--size", "16", "--out", path(&images)]).status.success());
    let bundle = dir.path().join("m.ptym");
    let out = ptycho(&[
        "simulate",
        "--image",
        path(&images.join("img_00000.ptyt")),
        "--grid",
        "1",
        "--aperture-diameter",
        "9",
        "--out",
        path(&bundle),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let weights = dir.path().join("g.ptyg");
    assert!(ptycho(&[
        "train", "--count", "4", "--size", "16", "--latent", "2", "--hidden", "4", "--epochs", "1", "--out",
        path(&weights)
    ])
    .status
    .success());
    let out = ptycho(&[
        "recon",
        "--measurements",
        path(&bundle),
        "--solver",
        "dp",
        "--generator",
        path(&weights),
        "--learning-rate",
        "1e308",
        "--steps",
        "50",
        "--out",
        path(&dir.path().join("r")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
