use std::fs;

use ptycho::harness::{
    load_idx, run_experiment, synth_dataset, DatasetSpec, ExperimentConfig, SolverKind, SweepPoint, IDX3_MAGIC,
};
use ptycho::optics::{load_measurements, measure, save_measurements, build_camera_array, camera_masks};
use ptycho::prior::{load_generator, save_generator, Activation, GeneratorKind, GeneratorWeights, Mlp};
use ptycho::rng::SplitMix64;
use ptycho::solvers::{deep_ptych, SolverConfig};

fn random_decoder(side: usize, seed: u64) -> GeneratorWeights {
    let mut rng = SplitMix64::new(seed);
    let net = Mlp::init(&[6, 32, side * side], &[Activation::Relu, Activation::Sigmoid], &mut rng).unwrap();
    GeneratorWeights::new(GeneratorKind::Mlp, side, net).unwrap()
}

#[test]
fn in_range_full_sampling_dp_row_exceeds_40_db() {
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("g.ptyg");
    save_generator(&weights, &random_decoder(16, 4)).unwrap();
    let cfg = ExperimentConfig {
        dataset: DatasetSpec::Synthetic { count: 2, seed: 5 },
        image_size: 16,
        grid: 2,
        aperture_diameter: 9.0,
        overlap_frac: 0.65,
        sweep: vec![SweepPoint {
            subsampling_fraction: 1.0,
            noise_std: 0.0,
        }],
        solvers: vec![SolverKind::Dp],
        generator: Some(weights),
        in_range: true,
        range_fit_steps: 300,
        test_count: 2,
        ..ExperimentConfig::default()
    };
    let table = run_experiment(&cfg, Some(dir.path())).unwrap();
    assert_eq!(table.rows.len(), 2);
    for row in &table.rows {
        assert!(row.is_ok());
        assert!(row.psnr_db > 40.0, "psnr {}", row.psnr_db);
        assert!((row.subsampling_pct - 100.0).abs() < 1e-12);
    }
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.starts_with("solver,subsampling_pct,noise_pct,image_index,psnr_db,ssim,status\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["test_indices"], serde_json::json!([0, 1]));
}

#[test]
fn row_count_is_solvers_times_points_times_images() {
    let cfg = ExperimentConfig {
        dataset: DatasetSpec::Synthetic { count: 10, seed: 1 },
        image_size: 16,
        grid: 2,
        aperture_diameter: 7.0,
        overlap_frac: 0.5,
        sweep: vec![
            SweepPoint {
                subsampling_fraction: 0.1,
                noise_std: 0.0,
            },
            SweepPoint {
                subsampling_fraction: 0.5,
                noise_std: 0.05,
            },
            SweepPoint {
                subsampling_fraction: 1.0,
                noise_std: 0.0,
            },
        ],
        solvers: vec![SolverKind::Iera],
        iera_iters: 2,
        test_count: 10,
        ..ExperimentConfig::default()
    };
    let mut two = cfg.clone();
    two.solvers.push(SolverKind::Dp);
    let dir = tempfile::tempdir().unwrap();
    let weights = dir.path().join("g.ptyg");
    save_generator(&weights, &random_decoder(16, 1)).unwrap();
    two.generator = Some(weights);
    two.dp.steps = 2;
    assert_eq!(run_experiment(&cfg, None).unwrap().rows.len(), 30);
    assert_eq!(run_experiment(&two, None).unwrap().rows.len(), 60);
}

#[test]
fn idx_file_feeds_the_harness() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t10k-images.idx3-ubyte");
    let mut bytes = Vec::new();
    for w in [IDX3_MAGIC, 2, 28, 28] {
        bytes.extend_from_slice(&w.to_be_bytes());
    }
    for i in 0..2 * 28 * 28 {
        bytes.push((i % 251) as u8);
    }
    fs::write(&path, bytes).unwrap();
    assert_eq!(load_idx(&path).unwrap().len(), 2);
    let cfg = ExperimentConfig {
        dataset: DatasetSpec::Idx { path },
        sweep: vec![SweepPoint {
            subsampling_fraction: 0.2,
            noise_std: 0.0,
        }],
        iera_iters: 3,
        test_count: 2,
        ..ExperimentConfig::default()
    };
    let table = run_experiment(&cfg, None).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert!(table.rows.iter().all(|r| r.is_ok()));
}

#[test]
fn saved_artifacts_reproduce_a_solve() {
    let dir = tempfile::tempdir().unwrap();
    let g = random_decoder(16, 2);
    let x = synth_dataset(1, 16, 3).unwrap().remove(0);
    let geom = build_camera_array(16, 2, 7.0, 0.5).unwrap();
    let masks = camera_masks(16, 4, 0.4, 6).unwrap();
    let m = measure(&x, &geom, &masks, 0.01, 2).unwrap();
    save_measurements(&dir.path().join("m.ptym"), &m).unwrap();
    save_generator(&dir.path().join("g.ptyg"), &g).unwrap();
    let m2 = load_measurements(&dir.path().join("m.ptym")).unwrap();
    let g2 = load_generator(&dir.path().join("g.ptyg")).unwrap();
    let cfg = SolverConfig {
        steps: 50,
        ..SolverConfig::default()
    };
    assert_eq!(deep_ptych(&m, &g, &cfg).unwrap(), deep_ptych(&m2, &g2, &cfg).unwrap());
}
