use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{DatasetSpec, ExperimentConfig, SolverKind};
use super::idx::load_idx;
use super::pgm::write_pgm;
use super::synth::synth_dataset;
use crate::error::{Error, Result};
use crate::metrics;
use crate::optics::{build_camera_array, camera_masks, measure, CameraArrayGeometry, Measurements};
use crate::prior::{fit_latent, load_generator, GeneratorWeights};
use crate::rng::derive_seed;
use crate::solvers::{deep_ptych, deep_ptych_plus, iera, ReconResult, SolverConfig};
use crate::tensor::RealImage;

/// Purposes mixed into per-(point, image) seeds.
const SEED_MASKS: u64 = 0;
const SEED_NOISE: u64 = 1;
const SEED_SOLVER: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub solver: SolverKind,
    pub point_index: usize,
    pub subsampling_pct: f64,
    pub noise_pct: f64,
    pub image_index: usize,
    pub psnr_db: f64,
    pub ssim: f64,
    /// `None` on success, otherwise the error message.
    pub error: Option<String>,
    pub wall_seconds: f64,
}

impl ResultRow {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    /// Mean PSNR of the successful rows of one solver at one sweep point.
    pub fn mean_psnr(&self, solver: SolverKind, point: usize) -> Option<f64> {
        self.mean_of(solver, point, |r| r.psnr_db)
    }

    pub fn mean_ssim(&self, solver: SolverKind, point: usize) -> Option<f64> {
        self.mean_of(solver, point, |r| r.ssim)
    }

    fn mean_of(&self, solver: SolverKind, point: usize, f: impl Fn(&ResultRow) -> f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.solver == solver && r.point_index == point && r.is_ok())
            .map(f)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// `results.csv` contents. Timings are kept out so that repeated runs
    /// produce identical bytes.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("solver,subsampling_pct,noise_pct,image_index,psnr_db,ssim,status\n");
        for r in &self.rows {
            let status = match &r.error {
                None => "ok".to_string(),
                Some(msg) => format!("failed: {}", sanitize(msg)),
            };
            writeln!(
                s,
                "{},{:.4},{:.4},{},{},{},{}",
                r.solver.name(),
                r.subsampling_pct,
                r.noise_pct,
                r.image_index,
                fmt_metric(r.psnr_db),
                fmt_metric(r.ssim),
                status
            )
            .unwrap();
        }
        s
    }

    pub fn timings_csv(&self) -> String {
        let mut s = String::from("solver,point_index,image_index,wall_seconds\n");
        for r in &self.rows {
            writeln!(s, "{},{},{},{:.6}", r.solver.name(), r.point_index, r.image_index, r.wall_seconds).unwrap();
        }
        s
    }
}

fn fmt_metric(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.6}")
    }
}

fn sanitize(msg: &str) -> String {
    msg.replace([',', '\n', '\r'], ";")
}

#[derive(Debug, Clone, Serialize)]
struct JobRecord {
    point_index: usize,
    image_index: usize,
    mask_seed: u64,
    noise_seed: u64,
    solver_seed: u64,
    subsampling_pct: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    geometry: &'a CameraArrayGeometry,
    test_indices: Vec<usize>,
    metric_convention: &'static str,
    jobs: Vec<JobRecord>,
}

/// Loads the configured dataset in full.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Vec<RealImage>> {
    match &cfg.dataset {
        DatasetSpec::Synthetic { count, seed } => synth_dataset(*count, cfg.image_size, *seed),
        DatasetSpec::Idx { path } => load_idx(path),
    }
}

/// Selects the test images and, when requested, replaces each by its
/// approximate projection onto the generator range.
pub fn prepare_targets(
    cfg: &ExperimentConfig,
    dataset: &[RealImage],
    generator: Option<&GeneratorWeights>,
) -> Result<Vec<(usize, RealImage)>> {
    let end = cfg.first_test_index + cfg.test_count;
    if dataset.len() < end {
        return Err(Error::Config(format!(
            "dataset has {} images, test range needs {end}",
            dataset.len()
        )));
    }
    (cfg.first_test_index..end)
        .into_par_iter()
        .map(|i| {
            let img = &dataset[i];
            if img.shape() != (cfg.image_size, cfg.image_size) {
                return Err(Error::Config(format!(
                    "dataset image {i} is {:?}, image_size is {}",
                    img.shape(),
                    cfg.image_size
                )));
            }
            let target = match (cfg.in_range, generator) {
                (true, Some(g)) => {
                    let z = fit_latent(g, img, cfg.range_fit_steps, cfg.range_fit_learning_rate)?;
                    g.generate(&z)?
                }
                (true, None) => return Err(Error::Config("in_range requires a generator".into())),
                (false, _) => img.clone(),
            };
            Ok((i, target))
        })
        .collect()
}

/// Runs every enabled solver on every (sweep point, test image) pair,
/// writing artifacts to `out_dir` when given.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ResultsTable> {
    cfg.validate()?;
    let generator = match &cfg.generator {
        Some(p) if cfg.in_range || cfg.solvers.iter().any(|s| s.needs_generator()) => Some(load_generator(p)?),
        _ => None,
    };
    let dataset = load_dataset(cfg)?;
    let targets = prepare_targets(cfg, &dataset, generator.as_ref())?;
    run_on_targets(cfg, &targets, generator.as_ref(), out_dir)
}

/// Core of [`run_experiment`] for callers that already hold the targets and
/// generator in memory. `targets` pairs a dataset index with its image.
pub fn run_on_targets(
    cfg: &ExperimentConfig,
    targets: &[(usize, RealImage)],
    generator: Option<&GeneratorWeights>,
    out_dir: Option<&Path>,
) -> Result<ResultsTable> {
    if cfg.solvers.iter().any(|s| s.needs_generator()) && generator.is_none() {
        return Err(Error::Config("dp solvers need a generator".into()));
    }
    let geometry = build_camera_array(cfg.image_size, cfg.grid, cfg.aperture_diameter, cfg.overlap_frac)?;
    let recon_dir = out_dir.map(|d| d.join("recon"));
    if let Some(d) = &recon_dir {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }

    let jobs: Vec<(usize, usize)> = (0..cfg.sweep.len())
        .flat_map(|p| (0..targets.len()).map(move |t| (p, t)))
        .collect();

    let outcomes: Vec<(JobRecord, Vec<ResultRow>)> = jobs
        .par_iter()
        .map(|&(p, t)| run_job(cfg, &geometry, p, &targets[t], generator, recon_dir.as_deref()))
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(outcomes.len());
    let mut rows = Vec::new();
    for (rec, r) in outcomes {
        records.push(rec);
        rows.extend(r);
    }
    let order = |s: SolverKind| cfg.solvers.iter().position(|&k| k == s).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (order(r.solver), r.point_index, r.image_index));
    records.sort_by_key(|r| (r.point_index, r.image_index));
    let table = ResultsTable { rows };

    if let Some(dir) = out_dir {
        let manifest = Manifest {
            config: cfg,
            geometry: &geometry,
            test_indices: targets.iter().map(|(i, _)| *i).collect(),
            metric_convention: "images compared in [0, 1]; psnr peak 1.0; ssim 11x11 gaussian sigma 1.5",
            jobs: records,
        };
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        write("results.csv", table.to_csv())?;
        write("timings.csv", table.timings_csv())?;
        write(
            "manifest.json",
            serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        )?;
    }
    Ok(table)
}

fn run_job(
    cfg: &ExperimentConfig,
    geometry: &CameraArrayGeometry,
    point_index: usize,
    target: &(usize, RealImage),
    generator: Option<&GeneratorWeights>,
    recon_dir: Option<&Path>,
) -> Result<(JobRecord, Vec<ResultRow>)> {
    let (image_index, truth) = target;
    let point = cfg.sweep[point_index];
    let seed = |purpose: u64| derive_seed(cfg.master_seed, &[point_index as u64, *image_index as u64, purpose]);
    let (mask_seed, noise_seed, solver_seed) = (seed(SEED_MASKS), seed(SEED_NOISE), seed(SEED_SOLVER));

    let masks = camera_masks(cfg.image_size, geometry.num_cameras(), point.subsampling_fraction, mask_seed)?;
    let m = measure(truth, geometry, &masks, point.noise_std, noise_seed)?;
    let subsampling_pct = m.subsampling_pct();
    let record = JobRecord {
        point_index,
        image_index: *image_index,
        mask_seed,
        noise_seed,
        solver_seed,
        subsampling_pct,
    };

    if let Some(dir) = recon_dir {
        write_pgm(&dir.join(format!("target_p{point_index}_img{image_index}.pgm")), truth)?;
    }

    let mut rows = Vec::with_capacity(cfg.solvers.len());
    for &solver in &cfg.solvers {
        let start = Instant::now();
        let outcome = solve(cfg, solver, &m, generator, solver_seed);
        let wall_seconds = start.elapsed().as_secs_f64();
        let row = match outcome.and_then(|r| metrics::evaluate(&r.x_hat, truth).map(|q| (r, q))) {
            Ok((recon, quality)) => {
                if let Some(dir) = recon_dir {
                    let stem = format!("{}_p{point_index}_img{image_index}", solver.name());
                    recon.save(dir, &stem)?;
                    write_pgm(&dir.join(format!("{stem}.pgm")), &recon.x_hat)?;
                }
                ResultRow {
                    solver,
                    point_index,
                    subsampling_pct,
                    noise_pct: 100.0 * point.noise_std,
                    image_index: *image_index,
                    psnr_db: quality.psnr_db,
                    ssim: quality.ssim,
                    error: None,
                    wall_seconds,
                }
            }
            Err(e) => ResultRow {
                solver,
                point_index,
                subsampling_pct,
                noise_pct: 100.0 * point.noise_std,
                image_index: *image_index,
                psnr_db: f64::NAN,
                ssim: f64::NAN,
                error: Some(e.to_string()),
                wall_seconds,
            },
        };
        rows.push(row);
    }
    Ok((record, rows))
}

fn solve(
    cfg: &ExperimentConfig,
    solver: SolverKind,
    m: &Measurements,
    generator: Option<&GeneratorWeights>,
    seed: u64,
) -> Result<ReconResult> {
    let with_seed = |c: &SolverConfig| SolverConfig { seed, ..c.clone() };
    let g = || generator.ok_or_else(|| Error::Config("generator missing".into()));
    match solver {
        SolverKind::Iera => iera(m, cfg.iera_iters),
        SolverKind::Dp => deep_ptych(m, g()?, &with_seed(&cfg.dp)),
        SolverKind::DpPlus => deep_ptych_plus(m, g()?, &with_seed(&cfg.dp_plus)),
        SolverKind::DpPlusTv => {
            let c = SolverConfig {
                tv_weight: cfg.tv_weight,
                ..with_seed(&cfg.dp_plus)
            };
            deep_ptych_plus(m, g()?, &c)
        }
    }
}
