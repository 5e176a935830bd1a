use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ptycho::harness::{run_experiment, synth_dataset, write_pgm, DatasetSpec, ExperimentConfig, SolverKind, SweepPoint};
use ptycho::metrics::evaluate;
use ptycho::optics::{build_camera_array, camera_masks, load_measurements, measure, save_measurements};
use ptycho::prior::{load_generator, save_generator, train_decoder, TrainConfig};
use ptycho::solvers::{deep_ptych, deep_ptych_plus, iera, SolverConfig};
use ptycho::tensor::{load_image, save_image};
use ptycho::{Error, Result};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "ptycho", version, about = "Fourier ptychography simulation and reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic shape images as PTYT and PGM files.
    Synth(SynthArgs),
    /// Train an autoencoder and save its decoder as a PTYG weight file.
    Train(TrainArgs),
    /// Simulate camera-array measurements of an image.
    Simulate(SimulateArgs),
    /// Reconstruct an image from a measurement bundle.
    Recon(ReconArgs),
    /// Run a full experiment sweep.
    Sweep(SweepArgs),
    /// Compare two images with PSNR and SSIM.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON training config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// IDX3 image file; synthetic shapes are used when absent.
    #[arg(long)]
    idx: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    /// Hidden widths between latent and image, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [128])]
    hidden: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    latent: usize,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long, default_value_t = 3)]
    grid: usize,
    #[arg(long, default_value_t = 9.0)]
    aperture_diameter: f64,
    #[arg(long, default_value_t = 0.65)]
    overlap_frac: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Real PTYT image with values in [0, 1].
    #[arg(long)]
    image: PathBuf,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long, default_value_t = 1.0)]
    subsampling_fraction: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_std: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Iera,
    Dp,
    DpPlus,
    DpPlusTv,
}

#[derive(Args)]
struct ReconArgs {
    #[arg(long)]
    measurements: PathBuf,
    #[arg(long, value_enum)]
    solver: SolverArg,
    #[arg(long)]
    generator: Option<PathBuf>,
    /// JSON solver config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    lambda_range: Option<f64>,
    #[arg(long)]
    tv_weight: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Ground truth PTYT image; when given, metrics are printed.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "recon")]
    stem: String,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    generator: Option<PathBuf>,
    #[arg(long)]
    idx: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<SolverKind>>,
    #[arg(long)]
    test_count: Option<usize>,
    /// Sweep points as `fraction:noise_std`, comma separated.
    #[arg(long, value_delimiter = ',')]
    points: Option<Vec<String>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    reference: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { EXIT_NUMERIC } else { EXIT_CONFIG })
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Simulate(a) => simulate(a),
        Command::Recon(a) => recon(a),
        Command::Sweep(a) => sweep(a),
        Command::Metrics(a) => metrics(a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn synth(a: SynthArgs) -> Result<()> {
    let images = synth_dataset(a.count, a.size, a.seed)?;
    create_dir(&a.out)?;
    for (i, img) in images.iter().enumerate() {
        save_image(&a.out.join(format!("img_{i:05}.ptyt")), img)?;
        write_pgm(&a.out.join(format!("img_{i:05}.pgm")), img)?;
    }
    println!("wrote {} images to {}", images.len(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg: TrainConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => TrainConfig::default(),
    };
    if let Some(v) = a.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    let data = match &a.idx {
        Some(path) => ptycho::harness::load_idx(path)?,
        None => synth_dataset(a.count, a.size, a.data_seed)?,
    };
    let side = data
        .first()
        .ok_or_else(|| Error::Config("training dataset is empty".into()))?
        .rows();
    let mut arch = vec![a.latent];
    arch.extend(&a.hidden);
    arch.push(side * side);
    let report = train_decoder(&data, &arch, &cfg)?;
    save_generator(&a.out, &report.decoder)?;
    println!(
        "trained {arch:?} on {} images: loss {:.6} -> {:.6}",
        data.len(),
        report.initial_loss,
        report.final_loss
    );
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let img = load_image(&a.image)?;
    let g = &a.geometry;
    let geometry = build_camera_array(img.rows(), g.grid, g.aperture_diameter, g.overlap_frac)?;
    let masks = camera_masks(img.rows(), geometry.num_cameras(), a.subsampling_fraction, a.seed)?;
    let m = measure(&img, &geometry, &masks, a.noise_std, a.seed)?;
    save_measurements(&a.out, &m)?;
    println!(
        "{} cameras, subsampling {:.4}%, written to {}",
        geometry.num_cameras(),
        m.subsampling_pct(),
        a.out.display()
    );
    Ok(())
}

fn recon(a: ReconArgs) -> Result<()> {
    let m = load_measurements(&a.measurements)?;
    let mut cfg: SolverConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SolverConfig::default(),
    };
    if let Some(v) = a.steps {
        cfg.steps = v;
    }
    if let Some(v) = a.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.lambda_range {
        cfg.lambda_range = v;
    }
    if let Some(v) = a.tv_weight {
        cfg.tv_weight = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    let generator = || -> Result<_> {
        let path = a
            .generator
            .as_ref()
            .ok_or_else(|| Error::Config("--generator is required for this solver".into()))?;
        load_generator(path)
    };
    let result = match a.solver {
        SolverArg::Iera => iera(&m, a.iters)?,
        SolverArg::Dp => deep_ptych(&m, &generator()?, &cfg)?,
        SolverArg::DpPlus => deep_ptych_plus(&m, &generator()?, &cfg)?,
        SolverArg::DpPlusTv => {
            if cfg.tv_weight == 0.0 {
                cfg.tv_weight = 1e-4;
            }
            deep_ptych_plus(&m, &generator()?, &cfg)?
        }
    };
    create_dir(&a.out)?;
    result.save(&a.out, &a.stem)?;
    write_pgm(&a.out.join(format!("{}.pgm", a.stem)), &result.x_hat)?;
    println!("steps {}, final loss {:.6e}", result.steps_run, result.final_loss());
    if let Some(reference) = &a.reference {
        let q = evaluate(&result.x_hat, &load_image(reference)?)?;
        println!("{}", serde_json::to_string(&q).expect("metrics serialize"));
    }
    Ok(())
}

fn parse_point(text: &str) -> Result<SweepPoint> {
    let bad = || Error::Config(format!("sweep point {text:?} is not fraction:noise_std"));
    let (f, n) = text.split_once(':').ok_or_else(bad)?;
    Ok(SweepPoint {
        subsampling_fraction: f.trim().parse().map_err(|_| bad())?,
        noise_std: n.trim().parse().map_err(|_| bad())?,
    })
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = a.generator {
        cfg.generator = Some(v);
    }
    if let Some(path) = a.idx {
        cfg.dataset = DatasetSpec::Idx { path };
    }
    if let Some(v) = a.solvers {
        cfg.solvers = v;
    }
    if let Some(v) = a.test_count {
        cfg.test_count = v;
    }
    if let Some(points) = a.points {
        cfg.sweep = points.iter().map(|p| parse_point(p)).collect::<Result<_>>()?;
    }
    create_dir(&a.out)?;
    let table = run_experiment(&cfg, Some(&a.out))?;
    for (p, point) in cfg.sweep.iter().enumerate() {
        for &s in &cfg.solvers {
            let psnr = table.mean_psnr(s, p).map_or("n/a".into(), |v| format!("{v:.2}"));
            let ssim = table.mean_ssim(s, p).map_or("n/a".into(), |v| format!("{v:.4}"));
            println!(
                "fraction {:.4} noise {:.4} {:<11} psnr {psnr} ssim {ssim}",
                point.subsampling_fraction,
                point.noise_std,
                s.name()
            );
        }
    }
    let failed = table.rows.iter().filter(|r| !r.is_ok()).count();
    println!("{} rows ({failed} failed) written to {}", table.rows.len(), a.out.display());
    Ok(())
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let q = evaluate(&load_image(&a.image)?, &load_image(&a.reference)?)?;
    println!("{}", serde_json::to_string(&q).expect("metrics serialize"));
    Ok(())
}
