use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Iera,
    Dp,
    DpPlus,
    DpPlusTv,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Iera => "iera",
            SolverKind::Dp => "dp",
            SolverKind::DpPlus => "dp_plus",
            SolverKind::DpPlusTv => "dp_plus_tv",
        }
    }

    pub fn needs_generator(self) -> bool {
        self != SolverKind::Iera
    }

    pub const ALL: [SolverKind; 4] = [SolverKind::Iera, SolverKind::Dp, SolverKind::DpPlus, SolverKind::DpPlusTv];
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown solver {s:?}; expected iera, dp, dp_plus or dp_plus_tv"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Shape images from `synth_dataset(count, image_size, seed)`.
    Synthetic { count: usize, seed: u64 },
    /// IDX3 file; images come out 32x32.
    Idx { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPoint {
    pub subsampling_fraction: f64,
    /// Absolute standard deviation of the additive measurement noise.
    pub noise_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub image_size: usize,
    pub grid: usize,
    pub aperture_diameter: f64,
    pub overlap_frac: f64,
    pub sweep: Vec<SweepPoint>,
    pub solvers: Vec<SolverKind>,
    pub iera_iters: usize,
    pub dp: SolverConfig,
    pub dp_plus: SolverConfig,
    /// TV weight used by `dp_plus_tv`; otherwise it shares `dp_plus`.
    pub tv_weight: f64,
    pub generator: Option<PathBuf>,
    /// Replace each target by its approximate projection onto the
    /// generator range before simulating measurements.
    pub in_range: bool,
    pub range_fit_steps: usize,
    pub range_fit_learning_rate: f64,
    /// Index of the first test image in the dataset.
    pub first_test_index: usize,
    pub test_count: usize,
    pub master_seed: u64,
    pub save_images: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::Synthetic { count: 10, seed: 1 },
            image_size: 32,
            grid: 3,
            aperture_diameter: 9.0,
            overlap_frac: 0.65,
            sweep: vec![SweepPoint {
                subsampling_fraction: 0.1,
                noise_std: 0.0,
            }],
            solvers: vec![SolverKind::Iera],
            iera_iters: 100,
            dp: SolverConfig::default(),
            dp_plus: SolverConfig::default(),
            tv_weight: 1e-4,
            generator: None,
            in_range: false,
            range_fit_steps: 500,
            range_fit_learning_rate: 0.05,
            first_test_index: 0,
            test_count: 10,
            master_seed: 0,
            save_images: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks everything that can be checked without running a solver.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.sweep.is_empty() {
            return bad("sweep must contain at least one point".into());
        }
        if self.test_count == 0 {
            return bad("test_count must be at least 1".into());
        }
        if self.solvers.is_empty() {
            return bad("at least one solver must be enabled".into());
        }
        let mut seen = self.solvers.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.solvers.len() {
            return bad("solvers list contains duplicates".into());
        }
        for (i, p) in self.sweep.iter().enumerate() {
            if !(p.subsampling_fraction > 0.0 && p.subsampling_fraction <= 1.0) {
                return bad(format!("sweep[{i}].subsampling_fraction must lie in (0, 1]"));
            }
            if !(p.noise_std >= 0.0 && p.noise_std.is_finite()) {
                return bad(format!("sweep[{i}].noise_std must be finite and non-negative"));
            }
        }
        if self.iera_iters == 0 && self.solvers.contains(&SolverKind::Iera) {
            return bad("iera_iters must be at least 1".into());
        }
        if !(self.tv_weight >= 0.0) {
            return bad("tv_weight must be non-negative".into());
        }
        self.dp.validate().map_err(|e| Error::Config(format!("dp: {e}")))?;
        self.dp_plus
            .validate()
            .map_err(|e| Error::Config(format!("dp_plus: {e}")))?;
        let needs_generator = self.in_range || self.solvers.iter().any(|s| s.needs_generator());
        if needs_generator {
            match &self.generator {
                None => return bad("a generator weight file is required for dp/dp_plus or in_range".into()),
                Some(p) if !p.is_file() => {
                    return bad(format!("generator weight file {} does not exist", p.display()))
                }
                Some(_) => {}
            }
        }
        if let DatasetSpec::Synthetic { count, .. } = self.dataset {
            if count < self.first_test_index + self.test_count {
                return bad(format!(
                    "synthetic dataset has {count} images, need {}",
                    self.first_test_index + self.test_count
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"grid": 3, "gird": 4}"#),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::from_json(r#"{"dp": {"step": 3}}"#).is_err());
    }

    #[test]
    fn solver_names_parse() {
        for k in SolverKind::ALL {
            assert_eq!(k.name().parse::<SolverKind>().unwrap(), k);
        }
        assert!("dpp".parse::<SolverKind>().is_err());
    }

    #[test]
    fn json_roundtrip() {
        let mut cfg = ExperimentConfig::default();
        cfg.solvers = vec![SolverKind::Iera, SolverKind::DpPlusTv];
        cfg.dataset = DatasetSpec::Idx { path: "t10k.idx".into() };
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_document_uses_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"sweep": [{"subsampling_fraction": 0.05, "noise_std": 0.01}], "test_count": 2}"#,
        )
        .unwrap();
        assert_eq!(cfg.grid, 3);
        assert_eq!(cfg.test_count, 2);
        cfg.validate().unwrap();
    }

    #[test]
    fn validation_failures() {
        let base = ExperimentConfig::default();
        let mut c = base.clone();
        c.sweep.clear();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.test_count = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.solvers = vec![SolverKind::Dp];
        assert!(c.validate().is_err());
        c.generator = Some("/nonexistent/weights.ptyg".into());
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.sweep[0].subsampling_fraction = 0.0;
        assert!(c.validate().is_err());
        let mut c = base;
        c.test_count = 11;
        assert!(c.validate().is_err());
    }
}
