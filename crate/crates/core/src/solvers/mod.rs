//! Reconstruction algorithms: alternating projections (IERA), latent
//! gradient descent through a generator (Deep Ptych) and the range-relaxed
//! split objective (Deep Ptych+), optionally with total variation.

mod iera;
mod latent;
mod plus;
mod tv;

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use iera::iera;
pub use latent::{deep_ptych, latent_loss_and_gradient, loss};
pub use plus::{deep_ptych_plus, split_objective};
pub use tv::tv_value_grad;

use crate::error::{Error, Result};
use crate::optim::{AdamConfig, OptimizerKind};
use crate::tensor::ptyt::{save_tensor, Tensor};
use crate::tensor::RealImage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Outer iterations `T`.
    pub steps: usize,
    /// Step size for the latent code.
    pub learning_rate: f64,
    /// Step size for the image variable of Deep Ptych+.
    pub x_learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub adam: AdamConfig,
    /// Weight of `||x - G(z)||^2` in the split objective.
    pub lambda_range: f64,
    /// Weight of the smoothed TV term; 0 disables it.
    pub tv_weight: f64,
    /// Charbonnier smoothing of the TV term.
    pub tv_eps: f64,
    pub x_steps: usize,
    pub z_steps: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            learning_rate: 0.05,
            x_learning_rate: 0.01,
            optimizer: OptimizerKind::Adam,
            adam: AdamConfig::default(),
            lambda_range: 0.1,
            tv_weight: 0.0,
            tv_eps: 1e-3,
            x_steps: 1,
            z_steps: 1,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.x_learning_rate > 0.0) {
            return Err(Error::invalid("learning rates must be positive"));
        }
        if !(self.lambda_range >= 0.0 && self.tv_weight >= 0.0) {
            return Err(Error::invalid("lambda_range and tv_weight must be >= 0"));
        }
        if !(self.tv_eps > 0.0) {
            return Err(Error::invalid("tv_eps must be positive"));
        }
        if self.x_steps == 0 || self.z_steps == 0 {
            return Err(Error::invalid("x_steps and z_steps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconResult {
    pub x_hat: RealImage,
    /// Final latent code; `None` for solvers without a generator.
    pub z_hat: Option<Vec<f64>>,
    /// Objective at the initial iterate.
    pub initial_loss: f64,
    /// Objective after each step; `loss_trace.len() == steps_run`.
    pub loss_trace: Vec<f64>,
    pub steps_run: usize,
}

impl ReconResult {
    pub fn final_loss(&self) -> f64 {
        self.loss_trace.last().copied().unwrap_or(self.initial_loss)
    }

    /// Sidecar text: `steps_run`, `initial_loss`, `final_loss` records,
    /// then a `step,loss` CSV block.
    pub fn sidecar(&self) -> String {
        let mut s = String::new();
        writeln!(s, "steps_run,{}", self.steps_run).unwrap();
        writeln!(s, "initial_loss,{}", self.initial_loss).unwrap();
        writeln!(s, "final_loss,{}", self.final_loss()).unwrap();
        writeln!(s, "step,loss").unwrap();
        for (i, l) in self.loss_trace.iter().enumerate() {
            writeln!(s, "{},{}", i + 1, l).unwrap();
        }
        s
    }

    /// Writes `<stem>.ptyt` (x_hat), `<stem>.txt` (sidecar) and, when a
    /// latent exists, `<stem>.z.ptyt`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        save_tensor(&dir.join(format!("{stem}.ptyt")), &Tensor::from(&self.x_hat))?;
        let txt = dir.join(format!("{stem}.txt"));
        std::fs::write(&txt, self.sidecar()).map_err(|e| Error::io(&txt, e))?;
        if let Some(z) = &self.z_hat {
            let t = Tensor::Real {
                dims: vec![z.len() as u32],
                data: z.clone(),
            };
            save_tensor(&dir.join(format!("{stem}.z.ptyt")), &t)?;
        }
        Ok(())
    }
}

pub(crate) fn check_finite(values: &[f64], step: usize) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { step })
    }
}
