use super::latent::check_generator;
use super::tv::tv_value_grad;
use super::{check_finite, ReconResult, SolverConfig};
use crate::error::{Error, Result};
use crate::optics::{DataTerm, Measurements};
use crate::optim::Optimizer;
use crate::prior::GeneratorWeights;
use crate::rng::SplitMix64;
use crate::tensor::RealImage;

/// `data(x) + lambda ||x - G(z)||^2 + tv_weight TV(x)`.
pub fn split_objective(
    m: &Measurements,
    g: &GeneratorWeights,
    x: &RealImage,
    z: &[f64],
    cfg: &SolverConfig,
) -> Result<f64> {
    check_generator(g, m)?;
    let term = DataTerm::new(m)?;
    let gz = g.generate(z)?;
    objective(&term, gz.data(), x, cfg)
}

fn objective(term: &DataTerm, gz: &[f64], x: &RealImage, cfg: &SolverConfig) -> Result<f64> {
    let data = term.loss_real(x)?;
    let range: f64 = x.data().iter().zip(gz).map(|(a, b)| (a - b).powi(2)).sum();
    let tv = if cfg.tv_weight > 0.0 {
        tv_value_grad(x, cfg.tv_eps).0
    } else {
        0.0
    };
    Ok(data + cfg.lambda_range * range + cfg.tv_weight * tv)
}

/// Gradient of the split objective with respect to `x`, `z` held fixed.
pub(crate) fn x_gradient(term: &DataTerm, gz: &[f64], x: &RealImage, cfg: &SolverConfig) -> Result<RealImage> {
    let (_, mut grad) = term.loss_and_real_gradient(x)?;
    if cfg.lambda_range > 0.0 {
        let two_lambda = 2.0 * cfg.lambda_range;
        for ((gr, &xv), &gv) in grad.data_mut().iter_mut().zip(x.data()).zip(gz) {
            *gr += two_lambda * (xv - gv);
        }
    }
    if cfg.tv_weight > 0.0 {
        let (_, tv) = tv_value_grad(x, cfg.tv_eps);
        for (gr, t) in grad.data_mut().iter_mut().zip(tv.data()) {
            *gr += cfg.tv_weight * t;
        }
    }
    Ok(grad)
}

/// Alternating descent on the split objective. Each outer iteration takes
/// `x_steps` updates of `x` (clamped to `[0, 1]` after each) and then
/// `z_steps` updates of `z`. Starts from `z_0 ~ N(0, I)`, `x_0 = G(z_0)`
/// and returns `x_T`.
pub fn deep_ptych_plus(m: &Measurements, g: &GeneratorWeights, cfg: &SolverConfig) -> Result<ReconResult> {
    cfg.validate()?;
    check_generator(g, m)?;
    let term = DataTerm::new(m)?;

    let mut z = SplitMix64::new(cfg.seed).normal_vec(g.latent_dim());
    let mut x = g.generate(&z)?;
    let mut gz = x.data().to_vec();
    let mut x_opt = Optimizer::new(cfg.optimizer, x.len(), cfg.x_learning_rate, cfg.adam);
    let mut z_opt = Optimizer::new(cfg.optimizer, z.len(), cfg.learning_rate, cfg.adam);

    let initial_loss = objective(&term, &gz, &x, cfg)?;
    let mut trace = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        for _ in 0..cfg.x_steps {
            let grad = x_gradient(&term, &gz, &x, cfg)?;
            check_finite(grad.data(), step)?;
            x_opt.step(x.data_mut(), grad.data());
            x.clamp01();
        }
        if cfg.lambda_range > 0.0 {
            for _ in 0..cfg.z_steps {
                let eval = g.evaluate(&z)?;
                let two_lambda = 2.0 * cfg.lambda_range;
                let cot: Vec<f64> = eval
                    .output()
                    .iter()
                    .zip(x.data())
                    .map(|(a, b)| two_lambda * (a - b))
                    .collect();
                let grad = eval.vjp(&cot)?;
                check_finite(&grad, step)?;
                z_opt.step(&mut z, &grad);
            }
            gz = g.generate(&z)?.into_data();
        }
        let value = objective(&term, &gz, &x, cfg)?;
        if !value.is_finite() {
            return Err(Error::NonFinite { step });
        }
        trace.push(value);
    }

    Ok(ReconResult {
        x_hat: x,
        z_hat: Some(z),
        initial_loss,
        steps_run: trace.len(),
        loss_trace: trace,
    })
}
