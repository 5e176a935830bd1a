use super::{check_finite, ReconResult, SolverConfig};
use crate::error::{Error, Result};
use crate::optics::{DataTerm, Measurements};
use crate::optim::Optimizer;
use crate::prior::GeneratorWeights;
use crate::rng::SplitMix64;

pub(crate) fn check_generator(g: &GeneratorWeights, m: &Measurements) -> Result<()> {
    if g.output_side() != m.image_size() {
        return Err(Error::dim(format!(
            "generator produces {0}x{0} images, measurements are {1}x{1}",
            g.output_side(),
            m.image_size()
        )));
    }
    Ok(())
}

/// Latent objective `sum_l || y_l - |A_l G(z)| ||^2` over sampled pixels.
pub fn loss(z: &[f64], g: &GeneratorWeights, m: &Measurements) -> Result<f64> {
    check_generator(g, m)?;
    DataTerm::new(m)?.loss_real(&g.generate(z)?)
}

/// Latent objective and its gradient
/// `J_G(z)^T (2 Re sum_l A_l^H ((|A_l G(z)| - y_l) o phase(A_l G(z))))`.
pub fn latent_loss_and_gradient(term: &DataTerm, g: &GeneratorWeights, z: &[f64]) -> Result<(f64, Vec<f64>)> {
    let eval = g.evaluate(z)?;
    let (value, grad_x) = term.loss_and_real_gradient(&eval.image())?;
    Ok((value, eval.vjp(grad_x.data())?))
}

/// Latent-space descent: `z_0 ~ N(0, I_k)` from `cfg.seed`, then `T` steps
/// of the configured optimizer on the latent objective. The estimate is
/// `G(z_T)`, so it always lies in the generator range.
pub fn deep_ptych(m: &Measurements, g: &GeneratorWeights, cfg: &SolverConfig) -> Result<ReconResult> {
    cfg.validate()?;
    check_generator(g, m)?;
    let term = DataTerm::new(m)?;

    let mut z = SplitMix64::new(cfg.seed).normal_vec(g.latent_dim());
    let mut opt = Optimizer::new(cfg.optimizer, z.len(), cfg.learning_rate, cfg.adam);
    let mut initial_loss = 0.0;
    let mut trace = Vec::with_capacity(cfg.steps);

    for step in 0..=cfg.steps {
        let (value, grad) = latent_loss_and_gradient(&term, g, &z)?;
        if !value.is_finite() {
            return Err(Error::NonFinite { step });
        }
        if step == 0 {
            initial_loss = value;
        } else {
            trace.push(value);
        }
        if step == cfg.steps {
            break;
        }
        check_finite(&grad, step)?;
        opt.step(&mut z, &grad);
    }

    Ok(ReconResult {
        x_hat: g.generate(&z)?,
        z_hat: Some(z),
        initial_loss,
        steps_run: trace.len(),
        loss_trace: trace,
    })
}
