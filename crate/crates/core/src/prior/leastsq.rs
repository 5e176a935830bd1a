use nalgebra::{DMatrix, DVector};

use super::generator::{GeneratorKind, GeneratorWeights};
use crate::error::{Error, Result};
use crate::optim::{Adam, AdamConfig};
use crate::tensor::RealImage;

/// Condition number above which the normal equations are refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Exact range projection for a linear generator:
/// `argmin_z || x - (W z + b) ||` through the normal equations.
pub fn fit_latent_leastsq(g: &GeneratorWeights, x: &RealImage) -> Result<Vec<f64>> {
    if g.kind() != GeneratorKind::Linear {
        return Err(Error::invalid("least-squares latent fit needs a linear generator"));
    }
    if x.len() != g.output_len() {
        return Err(Error::dim(format!(
            "image has {} pixels, generator outputs {}",
            x.len(),
            g.output_len()
        )));
    }
    let layer = &g.net().layers()[0];
    let (n, k) = (layer.out_dim(), layer.in_dim());
    let w = DMatrix::from_row_slice(n, k, layer.weight());
    let rhs = DVector::from_iterator(n, x.data().iter().zip(layer.bias()).map(|(a, b)| a - b));

    let gram = w.transpose() * &w;
    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let chol = gram
        .cholesky()
        .ok_or(Error::IllConditioned { condition })?;
    Ok(chol.solve(&(w.transpose() * rhs)).iter().copied().collect())
}

/// Approximate range projection for any generator: Adam on
/// `|| G(z) - x ||^2` starting from `z = 0`.
pub fn fit_latent(g: &GeneratorWeights, x: &RealImage, steps: usize, learning_rate: f64) -> Result<Vec<f64>> {
    if x.len() != g.output_len() {
        return Err(Error::dim(format!(
            "image has {} pixels, generator outputs {}",
            x.len(),
            g.output_len()
        )));
    }
    let mut z = vec![0.0; g.latent_dim()];
    let mut opt = Adam::new(z.len(), learning_rate, AdamConfig::default());
    for step in 0..steps {
        let eval = g.evaluate(&z)?;
        let cot: Vec<f64> = eval
            .output()
            .iter()
            .zip(x.data())
            .map(|(a, b)| 2.0 * (a - b))
            .collect();
        let grad = eval.vjp(&cot)?;
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step });
        }
        opt.step(&mut z, &grad);
    }
    Ok(z)
}
