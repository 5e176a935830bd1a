use crate::tensor::RealImage;

/// Anisotropic Charbonnier-smoothed total variation
/// `sum sqrt(dh^2 + eps^2) - eps + sqrt(dv^2 + eps^2) - eps` over forward
/// differences with replicate boundary (the last row/column contributes
/// zero), and its exact gradient.
pub fn tv_value_grad(x: &RealImage, eps: f64) -> (f64, RealImage) {
    let (rows, cols) = x.shape();
    let d = x.data();
    let mut grad = RealImage::zeros(rows, cols);
    let g = grad.data_mut();
    let mut value = 0.0;
    let mut term = |a: usize, b: usize, g: &mut [f64]| {
        let diff = d[b] - d[a];
        let s = (diff * diff + eps * eps).sqrt();
        value += s - eps;
        let dv = diff / s;
        g[b] += dv;
        g[a] -= dv;
    };
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                term(i, i + 1, g);
            }
            if r + 1 < rows {
                term(i, i + cols, g);
            }
        }
    }
    (value, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn constant_image_has_zero_tv() {
        let x = RealImage::filled(8, 8, 0.37);
        let (v, g) = tv_value_grad(&x, 1e-3);
        assert!(v.abs() < 1e-15);
        assert!(g.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn step_edge_tends_to_rows_times_height() {
        let (rows, h) = (6, 0.4);
        let x = RealImage::from_fn(rows, 8, |_, c| if c < 3 { 0.1 } else { 0.1 + h });
        for eps in [1e-3, 1e-6, 1e-9] {
            let (v, _) = tv_value_grad(&x, eps);
            assert!((v - rows as f64 * h).abs() < rows as f64 * eps * 1.01, "eps {eps}: {v}");
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = SplitMix64::new(8);
        let x = RealImage::from_fn(8, 8, |_, _| rng.next_f64());
        let dir = RealImage::from_fn(8, 8, |_, _| rng.next_normal());
        let eps = 1e-6;
        let (_, g) = tv_value_grad(&x, eps);
        let analytic: f64 = g.data().iter().zip(dir.data()).map(|(a, b)| a * b).sum();
        let h = 1e-7;
        let shifted = |s: f64| {
            let data = x.data().iter().zip(dir.data()).map(|(a, b)| a + s * b).collect();
            tv_value_grad(&RealImage::new(8, 8, data).unwrap(), eps).0
        };
        let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
        assert!((analytic - numeric).abs() / numeric.abs() < 1e-6, "{analytic} vs {numeric}");
    }
}
