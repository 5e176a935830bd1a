//! Fully connected network with explicit reverse-mode passes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::None => x,
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the pre- and post-activation values.
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::None => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => post * (1.0 - post),
            Activation::Tanh => 1.0 - post * post,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::None => 0,
            Activation::Relu => 1,
            Activation::Sigmoid => 2,
            Activation::Tanh => 3,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => Activation::None,
            1 => Activation::Relu,
            2 => Activation::Sigmoid,
            3 => Activation::Tanh,
            _ => return Err(Error::format(format!("unknown activation code {code}"))),
        })
    }
}

/// Dense layer `y = act(W x + b)` with `W` stored `out x in` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub(crate) out_dim: usize,
    pub(crate) in_dim: usize,
    pub(crate) weight: Vec<f64>,
    pub(crate) bias: Vec<f64>,
    pub(crate) activation: Activation,
}

impl Layer {
    pub fn new(out_dim: usize, in_dim: usize, weight: Vec<f64>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if out_dim == 0 || in_dim == 0 {
            return Err(Error::dim("layer dimensions must be positive"));
        }
        if weight.len() != out_dim * in_dim || bias.len() != out_dim {
            return Err(Error::dim(format!(
                "layer {out_dim}x{in_dim} got {} weights and {} biases",
                weight.len(),
                bias.len()
            )));
        }
        Ok(Self {
            out_dim,
            in_dim,
            weight,
            bias,
            activation,
        })
    }

    /// Uniform `+-sqrt(6 / (in + out))` weights, zero bias.
    pub fn glorot(out_dim: usize, in_dim: usize, activation: Activation, rng: &mut SplitMix64) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weight = (0..out_dim * in_dim).map(|_| rng.uniform(-limit, limit)).collect();
        Self {
            out_dim,
            in_dim,
            weight,
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn preactivation(&self, x: &[f64]) -> Vec<f64> {
        self.weight
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

/// Values kept from a forward pass for the reverse pass.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `inputs[i]` feeds layer `i`; the final entry is the network output.
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().expect("trace always holds the input")
    }
}

/// Parameter gradients with the same layout as [`Mlp`].
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<Vec<f64>>,
}

impl MlpGrads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weight: net.layers.iter().map(|l| vec![0.0; l.weight.len()]).collect(),
            bias: net.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    pub fn add(&mut self, other: &MlpGrads) {
        for (a, b) in self.weight.iter_mut().zip(&other.weight) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub(crate) layers: Vec<Layer>,
}

impl Mlp {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::dim("network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::dim(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].out_dim,
                    i + 1,
                    pair[1].in_dim
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-initialised network with layer widths `sizes` and one
    /// activation per layer.
    pub fn init(sizes: &[usize], activations: &[Activation], rng: &mut SplitMix64) -> Result<Self> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 {
            return Err(Error::dim(format!(
                "{} sizes need {} activations, got {}",
                sizes.len(),
                sizes.len().saturating_sub(1),
                activations.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::dim("layer widths must be positive"));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Layer::glorot(w[1], w[0], act, rng))
            .collect();
        Mlp::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.layers.iter().fold(x.to_vec(), |h, layer| {
            let mut pre = layer.preactivation(&h);
            pre.iter_mut().for_each(|v| *v = layer.activation.apply(*v));
            pre
        })
    }

    pub fn forward_trace(&self, x: &[f64]) -> Trace {
        let mut inputs = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let p = layer.preactivation(inputs.last().unwrap());
            let post = p.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(p);
            inputs.push(post);
        }
        Trace { inputs, pre }
    }

    /// Vector-Jacobian product with respect to the network input.
    pub fn vjp_input(&self, trace: &Trace, cotangent: &[f64]) -> Vec<f64> {
        self.reverse(trace, cotangent, None)
    }

    /// Reverse pass that also accumulates parameter gradients into `grads`.
    pub fn backward(&self, trace: &Trace, cotangent: &[f64], grads: &mut MlpGrads) -> Vec<f64> {
        self.reverse(trace, cotangent, Some(grads))
    }

    fn reverse(&self, trace: &Trace, cotangent: &[f64], mut grads: Option<&mut MlpGrads>) -> Vec<f64> {
        let mut delta = cotangent.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let post = &trace.inputs[i + 1];
            for ((d, &p), &q) in delta.iter_mut().zip(&trace.pre[i]).zip(post) {
                *d *= layer.activation.derivative(p, q);
            }
            let input = &trace.inputs[i];
            if let Some(g) = grads.as_deref_mut() {
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut g.weight[i][o * layer.in_dim..(o + 1) * layer.in_dim];
                    row.iter_mut().zip(input).for_each(|(w, &x)| *w += d * x);
                    g.bias[i][o] += d;
                }
            }
            let mut next = vec![0.0; layer.in_dim];
            for (row, &d) in layer.weight.chunks_exact(layer.in_dim).zip(&delta) {
                if d == 0.0 {
                    continue;
                }
                next.iter_mut().zip(row).for_each(|(n, &w)| *n += w * d);
            }
            delta = next;
        }
        delta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(seed: u64) -> Mlp {
        let mut rng = SplitMix64::new(seed);
        Mlp::init(
            &[5, 7, 6, 4],
            &[Activation::Tanh, Activation::Relu, Activation::Sigmoid],
            &mut rng,
        )
        .unwrap()
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn rejects_non_chaining_layers() {
        let a = Layer::new(3, 2, vec![0.0; 6], vec![0.0; 3], Activation::Relu).unwrap();
        let b = Layer::new(2, 4, vec![0.0; 8], vec![0.0; 2], Activation::None).unwrap();
        assert!(Mlp::new(vec![a, b]).is_err());
        assert!(Mlp::new(vec![]).is_err());
    }

    #[test]
    fn trace_output_matches_forward() {
        let n = net(1);
        let x = [0.3, -0.2, 0.9, 0.0, 1.5];
        assert_eq!(n.forward_trace(&x).output(), n.forward(&x).as_slice());
    }

    #[test]
    fn parameter_gradient_matches_finite_differences() {
        let n = net(2);
        let x = [0.3, -0.2, 0.9, 0.1, 1.5];
        let v = [0.5, -1.0, 0.25, 2.0];
        let mut grads = MlpGrads::zeros_like(&n);
        n.backward(&n.forward_trace(&x), &v, &mut grads);

        let h = 1e-6;
        for layer in 0..3 {
            for idx in [0usize, 3, 5] {
                let mut p = n.clone();
                p.layers[layer].weight[idx] += h;
                let mut m = n.clone();
                m.layers[layer].weight[idx] -= h;
                let fd = (dot(&p.forward(&x), &v) - dot(&m.forward(&x), &v)) / (2.0 * h);
                let an = grads.weight[layer][idx];
                assert!((fd - an).abs() < 1e-7 * (1.0 + fd.abs()), "w{layer}[{idx}] {fd} vs {an}");
            }
            let mut p = n.clone();
            p.layers[layer].bias[1] += h;
            let mut m = n.clone();
            m.layers[layer].bias[1] -= h;
            let fd = (dot(&p.forward(&x), &v) - dot(&m.forward(&x), &v)) / (2.0 * h);
            assert!((fd - grads.bias[layer][1]).abs() < 1e-7 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn activation_codes_roundtrip() {
        for a in [Activation::None, Activation::Relu, Activation::Sigmoid, Activation::Tanh] {
            assert_eq!(Activation::from_code(a.code()).unwrap(), a);
        }
        assert!(Activation::from_code(9).is_err());
    }
}
