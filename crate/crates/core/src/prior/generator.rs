use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Layer, Mlp, Trace};
use crate::error::{Error, Result};
use crate::tensor::ptyt::{read_exact, read_f64, read_u32, read_u8};
use crate::tensor::RealImage;

pub const MAGIC: [u8; 4] = *b"PTYG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Linear,
    Mlp,
}

impl GeneratorKind {
    fn code(self) -> u8 {
        match self {
            GeneratorKind::Linear => 0,
            GeneratorKind::Mlp => 1,
        }
    }
}

/// Generator `G: R^k -> R^(side x side)`.
///
/// A `Linear` generator is one affine layer (`x = W z + b`); an `Mlp`
/// generator ends in a sigmoid so its images stay in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorWeights {
    kind: GeneratorKind,
    output_side: usize,
    net: Mlp,
}

impl GeneratorWeights {
    pub fn new(kind: GeneratorKind, output_side: usize, net: Mlp) -> Result<Self> {
        if net.output_dim() != output_side * output_side {
            return Err(Error::dim(format!(
                "generator outputs {} values, {output_side}x{output_side} image needs {}",
                net.output_dim(),
                output_side * output_side
            )));
        }
        match kind {
            GeneratorKind::Linear => {
                if net.layers().len() != 1 || net.layers()[0].activation() != Activation::None {
                    return Err(Error::invalid(
                        "linear generator must be a single layer without activation",
                    ));
                }
            }
            GeneratorKind::Mlp => {
                if net.layers().last().unwrap().activation() != Activation::Sigmoid {
                    return Err(Error::invalid("mlp generator must end in a sigmoid"));
                }
            }
        }
        Ok(Self {
            kind,
            output_side,
            net,
        })
    }

    /// `x = W z + b` with `W` given `n x k` row-major.
    pub fn linear(weight: Vec<f64>, bias: Vec<f64>, output_side: usize) -> Result<Self> {
        let n = output_side * output_side;
        if n == 0 || !weight.len().is_multiple_of(n) || weight.is_empty() {
            return Err(Error::dim(format!(
                "linear weight of length {} is not n x k for n = {n}",
                weight.len()
            )));
        }
        let k = weight.len() / n;
        let layer = Layer::new(n, k, weight, bias, Activation::None)?;
        Self::new(GeneratorKind::Linear, output_side, Mlp::new(vec![layer])?)
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn latent_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn output_side(&self) -> usize {
        self.output_side
    }

    pub fn output_len(&self) -> usize {
        self.output_side * self.output_side
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    fn check_latent(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.latent_dim() {
            return Err(Error::dim(format!(
                "latent has {} entries, generator expects {}",
                z.len(),
                self.latent_dim()
            )));
        }
        Ok(())
    }

    pub fn generate(&self, z: &[f64]) -> Result<RealImage> {
        self.check_latent(z)?;
        RealImage::new(self.output_side, self.output_side, self.net.forward(z))
    }

    /// Forward pass that keeps what the reverse pass needs.
    pub fn evaluate(&self, z: &[f64]) -> Result<GeneratorEval<'_>> {
        self.check_latent(z)?;
        Ok(GeneratorEval {
            gen: self,
            trace: self.net.forward_trace(z),
        })
    }

    /// `J(z)^T cotangent`.
    pub fn vjp(&self, z: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
        self.evaluate(z)?.vjp(cotangent)
    }
}

pub struct GeneratorEval<'a> {
    gen: &'a GeneratorWeights,
    trace: Trace,
}

impl GeneratorEval<'_> {
    pub fn output(&self) -> &[f64] {
        self.trace.output()
    }

    pub fn image(&self) -> RealImage {
        let side = self.gen.output_side;
        RealImage::new(side, side, self.trace.output().to_vec()).expect("output length checked at construction")
    }

    pub fn vjp(&self, cotangent: &[f64]) -> Result<Vec<f64>> {
        if cotangent.len() != self.gen.output_len() {
            return Err(Error::dim(format!(
                "cotangent has {} entries, generator outputs {}",
                cotangent.len(),
                self.gen.output_len()
            )));
        }
        Ok(self.gen.net.vjp_input(&self.trace, cotangent))
    }
}

pub fn generate(g: &GeneratorWeights, z: &[f64]) -> Result<RealImage> {
    g.generate(z)
}

pub fn generator_vjp(g: &GeneratorWeights, z: &[f64], cotangent: &[f64]) -> Result<Vec<f64>> {
    g.vjp(z, cotangent)
}

/// `PTYG` layout: magic, `u8` kind, `u32` k, `u32` output side, `u32`
/// layer count, then per layer `u32` out, `u32` in, `u8` activation, `W^T`
/// (input-major) and `b` as little-endian `f64`.
pub fn write_generator<W: Write>(w: &mut W, g: &GeneratorWeights) -> std::io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&[g.kind.code()])?;
    w.write_all(&(g.latent_dim() as u32).to_le_bytes())?;
    w.write_all(&(g.output_side as u32).to_le_bytes())?;
    w.write_all(&(g.net.layers().len() as u32).to_le_bytes())?;
    for layer in g.net.layers() {
        w.write_all(&(layer.out_dim() as u32).to_le_bytes())?;
        w.write_all(&(layer.in_dim() as u32).to_le_bytes())?;
        w.write_all(&[layer.activation().code()])?;
        for i in 0..layer.in_dim() {
            for o in 0..layer.out_dim() {
                w.write_all(&layer.weight()[o * layer.in_dim() + i].to_le_bytes())?;
            }
        }
        for b in layer.bias() {
            w.write_all(&b.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_generator<R: Read>(r: &mut R) -> Result<GeneratorWeights> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic)?;
    if magic != MAGIC {
        return Err(Error::format(format!("bad PTYG magic {magic:02x?}")));
    }
    let kind = match read_u8(r)? {
        0 => GeneratorKind::Linear,
        1 => GeneratorKind::Mlp,
        other => return Err(Error::format(format!("unknown generator kind {other}"))),
    };
    let k = read_u32(r)? as usize;
    let side = read_u32(r)? as usize;
    let count = read_u32(r)? as usize;
    let mut layers = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let out_dim = read_u32(r)? as usize;
        let in_dim = read_u32(r)? as usize;
        let activation = Activation::from_code(read_u8(r)?)?;
        let len = out_dim
            .checked_mul(in_dim)
            .filter(|&l| l <= 1 << 28)
            .ok_or_else(|| Error::format("layer too large"))?;
        let mut weight = vec![0.0; len];
        for i in 0..in_dim {
            for o in 0..out_dim {
                weight[o * in_dim + i] = read_f64(r)?;
            }
        }
        let bias = (0..out_dim).map(|_| read_f64(r)).collect::<Result<Vec<_>>>()?;
        layers.push(Layer::new(out_dim, in_dim, weight, bias, activation)?);
    }
    let net = Mlp::new(layers)?;
    if net.input_dim() != k {
        return Err(Error::format(format!(
            "header says k = {k}, first layer takes {}",
            net.input_dim()
        )));
    }
    GeneratorWeights::new(kind, side, net)
}

pub fn save_generator(path: &Path, g: &GeneratorWeights) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_generator(&mut w, g)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_generator(path: &Path) -> Result<GeneratorWeights> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_generator(&mut BufReader::new(file))
}
