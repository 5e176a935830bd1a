//! Generative prior `G: R^k -> R^n`: a linear generator for exact tests and
//! a small fully connected decoder trained as an autoencoder.

mod generator;
mod leastsq;
mod mlp;
mod train;

pub use generator::{
    generate, generator_vjp, load_generator, read_generator, save_generator, write_generator,
    GeneratorEval, GeneratorKind, GeneratorWeights,
};
pub use leastsq::{fit_latent, fit_latent_leastsq, MAX_CONDITION};
pub use mlp::{Activation, Layer, Mlp, MlpGrads, Trace};
pub use train::{train_decoder, TrainConfig, TrainReport};
