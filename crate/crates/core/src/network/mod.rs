//! The hypothesis `h_w`: a ReLU MLP over one flat parameter vector.
//!
//! Layout of `w`, layer by layer: the `fan_in x fan_out` weight matrix in
//! row-major order (inputs multiply from the left, `x W + b`), then the
//! `fan_out` bias.

mod ball;
mod checkpoint;

pub use ball::{sample_ball, BallSample};
pub use checkpoint::{CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::Prng;
use crate::tape::{Tape, Var};
use crate::tensor::{self, Tensor};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
}

impl MlpConfig {
    pub fn new(input_dim: usize, hidden: Vec<usize>, classes: usize) -> Result<Self> {
        let cfg = Self {
            input_dim,
            hidden,
            classes,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return invalid("input dimension must be at least 1");
        }
        if let Some(i) = self.hidden.iter().position(|&w| w == 0) {
            return invalid(format!("hidden layer {i} has width 0"));
        }
        if self.classes < 2 {
            return invalid(format!("need at least 2 classes, got {}", self.classes));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every affine layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut fan_in = self.input_dim;
        for &w in self.hidden.iter().chain(std::iter::once(&self.classes)) {
            dims.push((fan_in, w));
            fan_in = w;
        }
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    config: MlpConfig,
    weights: Vec<f64>,
}

/// Borrowed view of one affine layer inside the flat vector.
#[derive(Clone, Copy, Debug)]
pub struct LayerView<'a> {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weight: &'a [f64],
    pub bias: &'a [f64],
}

impl Network {
    /// Glorot-uniform weights, zero biases.
    pub fn init(config: MlpConfig, rng: &mut Prng) -> Result<Self> {
        config.validate()?;
        let mut weights = Vec::with_capacity(config.param_count());
        for (fan_in, fan_out) in config.layer_dims() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.extend((0..fan_in * fan_out).map(|_| rng.uniform(-limit, limit)));
            weights.extend(std::iter::repeat(0.0).take(fan_out));
        }
        Ok(Self { config, weights })
    }

    pub fn from_weights(config: MlpConfig, weights: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if weights.len() != config.param_count() {
            return invalid(format!(
                "config needs {} parameters, got {}",
                config.param_count(),
                weights.len()
            ));
        }
        Ok(Self { config, weights })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn param_count(&self) -> usize {
        self.weights.len()
    }

    /// Same architecture, different parameters.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Network> {
        Network::from_weights(self.config.clone(), weights)
    }

    pub fn layers(&self) -> Vec<LayerView<'_>> {
        let mut out = Vec::new();
        let mut offset = 0;
        for (fan_in, fan_out) in self.config.layer_dims() {
            let weight = &self.weights[offset..offset + fan_in * fan_out];
            offset += fan_in * fan_out;
            let bias = &self.weights[offset..offset + fan_out];
            offset += fan_out;
            out.push(LayerView {
                fan_in,
                fan_out,
                weight,
                bias,
            });
        }
        out
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.shape().len() != 2 || x.cols() != self.config.input_dim {
            return invalid(format!(
                "input batch shape {:?} does not match input dimension {}",
                x.shape(),
                self.config.input_dim
            ));
        }
        Ok(())
    }

    /// Scores `B x c` without recording gradients.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let layers = self.layers();
        let last = layers.len() - 1;
        let mut h = x.clone();
        for (l, layer) in layers.iter().enumerate() {
            let w = Tensor::matrix(layer.fan_in, layer.fan_out, layer.weight.to_vec())?;
            let b = Tensor::vector(layer.bias.to_vec());
            h = tensor::add_bias(&tensor::matmul(&h, &w)?, &b)?;
            if l != last {
                h = tensor::relu(&h);
            }
        }
        Ok(h)
    }

    /// Records the forward pass, reading parameters from the flat `params` node.
    pub fn forward_on(&self, tape: &mut Tape, params: Var, x: Var) -> Result<Var> {
        self.check_input(tape.value(x))?;
        if tape.value(params).len() != self.param_count() {
            return invalid(format!(
                "parameter node has {} entries, network needs {}",
                tape.value(params).len(),
                self.param_count()
            ));
        }
        let dims = self.config.layer_dims();
        let last = dims.len() - 1;
        let mut offset = 0;
        let mut h = x;
        for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
            let w = tape.slice(params, offset, &[fan_in, fan_out])?;
            offset += fan_in * fan_out;
            let b = tape.slice(params, offset, &[fan_out])?;
            offset += fan_out;
            let z = tape.matmul(h, w)?;
            h = tape.add_bias(z, b)?;
            if l != last {
                h = tape.relu(h);
            }
        }
        Ok(h)
    }
}
