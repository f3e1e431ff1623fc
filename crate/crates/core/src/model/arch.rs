use std::fmt;
use std::ops::{Deref, DerefMut};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

/// Fully connected tanh network mapping `(x, t)` to a scalar.
///
/// Hidden layers use `tanh`, the output layer is affine. `[2, 1]` (no hidden
/// layer) is accepted and describes a plain affine map.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MlpArchitecture {
    layer_sizes: Vec<usize>,
}

/// Location of one affine layer inside a flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Start of the `fan_out × fan_in` row-major weight block.
    pub weights: usize,
    /// Start of the `fan_out` biases, right after the weights.
    pub biases: usize,
}

impl MlpArchitecture {
    pub fn new(layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::config("an architecture needs at least input and output layers"));
        }
        if layer_sizes[0] != 2 {
            return Err(Error::config(format!("input width must be 2, got {}", layer_sizes[0])));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(Error::config("output width must be 1"));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::config("layer widths must be positive"));
        }
        Ok(Self { layer_sizes })
    }

    /// `[2, 25, 25, 1]`: 751 parameters.
    pub fn small() -> Self {
        Self { layer_sizes: vec![2, 25, 25, 1] }
    }

    /// `[2, 50, 50, 50, 50, 1]`: 7851 parameters.
    pub fn large() -> Self {
        Self { layer_sizes: vec![2, 50, 50, 50, 50, 1] }
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Widest layer, used to size scratch buffers.
    pub fn max_width(&self) -> usize {
        self.layer_sizes.iter().copied().max().unwrap_or(0)
    }

    pub fn layers(&self) -> Vec<LayerShape> {
        let mut offset = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let shape = LayerShape {
                    fan_in: w[0],
                    fan_out: w[1],
                    weights: offset,
                    biases: offset + w[0] * w[1],
                };
                offset += w[0] * w[1] + w[1];
                shape
            })
            .collect()
    }

    pub(crate) fn check_params(&self, len: usize) -> Result<()> {
        let expected = self.param_count();
        if len != expected {
            return Err(Error::config(format!(
                "parameter vector has {len} entries, architecture {self} needs {expected}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for MlpArchitecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.layer_sizes.iter().map(|s| s.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

pub fn param_count(arch: &MlpArchitecture) -> usize {
    arch.param_count()
}

/// Flat vector of all trainable parameters, laid out layer by layer as
/// row-major weights followed by biases.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(arch: &MlpArchitecture, seed: u64) -> ParamVector {
    let mut rng = stream(seed, Stream::Init);
    let mut params = vec![0.0; arch.param_count()];
    for layer in arch.layers() {
        let bound = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
        for w in &mut params[layer.weights..layer.biases] {
            *w = rng.random_range(-bound..bound);
        }
    }
    ParamVector(params)
}
