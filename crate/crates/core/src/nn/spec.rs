use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Elu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Linear mean output plus one state-independent log-std parameter per output.
    GaussianPolicy,
    Value,
}

/// Dense MLP description.
///
/// With `d2rl` set, every hidden layer after the first receives
/// `[previous activation ‖ raw input]`. The output layer reads the last
/// hidden activation only and is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    pub output_dim: usize,
    #[serde(default)]
    pub activation: Activation,
    pub d2rl: bool,
    pub head: Head,
}

/// Shape and parameter offsets of one affine layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl NetworkSpec {
    pub fn policy(input_dim: usize, hidden_widths: Vec<usize>, action_dim: usize) -> Self {
        NetworkSpec {
            input_dim,
            hidden_widths,
            output_dim: action_dim,
            activation: Activation::Elu,
            d2rl: true,
            head: Head::GaussianPolicy,
        }
    }

    pub fn value(input_dim: usize, hidden_widths: Vec<usize>) -> Self {
        NetworkSpec {
            input_dim,
            hidden_widths,
            output_dim: 1,
            activation: Activation::Elu,
            d2rl: true,
            head: Head::Value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::invalid("input_dim", "must be at least 1"));
        }
        if self.output_dim == 0 {
            return Err(Error::invalid("output_dim", "must be at least 1"));
        }
        if self.hidden_widths.contains(&0) {
            return Err(Error::invalid("hidden_widths", "all widths must be at least 1"));
        }
        if self.d2rl && self.hidden_widths.is_empty() {
            return Err(Error::invalid("hidden_widths", "d2rl needs at least one hidden layer"));
        }
        if self.head == Head::Value && self.output_dim != 1 {
            return Err(Error::invalid("output_dim", "value head has exactly one output"));
        }
        Ok(())
    }

    /// Affine layers in evaluation order; the last one is the output layer.
    pub fn layers(&self) -> Vec<LayerShape> {
        let mut shapes = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut offset = 0;
        let mut prev = None::<usize>;
        let widths = self.hidden_widths.iter().copied().chain(std::iter::once(self.output_dim));
        let n_hidden = self.hidden_widths.len();
        for (k, fan_out) in widths.enumerate() {
            let fan_in = match prev {
                None => self.input_dim,
                Some(p) if self.d2rl && k < n_hidden => p + self.input_dim,
                Some(p) => p,
            };
            shapes.push(LayerShape {
                fan_in,
                fan_out,
                weight_offset: offset,
                bias_offset: offset + fan_in * fan_out,
            });
            offset += fan_in * fan_out + fan_out;
            prev = Some(fan_out);
        }
        shapes
    }

    /// Parameters of the affine layers only.
    pub fn mlp_param_count(&self) -> usize {
        self.layers().iter().map(|l| l.fan_in * l.fan_out + l.fan_out).sum()
    }

    /// Offset of the log-std block for policy heads.
    pub fn log_std_offset(&self) -> Option<usize> {
        match self.head {
            Head::GaussianPolicy => Some(self.mlp_param_count()),
            Head::Value => None,
        }
    }

    pub fn param_count(&self) -> usize {
        let extra = match self.head {
            Head::GaussianPolicy => self.output_dim,
            Head::Value => 0,
        };
        self.mlp_param_count() + extra
    }

    /// Widest activation vector, used to size scratch buffers.
    pub(crate) fn max_width(&self) -> usize {
        self.layers()
            .iter()
            .map(|l| l.fan_in.max(l.fan_out))
            .max()
            .unwrap_or(self.input_dim)
    }
}

/// Flat trainable parameters: per layer the row-major `fan_out × fan_in`
/// weights then the biases, followed by the log-std block for policy heads.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector<T> {
    pub values: Vec<T>,
}

impl<T: Scalar> ParameterVector<T> {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        ParameterVector {
            values: vec![T::zero(); spec.param_count()],
        }
    }

    pub fn from_values(spec: &NetworkSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.param_count() {
            return Err(Error::dim("parameter vector", spec.param_count(), values.len()));
        }
        Ok(ParameterVector { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check(&self, spec: &NetworkSpec) -> Result<()> {
        if self.values.len() != spec.param_count() {
            return Err(Error::dim("parameter vector", spec.param_count(), self.values.len()));
        }
        Ok(())
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }
}
