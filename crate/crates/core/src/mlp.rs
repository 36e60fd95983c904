//! One twin of the Siamese scorer: a fully connected network mapping a
//! descriptor to a score in (0, 1), with hand-written backpropagation.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::seeded;

pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;
pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;

/// Hidden widths of the reference architecture, followed by the scalar output.
pub const DEFAULT_WIDTHS: [usize; 5] = [512, 256, 128, 64, 1];

/// Largest f64 strictly below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * libm::expm1(x)
    }
}

/// Derivative of [`selu`]; at 0 the slope of the positive branch is used.
pub fn selu_derivative(x: f64) -> f64 {
    if x >= 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * libm::exp(x)
    }
}

/// Logistic function, kept inside the open interval (0, 1).
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Selu,
    Identity,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Selu => selu(z),
            Activation::Identity => z,
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// `da/dz`, given the pre-activation `z` and its activation `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Selu => selu_derivative(z),
            Activation::Identity => 1.0,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Selu => "selu",
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "selu" => Some(Activation::Selu),
            "identity" => Some(Activation::Identity),
            "sigmoid" => Some(Activation::Sigmoid),
            _ => None,
        }
    }
}

/// Network topology. Every hidden layer but the last uses SeLU; the last
/// hidden layer is linear unless `selu_on_last_hidden` is set; the output
/// unit is a sigmoid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpConfig {
    pub input_dim: usize,
    /// Layer output widths, ending with the single output unit.
    pub widths: Vec<usize>,
    pub selu_on_last_hidden: bool,
}

impl MlpConfig {
    pub fn new(input_dim: usize, widths: Vec<usize>) -> Self {
        Self {
            input_dim,
            widths,
            selu_on_last_hidden: false,
        }
    }

    pub fn with_default_widths(input_dim: usize) -> Self {
        Self::new(input_dim, DEFAULT_WIDTHS.to_vec())
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if self.widths.last() != Some(&1) || self.widths.contains(&0) {
            return Err(Error::InvalidConfig(
                "layer widths must be positive and end with a single output unit".into(),
            ));
        }
        Ok(())
    }

    pub fn activations(&self) -> Vec<Activation> {
        let n = self.widths.len();
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    Activation::Sigmoid
                } else if k + 2 == n && !self.selu_on_last_hidden {
                    Activation::Identity
                } else {
                    Activation::Selu
                }
            })
            .collect()
    }
}

/// Dense layer; `weights` is row-major `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layers: Vec<Layer>,
}

impl MlpParams {
    /// Validates that dimensions chain, the output is one sigmoid unit and
    /// every parameter is finite.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        let Some(last) = layers.last() else {
            return bad("network needs at least one layer");
        };
        if last.out_dim != 1 || last.activation != Activation::Sigmoid {
            return bad("output layer must be a single sigmoid unit");
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.weights.len() != layer.in_dim * layer.out_dim
                || layer.bias.len() != layer.out_dim
                || layer.in_dim == 0
            {
                return bad("layer parameter arrays do not match declared dimensions");
            }
            if k > 0 && layers[k - 1].out_dim != layer.in_dim {
                return bad("consecutive layer dimensions do not chain");
            }
            if layer
                .weights
                .iter()
                .chain(&layer.bias)
                .any(|x| !x.is_finite())
            {
                return bad("non-finite parameter");
            }
        }
        Ok(Self { layers })
    }

    pub fn zeros(config: &MlpConfig) -> Result<Self> {
        config.validate()?;
        let mut in_dim = config.input_dim;
        let layers = config
            .widths
            .iter()
            .zip(config.activations())
            .map(|(&w, act)| {
                let layer = Layer::zeros(in_dim, w, act);
                in_dim = w;
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.out_dim).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Mutable access to parameter `index` in flat order: layer by layer,
    /// weights (row-major) then bias.
    pub fn param_mut(&mut self, mut index: usize) -> Option<&mut f64> {
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            if index < nw {
                return layer.weights.get_mut(index);
            }
            index -= nw;
            if index < layer.bias.len() {
                return layer.bias.get_mut(index);
            }
            index -= layer.bias.len();
        }
        None
    }

    /// Parameter `index` in flat order; panics when out of range.
    pub fn flat_get(&self, mut index: usize) -> f64 {
        for layer in &self.layers {
            let nw = layer.weights.len();
            if index < nw {
                return layer.weights[index];
            }
            index -= nw;
            if index < layer.bias.len() {
                return layer.bias[index];
            }
            index -= layer.bias.len();
        }
        panic!("parameter index out of range")
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    /// `params -= step * grad`, elementwise.
    pub(crate) fn descend(&mut self, grad: &ParamGrad, step: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= step * gw;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= step * gb;
            }
        }
    }
}

/// Dot product with eight independent partial sums, combined in a fixed
/// order. Results are deterministic and the loop vectorizes.
fn lane_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (xa, xb) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += xa[k] * xb[k];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Weights ~ N(0, 1/fan_in), biases zero.
pub fn init_params(config: &MlpConfig, seed: u64) -> Result<MlpParams> {
    let mut params = MlpParams::zeros(config)?;
    let mut rng = seeded(seed);
    for layer in &mut params.layers {
        let std = 1.0 / libm::sqrt(layer.in_dim as f64);
        let normal = Normal::new(0.0, std).map_err(|_| Error::InvalidConfig("init std".into()))?;
        for w in &mut layer.weights {
            *w = normal.sample(&mut rng);
        }
    }
    Ok(params)
}

/// Per-layer pre-activations and activations from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl ForwardTrace {
    /// The network output r(f).
    pub fn score(&self) -> f64 {
        self.post.last().map_or(0.5, |a| a[0])
    }
}

pub fn forward(params: &MlpParams, input: &[f64]) -> Result<ForwardTrace> {
    if input.len() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            found: input.len(),
        });
    }
    let mut pre = Vec::with_capacity(params.layers.len());
    let mut post: Vec<Vec<f64>> = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let x = post.last().map_or(input, Vec::as_slice);
        let z: Vec<f64> = layer
            .weights
            .chunks_exact(layer.in_dim)
            .zip(&layer.bias)
            .map(|(row, b)| b + lane_dot(row, x))
            .collect();
        let a = z.iter().map(|&zi| layer.activation.apply(zi)).collect();
        pre.push(z);
        post.push(a);
    }
    Ok(ForwardTrace {
        input: input.to_vec(),
        pre,
        post,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Gradient with the same shape as [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad {
    pub layers: Vec<LayerGrad>,
}

impl ParamGrad {
    pub fn zeros_like(params: &MlpParams) -> Self {
        Self {
            layers: params
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
    }

    pub fn add_scaled(&mut self, other: &ParamGrad, scale: f64) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.values_mut() {
            *a *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    pub fn flat(&self) -> Vec<f64> {
        self.values().collect()
    }
}

/// Gradients of a scalar loss with respect to parameters and input.
#[derive(Debug, Clone, PartialEq)]
pub struct Backward {
    pub params: ParamGrad,
    pub input: Vec<f64>,
}

/// Backpropagates `upstream = dL/dr` through a trace produced by
/// [`forward`] under the same `params`.
pub fn backward(params: &MlpParams, trace: &ForwardTrace, upstream: f64) -> Result<Backward> {
    let mut grads = ParamGrad::zeros_like(params);
    let input = backward_accumulate(params, trace, upstream, &mut grads)?;
    Ok(Backward {
        params: grads,
        input,
    })
}

/// Like [`backward`], but adds the parameter gradient into `grads` and
/// returns only the input gradient.
pub fn backward_accumulate(
    params: &MlpParams,
    trace: &ForwardTrace,
    upstream: f64,
    grads: &mut ParamGrad,
) -> Result<Vec<f64>> {
    let n = params.layers.len();
    if trace.pre.len() != n
        || trace.post.len() != n
        || trace.input.len() != params.input_dim()
        || grads.layers.len() != n
        || params
            .layers
            .iter()
            .zip(&trace.pre)
            .zip(&grads.layers)
            .any(|((l, z), g)| z.len() != l.out_dim || g.weights.len() != l.weights.len())
    {
        return Err(Error::InvalidConfig(
            "trace does not match network shape".into(),
        ));
    }

    // dL/da for the current layer's output.
    let mut delta_out = vec![upstream];
    for k in (0..n).rev() {
        let layer = &params.layers[k];
        let x = if k == 0 {
            &trace.input
        } else {
            &trace.post[k - 1]
        };
        let dz: Vec<f64> = delta_out
            .iter()
            .zip(&trace.pre[k])
            .zip(&trace.post[k])
            .map(|((d, &z), &a)| d * layer.activation.derivative(z, a))
            .collect();
        let g = &mut grads.layers[k];
        for (o, &dzo) in dz.iter().enumerate() {
            g.bias[o] += dzo;
            if dzo == 0.0 {
                continue;
            }
            let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            for (gw, xi) in row.iter_mut().zip(x) {
                *gw += dzo * xi;
            }
        }
        let mut dx = vec![0.0; layer.in_dim];
        for (row, &dzo) in layer.weights.chunks_exact(layer.in_dim).zip(&dz) {
            if dzo == 0.0 {
                continue;
            }
            for (d, w) in dx.iter_mut().zip(row) {
                *d += dzo * w;
            }
        }
        delta_out = dx;
    }
    Ok(delta_out)
}
