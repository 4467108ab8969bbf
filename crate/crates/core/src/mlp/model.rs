use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{argmax, Real};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply<T: Real>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation.
    #[inline]
    pub fn derivative<T: Real>(self, z: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - z.tanh().powi(2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

/// One dense layer, weights row-major `fan_in x fan_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer<T> {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<T>,
    pub bias: Option<Vec<T>>,
}

impl<T: Real> Layer<T> {
    pub fn zeros(fan_in: usize, fan_out: usize, with_bias: bool) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![T::zero(); fan_in * fan_out],
            bias: with_bias.then(|| vec![T::zero(); fan_out]),
        }
    }

    #[inline]
    pub fn w(&self, i: usize, j: usize) -> T {
        self.weights[i * self.fan_out + j]
    }

    /// Outgoing weights of presynaptic neuron `i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.weights[i * self.fan_out..(i + 1) * self.fan_out]
    }

    pub fn pre_activation(&self, x: &[T]) -> Vec<T> {
        let mut z = self.bias.clone().unwrap_or_else(|| vec![T::zero(); self.fan_out]);
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            for (zj, &w) in z.iter_mut().zip(self.row(i)) {
                *zj += xi * w;
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel<T> {
    dims: Vec<usize>,
    layers: Vec<Layer<T>>,
    pub activation: Activation,
    /// Free-form provenance: seed, training config, quantization format, ...
    pub meta: BTreeMap<String, String>,
}

impl<T: Real> MlpModel<T> {
    /// All-zero model. `zero_bias = true` means no bias vectors exist at all.
    pub fn zeros(dims: &[usize], zero_bias: bool, activation: Activation) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Param("a network needs at least input and output layers".into()));
        }
        let layers = dims.windows(2).map(|w| Layer::zeros(w[0], w[1], !zero_bias)).collect();
        Ok(Self { dims: dims.to_vec(), layers, activation, meta: BTreeMap::new() })
    }

    /// Uniform He-style initialisation, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`.
    pub fn init(dims: &[usize], zero_bias: bool, activation: Activation, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(dims, zero_bias, activation)?;
        for (l, layer) in m.layers.iter_mut().enumerate() {
            let limit = (6.0 / layer.fan_in.max(1) as f64).sqrt();
            let mut r = rng::stream(seed, &[0x1417, l as u64]);
            for w in &mut layer.weights {
                *w = T::of(r.gen_range(-limit..limit));
            }
        }
        Ok(m)
    }

    /// Builds a model from explicit layers; shapes must chain.
    pub fn from_layers(layers: Vec<Layer<T>>, activation: Activation) -> Result<Self> {
        let first = layers.first().ok_or_else(|| Error::Param("no layers".into()))?;
        let mut dims = vec![first.fan_in];
        for layer in &layers {
            if layer.fan_in != *dims.last().unwrap() {
                return Err(Error::Dimension { expected: *dims.last().unwrap(), got: layer.fan_in });
            }
            if layer.weights.len() != layer.fan_in * layer.fan_out {
                return Err(Error::Dimension { expected: layer.fan_in * layer.fan_out, got: layer.weights.len() });
            }
            if let Some(b) = &layer.bias {
                if b.len() != layer.fan_out {
                    return Err(Error::Dimension { expected: layer.fan_out, got: b.len() });
                }
            }
            dims.push(layer.fan_out);
        }
        Ok(Self { dims, layers, activation, meta: BTreeMap::new() })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn n_inputs(&self) -> usize {
        self.dims[0]
    }

    pub fn n_classes(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn zero_bias(&self) -> bool {
        self.layers.iter().all(|l| l.bias.is_none())
    }

    pub fn n_weights(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len()).sum()
    }

    pub fn weights(&self) -> impl Iterator<Item = &T> {
        self.layers.iter().flat_map(|l| l.weights.iter())
    }

    /// Applies `f` to every weight (not biases).
    pub fn map_weights(&self, mut f: impl FnMut(usize, T) -> T) -> Self {
        let mut out = self.clone();
        let mut k = 0;
        for layer in &mut out.layers {
            for w in &mut layer.weights {
                *w = f(k, *w);
                k += 1;
            }
        }
        out
    }

    /// Output scores (pre-softmax).
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.dims[0] {
            return Err(Error::Dimension { expected: self.dims[0], got: x.len() });
        }
        let last = self.layers.len() - 1;
        let mut a = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.pre_activation(&a);
            if l < last {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            a = z;
        }
        Ok(a)
    }

    pub fn predict(&self, x: &[T]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }
}

pub fn softmax<T: Real>(scores: &[T]) -> Vec<T> {
    let m = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = scores.iter().map(|&s| (s - m).exp()).collect();
    let total: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// `-sum(onehot * log(softmax(scores)))` with probabilities clamped to `[1e-12, 1]`.
pub fn cross_entropy<T: Real>(scores: &[T], label: usize) -> T {
    let p = softmax(scores)[label];
    -p.max(T::of(1e-12)).min(T::one()).ln()
}
