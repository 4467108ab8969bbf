use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{cross_entropy, softmax, Layer, MlpModel};
use super::Activation;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::rng;

/// A feature vector (already scaled to reals) with its class id.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub x: Vec<T>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lr: f64,
    /// Inverted-dropout rate on hidden activations.
    pub dropout_p: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            dropout_p: 0.5,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Param("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::Param("dropout must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Param("batch size and epoch count must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Snapshot with the best validation accuracy.
    pub model: MlpModel<T>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub curve: Vec<EpochRecord>,
}

/// Per-layer gradients with the same shapes as the model.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Option<Vec<T>>>,
}

impl<T: Real> MlpModel<T> {
    /// Mean cross-entropy over the batch and its gradient.
    ///
    /// `mask(sample, layer, unit)` multiplies hidden activations; pass `None`
    /// for a deterministic pass.
    pub fn batch_gradients(
        &self,
        batch: &[&Sample<T>],
        mask: Option<&dyn Fn(usize, usize, usize) -> T>,
    ) -> Result<(T, Gradients<T>)> {
        let layers = self.layers();
        let n_layers = layers.len();
        let mut grads = Gradients {
            weights: layers.iter().map(|l| vec![T::zero(); l.weights.len()]).collect(),
            biases: layers.iter().map(|l| l.bias.as_ref().map(|b| vec![T::zero(); b.len()])).collect(),
        };
        if batch.is_empty() {
            return Ok((T::zero(), grads));
        }
        let inv_n = T::one() / T::of_usize(batch.len());
        let mut loss = T::zero();
        for (s_idx, sample) in batch.iter().enumerate() {
            if sample.x.len() != self.n_inputs() {
                return Err(Error::Dimension { expected: self.n_inputs(), got: sample.x.len() });
            }
            // Forward, keeping inputs to each layer and hidden pre-activations.
            let mut inputs: Vec<Vec<T>> = Vec::with_capacity(n_layers);
            let mut pre: Vec<Vec<T>> = Vec::with_capacity(n_layers);
            let mut a = sample.x.clone();
            for (l, layer) in layers.iter().enumerate() {
                let z = layer.pre_activation(&a);
                inputs.push(std::mem::take(&mut a));
                a = if l + 1 < n_layers {
                    z.iter()
                        .enumerate()
                        .map(|(j, &v)| {
                            let m = mask.map_or(T::one(), |f| f(s_idx, l, j));
                            self.activation.apply(v) * m
                        })
                        .collect()
                } else {
                    z.clone()
                };
                pre.push(z);
            }
            loss += cross_entropy(&a, sample.label) * inv_n;

            let mut delta = softmax(&a);
            delta[sample.label] -= T::one();
            delta.iter_mut().for_each(|d| *d *= inv_n);

            for l in (0..n_layers).rev() {
                let layer = &layers[l];
                let gw = &mut grads.weights[l];
                for (i, &xi) in inputs[l].iter().enumerate() {
                    if xi == T::zero() {
                        continue;
                    }
                    for (j, &dj) in delta.iter().enumerate() {
                        gw[i * layer.fan_out + j] += xi * dj;
                    }
                }
                if let Some(gb) = &mut grads.biases[l] {
                    gb.iter_mut().zip(&delta).for_each(|(g, &d)| *g += d);
                }
                if l == 0 {
                    break;
                }
                let prev_pre = &pre[l - 1];
                delta = (0..layer.fan_in)
                    .map(|i| {
                        let back: T = layer.row(i).iter().zip(&delta).map(|(&w, &d)| w * d).sum();
                        let m = mask.map_or(T::one(), |f| f(s_idx, l - 1, i));
                        back * self.activation.derivative(prev_pre[i]) * m
                    })
                    .collect();
            }
        }
        Ok((loss, grads))
    }
}

struct Adam<T> {
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    mb: Vec<Option<Vec<T>>>,
    vb: Vec<Option<Vec<T>>>,
    t: i32,
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
}

impl<T: Real> Adam<T> {
    fn new(model: &MlpModel<T>, cfg: &TrainConfig) -> Self {
        let zeros = |l: &Layer<T>| vec![T::zero(); l.weights.len()];
        let zb = |l: &Layer<T>| l.bias.as_ref().map(|b| vec![T::zero(); b.len()]);
        Self {
            m: model.layers().iter().map(zeros).collect(),
            v: model.layers().iter().map(zeros).collect(),
            mb: model.layers().iter().map(zb).collect(),
            vb: model.layers().iter().map(zb).collect(),
            t: 0,
            lr: T::of(cfg.lr),
            beta1: T::of(cfg.beta1),
            beta2: T::of(cfg.beta2),
            eps: T::of(cfg.eps),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn update(p: &mut [T], g: &[T], m: &mut [T], v: &mut [T], b1: T, b2: T, step: T, eps: T, c2: T) {
        for k in 0..p.len() {
            m[k] = b1 * m[k] + (T::one() - b1) * g[k];
            v[k] = b2 * v[k] + (T::one() - b2) * g[k] * g[k];
            p[k] -= step * m[k] / ((v[k] / c2).sqrt() + eps);
        }
    }

    fn step(&mut self, model: &mut MlpModel<T>, grads: &Gradients<T>) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        let step = self.lr / c1;
        for (l, layer) in model.layers_mut().iter_mut().enumerate() {
            Self::update(
                &mut layer.weights,
                &grads.weights[l],
                &mut self.m[l],
                &mut self.v[l],
                b1,
                b2,
                step,
                self.eps,
                c2,
            );
            if let (Some(b), Some(gb), Some(mb), Some(vb)) =
                (&mut layer.bias, &grads.biases[l], &mut self.mb[l], &mut self.vb[l])
            {
                Self::update(b, gb, mb, vb, b1, b2, step, self.eps, c2);
            }
        }
    }
}

/// Fraction of samples whose arg-max score matches the label.
pub fn evaluate<T: Real>(model: &MlpModel<T>, samples: &[Sample<T>]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Param("cannot evaluate on an empty set".into()));
    }
    let mut correct = 0usize;
    for s in samples {
        if model.predict(&s.x)? == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

/// Trains a fresh zero-bias ReLU model of shape `dims`.
///
/// Mini-batch Adam with inverted dropout on hidden layers. Shuffling and
/// dropout masks are drawn from streams derived from `cfg.seed`, so the result
/// is a pure function of the inputs. Returns the snapshot with the best
/// validation accuracy (train accuracy when `validation` is empty).
pub fn train<T: Real>(
    dims: &[usize],
    train_set: &[Sample<T>],
    validation: &[Sample<T>],
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Param("training split is empty".into()));
    }
    let n_classes = *dims.last().ok_or_else(|| Error::Param("empty dims".into()))?;
    if let Some(s) = train_set.iter().chain(validation).find(|s| s.label >= n_classes) {
        return Err(Error::Param(format!("label {} out of range for {n_classes} classes", s.label)));
    }
    let mut model = MlpModel::<T>::init(dims, true, Activation::Relu, cfg.seed)?;
    let mut adam = Adam::new(&model, cfg);
    let keep = T::of(1.0 / (1.0 - cfg.dropout_p));
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut best = (model.clone(), 0usize, -1.0f64);
    let mut curve = Vec::new();
    let mut since_best = 0usize;
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng::stream(cfg.seed, &[0x5487, epoch as u64]));
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Sample<T>> = chunk.iter().map(|&i| &train_set[i]).collect();
            let key = [0xD40F, epoch as u64, b as u64];
            let drop = |s: usize, l: usize, j: usize| -> T {
                if rng::unit(cfg.seed, &[key[0], key[1], key[2], s as u64, l as u64, j as u64]) < cfg.dropout_p {
                    T::zero()
                } else {
                    keep
                }
            };
            let mask: Option<&dyn Fn(usize, usize, usize) -> T> = if cfg.dropout_p > 0.0 { Some(&drop) } else { None };
            let (loss, grads) = model.batch_gradients(&batch, mask)?;
            epoch_loss += loss.as_f64() * batch.len() as f64;
            adam.step(&mut model, &grads);
        }
        let train_accuracy = evaluate(&model, train_set)?;
        let val_accuracy = if validation.is_empty() { train_accuracy } else { evaluate(&model, validation)? };
        curve.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            train_accuracy,
            val_accuracy,
        });
        if val_accuracy > best.2 {
            best = (model.clone(), epoch, val_accuracy);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    let (mut model, best_epoch, best_val_accuracy) = best;
    model.meta.insert("seed".into(), cfg.seed.to_string());
    model.meta.insert("lr".into(), cfg.lr.to_string());
    model.meta.insert("dropout_p".into(), cfg.dropout_p.to_string());
    model.meta.insert("batch_size".into(), cfg.batch_size.to_string());
    model.meta.insert("best_epoch".into(), best_epoch.to_string());
    model.meta.insert("val_accuracy".into(), best_val_accuracy.to_string());
    Ok(TrainOutcome { model, best_epoch, best_val_accuracy, curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vec<Sample<f64>> {
        // Two clusters in the positive quadrant separated by the diagonal.
        (0..200)
            .map(|i| {
                let u = rng::unit(3, &[i]);
                let v = rng::unit(4, &[i]);
                let label = (i % 2) as usize;
                let (a, b) = if label == 0 { (0.6 + 0.4 * u, 0.4 * v) } else { (0.4 * u, 0.6 + 0.4 * v) };
                Sample { x: vec![a, b], label }
            })
            .collect()
    }

    #[test]
    fn fits_separable_toy_set() {
        let data = toy();
        let cfg = TrainConfig { max_epochs: 50, patience: 50, seed: 5, lr: 0.01, ..Default::default() };
        let out = train(&[2, 16, 2], &data, &[], &cfg).unwrap();
        assert!(evaluate(&out.model, &data).unwrap() >= 0.99);
    }

    #[test]
    fn deterministic_given_seed() {
        let data = toy();
        let cfg = TrainConfig { max_epochs: 5, seed: 11, ..Default::default() };
        let a = train(&[2, 8, 2], &data, &data[..20], &cfg).unwrap();
        let b = train(&[2, 8, 2], &data, &data[..20], &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert!(a.model.zero_bias());
    }

    #[test]
    fn empty_split_rejected() {
        assert!(train::<f64>(&[2, 2], &[], &[], &TrainConfig::default()).is_err());
        assert!(evaluate::<f64>(&MlpModel::zeros(&[2, 2], true, Activation::Relu).unwrap(), &[]).is_err());
    }

    #[test]
    fn constant_predictor_on_balanced_set() {
        let m = MlpModel::<f64>::zeros(&[2, 2], true, Activation::Relu).unwrap();
        assert_eq!(evaluate(&m, &toy()).unwrap(), 0.5);
    }

    #[test]
    fn biased_gradients_match_finite_differences() {
        let mut m = MlpModel::<f64>::init(&[3, 4, 2], false, Activation::Tanh, 2).unwrap();
        for l in m.layers_mut() {
            if let Some(b) = &mut l.bias {
                b.iter_mut().enumerate().for_each(|(j, v)| *v = 0.1 * j as f64 - 0.15);
            }
        }
        let data = [Sample { x: vec![0.2, -0.4, 0.9], label: 1 }, Sample { x: vec![0.5, 0.1, -0.3], label: 0 }];
        let batch: Vec<&Sample<f64>> = data.iter().collect();
        let (_, g) = m.batch_gradients(&batch, None).unwrap();
        let h = 1e-6;
        for l in 0..2 {
            for j in 0..m.layers()[l].fan_out {
                let mut plus = m.clone();
                plus.layers_mut()[l].bias.as_mut().unwrap()[j] += h;
                let mut minus = m.clone();
                minus.layers_mut()[l].bias.as_mut().unwrap()[j] -= h;
                let fd = (plus.batch_gradients(&batch, None).unwrap().0
                    - minus.batch_gradients(&batch, None).unwrap().0)
                    / (2.0 * h);
                let an = g.biases[l].as_ref().unwrap()[j];
                assert!((fd - an).abs() < 1e-7, "layer {l} bias {j}: {fd} vs {an}");
            }
        }
    }
}
