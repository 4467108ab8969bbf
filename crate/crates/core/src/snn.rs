//! Rate-coded spiking inference on converted MLP weights.
//!
//! Inputs are Bernoulli spike trains with per-step probability
//! `min(dt * r_max * x, 1)`; every other layer is a pure integrate-and-fire
//! population driven synchronously within one time step.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::mlp::{Activation, MlpModel, Sample};
use crate::num::{argmax, Real};
use crate::rng;
use crate::tespar::FeatureVector;

const ENCODE_STREAM: u64 = 0x5E1C;
const SAMPLE_STREAM: u64 = 0x5A4D;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnnConfig {
    pub r_max_hz: f64,
    /// Threshold in weight units.
    pub v_t: f64,
    pub dt_s: f64,
    pub n_steps: usize,
    pub v_res: f64,
    pub seed: u64,
    /// Saturating membrane range applied after every single weight addition.
    /// `None` means unbounded; the hardware model uses its accumulator range.
    pub clamp: Option<(f64, f64)>,
    /// Keep the full per-step spike trains in the stats.
    pub record_trace: bool,
}

impl Default for SnnConfig {
    fn default() -> Self {
        Self {
            r_max_hz: 1000.0,
            v_t: 1.0,
            dt_s: 0.001,
            n_steps: 100,
            v_res: 0.0,
            seed: 0,
            clamp: None,
            record_trace: false,
        }
    }
}

impl SnnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_max_hz > 0.0 && self.r_max_hz.is_finite()) {
            return param("r_max_hz must be positive");
        }
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return param("dt_s must be positive");
        }
        if self.n_steps == 0 {
            return param("n_steps must be at least 1");
        }
        if !(self.v_t > 0.0) {
            return param("v_t must be positive");
        }
        if let Some((lo, hi)) = self.clamp {
            if !(lo < hi) || !(lo..=hi).contains(&self.v_res) {
                return param("membrane clamp must be a proper range containing v_res");
            }
        }
        Ok(())
    }

    /// Spike-probability gain `c = dt * r_max`.
    pub fn gain(&self) -> f64 {
        self.dt_s * self.r_max_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState<T> {
    pub v_mem: T,
    pub spiked: bool,
}

impl<T: Real> NeuronState<T> {
    pub fn rest(v_res: T) -> Self {
        Self { v_mem: v_res, spiked: false }
    }
}

/// One integrate-and-fire update: add the weights of every active input in
/// index order, then fire and reset if strictly above threshold.
pub fn if_step<T: Real>(
    state: NeuronState<T>,
    incoming: &[bool],
    weights: &[T],
    cfg: &SnnConfig,
) -> Result<(NeuronState<T>, bool)> {
    if incoming.len() != weights.len() {
        return Err(Error::Dimension { expected: weights.len(), got: incoming.len() });
    }
    let clamp = cfg.clamp.map(|(lo, hi)| (T::of(lo), T::of(hi)));
    let mut v = state.v_mem;
    for (_, &w) in incoming.iter().zip(weights).filter(|(s, _)| **s) {
        v = integrate(v, w, clamp);
    }
    let fired = v > T::of(cfg.v_t);
    if fired {
        v = T::of(cfg.v_res);
    }
    Ok((NeuronState { v_mem: v, spiked: fired }, fired))
}

#[inline]
fn integrate<T: Real>(v: T, w: T, clamp: Option<(T, T)>) -> T {
    let s = v + w;
    match clamp {
        Some((lo, hi)) => s.max(lo).min(hi),
        None => s,
    }
}

/// Input spikes for one step. `x` must already be scaled into `[0, 1]`.
pub fn encode_spikes<T: Real>(x: &[T], gain: f64, seed: u64, step: usize) -> Vec<bool> {
    x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let p = (gain * xi.as_f64()).min(1.0);
            p > 0.0 && rng::unit(seed, &[ENCODE_STREAM, step as u64, i as u64]) < p
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnnRunStats {
    /// Neuron count per layer, input first.
    pub layer_sizes: Vec<usize>,
    pub n_steps: usize,
    /// Total spikes per layer over the run.
    pub spikes_per_layer: Vec<u64>,
    /// `[step][layer]` spike counts.
    pub step_counts: Vec<Vec<u32>>,
    /// `[step][class]` output spikes.
    pub output_steps: Vec<Vec<u8>>,
    /// Output spikes per class over the run.
    pub output_counts: Vec<u64>,
    pub predicted: usize,
    /// More than one class shares the top spike count.
    pub low_confidence: bool,
    /// `[step][layer][neuron]`, only when requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<Vec<Vec<Vec<bool>>>>,
}

impl SnnRunStats {
    pub fn total_spikes(&self) -> u64 {
        self.spikes_per_layer.iter().sum()
    }

    /// Adds performed by the synapses: every spike of a non-output layer
    /// fans out to the whole next layer.
    pub fn synaptic_adds(&self) -> u64 {
        self.spikes_per_layer.iter().zip(self.layer_sizes.iter().skip(1)).map(|(&s, &n)| s * n as u64).sum()
    }
}

pub fn check_convertible<T: Real>(model: &MlpModel<T>) -> Result<()> {
    if !model.zero_bias() {
        return Err(Error::Conversion("biases present".into()));
    }
    if model.activation != Activation::Relu {
        return Err(Error::Conversion(format!("activation {} is not relu", model.activation.name())));
    }
    Ok(())
}

/// Runs the network on input spike words produced by `source(step)`.
pub fn run_with_source<T: Real>(
    model: &MlpModel<T>,
    cfg: &SnnConfig,
    mut source: impl FnMut(usize) -> Vec<bool>,
) -> Result<SnnRunStats> {
    check_convertible(model)?;
    cfg.validate()?;
    let dims = model.dims().to_vec();
    let clamp = cfg.clamp.map(|(lo, hi)| (T::of(lo), T::of(hi)));
    let v_t = T::of(cfg.v_t);
    let v_res = T::of(cfg.v_res);
    let mut v: Vec<Vec<T>> = dims[1..].iter().map(|&n| vec![v_res; n]).collect();
    let mut stats = SnnRunStats {
        layer_sizes: dims.clone(),
        n_steps: cfg.n_steps,
        spikes_per_layer: vec![0; dims.len()],
        step_counts: Vec::with_capacity(cfg.n_steps),
        output_steps: Vec::with_capacity(cfg.n_steps),
        output_counts: vec![0; model.n_classes()],
        predicted: 0,
        low_confidence: false,
        trace: cfg.record_trace.then(Vec::new),
    };
    for step in 0..cfg.n_steps {
        let input = source(step);
        if input.len() != dims[0] {
            return Err(Error::Dimension { expected: dims[0], got: input.len() });
        }
        let mut counts = Vec::with_capacity(dims.len());
        counts.push(input.iter().filter(|&&s| s).count() as u32);
        let mut trace_step = cfg.record_trace.then(|| vec![input.clone()]);
        let mut spikes = input;
        for (l, layer) in model.layers().iter().enumerate() {
            let mem = &mut v[l];
            for (i, _) in spikes.iter().enumerate().filter(|(_, &s)| s) {
                for (vj, &w) in mem.iter_mut().zip(layer.row(i)) {
                    *vj = integrate(*vj, w, clamp);
                }
            }
            let mut out = vec![false; layer.fan_out];
            for (vj, o) in mem.iter_mut().zip(out.iter_mut()) {
                if *vj > v_t {
                    *o = true;
                    *vj = v_res;
                }
            }
            counts.push(out.iter().filter(|&&s| s).count() as u32);
            if let Some(t) = trace_step.as_mut() {
                t.push(out.clone());
            }
            spikes = out;
        }
        for (total, &c) in stats.spikes_per_layer.iter_mut().zip(&counts) {
            *total += c as u64;
        }
        for (k, &s) in spikes.iter().enumerate() {
            stats.output_counts[k] += s as u64;
        }
        stats.output_steps.push(spikes.iter().map(|&s| s as u8).collect());
        stats.step_counts.push(counts);
        if let (Some(t), Some(ts)) = (stats.trace.as_mut(), trace_step) {
            t.push(ts);
        }
    }
    stats.predicted = argmax(&stats.output_counts);
    let top = stats.output_counts[stats.predicted];
    stats.low_confidence = stats.output_counts.iter().filter(|&&c| c == top).count() > 1;
    Ok(stats)
}

/// Runs on an input already scaled into `[0, 1]`.
pub fn run_snn_scaled<T: Real>(model: &MlpModel<T>, x: &[T], cfg: &SnnConfig) -> Result<SnnRunStats> {
    if x.len() != model.n_inputs() {
        return Err(Error::Dimension { expected: model.n_inputs(), got: x.len() });
    }
    let gain = cfg.gain();
    run_with_source(model, cfg, |step| encode_spikes(x, gain, cfg.seed, step))
}

/// Runs on a raw feature vector, max-normalised before encoding.
pub fn run_snn<T: Real>(model: &MlpModel<T>, fv: &FeatureVector, cfg: &SnnConfig) -> Result<SnnRunStats> {
    run_snn_scaled(model, &fv.normalized::<T>(), cfg)
}

/// Runs on externally supplied input spike words, one per step.
pub fn run_snn_injected<T: Real>(model: &MlpModel<T>, words: &[Vec<bool>], cfg: &SnnConfig) -> Result<SnnRunStats> {
    if words.len() != cfg.n_steps {
        return Err(Error::Dimension { expected: cfg.n_steps, got: words.len() });
    }
    run_with_source(model, cfg, |step| words[step].clone())
}

/// Seed used for sample `index` of an evaluation set.
pub fn sample_seed(seed: u64, index: usize) -> u64 {
    rng::derive(seed, &[SAMPLE_STREAM, index as u64])
}

/// Fraction of samples whose spike-count prediction matches the label.
/// Inputs must already be scaled into `[0, 1]`.
pub fn evaluate_snn<T: Real>(model: &MlpModel<T>, samples: &[Sample<T>], cfg: &SnnConfig) -> Result<f64> {
    if samples.is_empty() {
        return param("empty evaluation set");
    }
    let mut correct = 0usize;
    for (k, s) in samples.iter().enumerate() {
        let c = SnnConfig { seed: sample_seed(cfg.seed, k), record_trace: false, ..cfg.clone() };
        correct += (run_snn_scaled(model, &s.x, &c)?.predicted == s.label) as usize;
    }
    Ok(correct as f64 / samples.len() as f64)
}

pub const DEFAULT_R_GRID: [f64; 6] = [200.0, 500.0, 1000.0, 2000.0, 3000.0, 4000.0];
pub const DEFAULT_VT_GRID: [f64; 7] = [0.25, 0.5, 1.0, 2.0, 4.0, 10.0, 20.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RvGrid {
    pub r_hz: Vec<f64>,
    pub v_t: Vec<f64>,
    /// `[r][v_t]`
    pub accuracy: Vec<Vec<f64>>,
}

impl RvGrid {
    pub fn get(&self, r_hz: f64, v_t: f64) -> Option<f64> {
        let i = self.r_hz.iter().position(|&r| r == r_hz)?;
        let j = self.v_t.iter().position(|&v| v == v_t)?;
        Some(self.accuracy[i][j])
    }

    /// Best threshold for a given rate.
    pub fn best_vt(&self, r_hz: f64) -> Option<(f64, f64)> {
        let i = self.r_hz.iter().position(|&r| r == r_hz)?;
        let row = &self.accuracy[i];
        let j = argmax(row);
        Some((self.v_t[j], row[j]))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r_hz,v_t,accuracy\n");
        for (i, r) in self.r_hz.iter().enumerate() {
            for (j, v) in self.v_t.iter().enumerate() {
                let _ = writeln!(s, "{r},{v},{:.6}", self.accuracy[i][j]);
            }
        }
        s
    }
}

/// Accuracy over an (input rate, threshold) grid. Every cell sees the same
/// per-sample random streams.
pub fn sweep_rv<T: Real>(
    model: &MlpModel<T>,
    samples: &[Sample<T>],
    r_grid: &[f64],
    vt_grid: &[f64],
    cfg: &SnnConfig,
) -> Result<RvGrid> {
    if r_grid.is_empty() || vt_grid.is_empty() {
        return param("sweep grids must be non-empty");
    }
    let mut accuracy = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let mut row = Vec::with_capacity(vt_grid.len());
        for &vt in vt_grid {
            let c = SnnConfig { r_max_hz: r, v_t: vt, ..cfg.clone() };
            row.push(evaluate_snn(model, samples, &c)?);
        }
        accuracy.push(row);
    }
    Ok(RvGrid { r_hz: r_grid.to_vec(), v_t: vt_grid.to_vec(), accuracy })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeSummary {
    pub totals: Vec<u64>,
    pub grand_total: u64,
    /// Mean spikes per neuron per step, per layer.
    pub activity: Vec<f64>,
}

pub fn spike_stats(stats: &SnnRunStats) -> SpikeSummary {
    summarize(&stats.spikes_per_layer, &stats.layer_sizes, stats.n_steps)
}

/// Summary from bare per-layer totals.
pub fn summarize(totals: &[u64], layer_sizes: &[usize], n_steps: usize) -> SpikeSummary {
    let activity = totals
        .iter()
        .zip(layer_sizes)
        .map(|(&t, &n)| if n == 0 || n_steps == 0 { 0.0 } else { t as f64 / (n * n_steps) as f64 })
        .collect();
    SpikeSummary { totals: totals.to_vec(), grand_total: totals.iter().sum(), activity }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::Layer;

    fn chain(w1: f64, w2: f64) -> MlpModel<f64> {
        let l1 = Layer { fan_in: 1, fan_out: 1, weights: vec![w1], bias: None };
        let l2 = Layer { fan_in: 1, fan_out: 1, weights: vec![w2], bias: None };
        MlpModel::from_layers(vec![l1, l2], Activation::Relu).unwrap()
    }

    #[test]
    fn if_step_examples() {
        let cfg = SnnConfig::default();
        let s0 = NeuronState::rest(0.0);
        let (s, fired) = if_step(s0, &[true, true], &[0.6, 0.5], &cfg).unwrap();
        assert!(fired && s.v_mem == 0.0);

        let (s, fired) = if_step(s0, &[true], &[0.6], &cfg).unwrap();
        assert!(!fired && s.v_mem == 0.6);
        let (s, fired) = if_step(s, &[true], &[0.6], &cfg).unwrap();
        assert!(fired && s.v_mem == 0.0);

        let held = NeuronState { v_mem: 0.3, spiked: false };
        assert_eq!(if_step(held, &[false, false], &[0.6, 0.5], &cfg).unwrap().0, held);
    }

    #[test]
    fn clamp_saturates_each_add() {
        let cfg = SnnConfig { clamp: Some((-1.0, 1.0)), v_t: 5.0, ..Default::default() };
        let (s, _) = if_step(NeuronState::rest(0.0), &[true, true, true], &[0.8, 0.8, -0.5], &cfg).unwrap();
        assert_eq!(s.v_mem, 0.5);
    }

    #[test]
    fn hand_simulated_chain() {
        let cfg = SnnConfig::default();
        let st = run_snn_scaled(&chain(2.0, 2.0), &[1.0], &cfg).unwrap();
        assert_eq!(st.spikes_per_layer, vec![100, 100, 100]);
        assert_eq!(st.output_counts, vec![100]);
    }

    #[test]
    fn zero_input_is_silent() {
        let m = MlpModel::<f64>::init(&[50, 80, 2], true, Activation::Relu, 3).unwrap();
        let fv = FeatureVector { values: vec![0; 50], d_max: 10, s_max: 5 };
        let st = run_snn(&m, &fv, &SnnConfig::default()).unwrap();
        assert_eq!(st.total_spikes(), 0);
        assert_eq!(st.predicted, 0);
        assert!(st.low_confidence);
        assert_eq!(spike_stats(&st).totals, vec![0, 0, 0]);
    }

    #[test]
    fn saturated_probability_spikes_every_step() {
        for step in 0..200 {
            assert_eq!(encode_spikes(&[1.0f64, 0.5, 0.0], 2.0, 9, step), vec![true, true, false]);
        }
    }

    #[test]
    fn rejects_unconvertible_models() {
        let biased = MlpModel::<f64>::zeros(&[2, 2], false, Activation::Relu).unwrap();
        assert!(matches!(run_snn_scaled(&biased, &[0.0, 0.0], &SnnConfig::default()), Err(Error::Conversion(_))));
        let tanh = MlpModel::<f64>::zeros(&[2, 2], true, Activation::Tanh).unwrap();
        assert!(matches!(run_snn_scaled(&tanh, &[0.0, 0.0], &SnnConfig::default()), Err(Error::Conversion(_))));
    }

    #[test]
    fn activity_fractions() {
        let s = summarize(&[343, 330, 31], &[50, 80, 2], 100);
        assert_eq!(s.grand_total, 704);
        assert!((s.activity[0] - 0.0686).abs() < 1e-12);
        assert!((s.activity[1] - 0.04125).abs() < 1e-12);
    }

    #[test]
    fn csv_shape() {
        let g = RvGrid { r_hz: vec![1000.0], v_t: vec![1.0, 2.0], accuracy: vec![vec![0.5, 0.25]] };
        assert_eq!(g.to_csv(), "r_hz,v_t,accuracy\n1000,1,0.500000\n1000,2,0.250000\n");
        assert_eq!(g.best_vt(1000.0), Some((1.0, 0.5)));
    }
}
