use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::lfsr::{Lfsr11, LFSR_PERIOD};
use super::neuron::{fixed_if_layer_step, FixedIfNeuron, WeightRom};
use super::word::{Lzc, SpikeWord};
use crate::error::{param, Error, Result};
use crate::mlp::MlpModel;
use crate::num::{argmax, Real};
use crate::rng;
use crate::robustness::HW_FORMAT;
use crate::snn::{check_convertible, SnnRunStats};
use crate::tespar::FeatureVector;

/// Accumulator range expressed in weight units, for matching the reference
/// engine's membrane clamp.
pub const ACC_CLAMP: (f64, f64) = (i16::MIN as f64 / 64.0, i16::MAX as f64 / 64.0);

/// Input comparator between the 11-bit feature code `q` and the LFSR state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    /// `q >= state`: lane rate is exactly `q / 2047` per LFSR period.
    #[default]
    GreaterEqual,
    /// `q > state`: rate `(q - 1) / 2047`, never firing for `q <= 1`.
    Greater,
}

impl Comparator {
    #[inline]
    pub fn fires(self, q: u16, state: u16) -> bool {
        match self {
            Comparator::GreaterEqual => q >= state,
            Comparator::Greater => q > state,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HwConfig {
    pub n_steps: usize,
    /// Threshold in weight units; must be a multiple of the weight step.
    pub v_t: f64,
    pub comparator: Comparator,
    /// Derives the lane seeds unless `lane_seeds` is given.
    pub seed: u64,
    pub lane_seeds: Option<Vec<u16>>,
    pub record_trace: bool,
}

impl Default for HwConfig {
    fn default() -> Self {
        Self {
            n_steps: 100,
            v_t: 1.0,
            comparator: Comparator::GreaterEqual,
            seed: 0,
            lane_seeds: None,
            record_trace: false,
        }
    }
}

impl HwConfig {
    pub fn threshold_code(&self) -> Result<i16> {
        let c = self.v_t / HW_FORMAT.step();
        if !(c.fract() == 0.0 && c > 0.0 && c <= i16::MAX as f64) {
            return param(format!("threshold {} is not a positive multiple of {}", self.v_t, HW_FORMAT.step()));
        }
        Ok(c as i16)
    }

    pub fn lfsrs(&self, lanes: usize) -> Result<Vec<Lfsr11>> {
        match &self.lane_seeds {
            Some(s) if s.len() != lanes => Err(Error::Dimension { expected: lanes, got: s.len() }),
            Some(s) => s.iter().map(|&v| Lfsr11::new(v)).collect(),
            None => lane_lfsrs(self.seed, lanes),
        }
    }
}

/// Distinct nonzero lane seeds derived from one master seed.
pub fn lane_lfsrs(seed: u64, lanes: usize) -> Result<Vec<Lfsr11>> {
    if lanes > LFSR_PERIOD {
        return param("more lanes than distinct LFSR states");
    }
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(lanes);
    for i in 0..lanes {
        let mut s = (rng::derive(seed, &[0x1F5, i as u64]) % LFSR_PERIOD as u64) as u16 + 1;
        while !used.insert(s) {
            s = s % LFSR_PERIOD as u16 + 1;
        }
        out.push(Lfsr11::new(s)?);
    }
    Ok(out)
}

/// Warnings for lanes sharing a seed (their spike trains are identical).
pub fn seed_warnings(lfsrs: &[Lfsr11]) -> Vec<String> {
    let mut seen = std::collections::BTreeMap::new();
    let mut out = Vec::new();
    for (i, l) in lfsrs.iter().enumerate() {
        if let Some(j) = seen.insert(l.state(), i) {
            out.push(format!("lanes {j} and {i} share LFSR state {:#05x}; their spikes are correlated", l.state()));
        }
    }
    out
}

/// 11-bit codes `round(fv / max(fv) * 2047)`, computed in integers.
pub fn fv_codes(fv: &FeatureVector) -> Vec<u16> {
    let m = fv.max() as u64;
    if m == 0 {
        return vec![0; fv.len()];
    }
    fv.values.iter().map(|&v| ((2 * v as u64 * LFSR_PERIOD as u64 + m) / (2 * m)) as u16).collect()
}

fn encode_codes(codes: &[u16], lfsrs: &mut [Lfsr11], cmp: Comparator) -> Result<SpikeWord> {
    if codes.len() != lfsrs.len() {
        return Err(Error::Dimension { expected: codes.len(), got: lfsrs.len() });
    }
    let mut w = SpikeWord::zeros(codes.len());
    for (i, (&q, l)) in codes.iter().zip(lfsrs.iter_mut()).enumerate() {
        if cmp.fires(q, l.state()) {
            w.set(i, true);
        }
        l.advance();
    }
    Ok(w)
}

/// Compares every lane against its LFSR, then advances all LFSRs once.
pub fn hw_encode_spikes(fv: &FeatureVector, lfsrs: &mut [Lfsr11], cmp: Comparator) -> Result<SpikeWord> {
    encode_codes(&fv_codes(fv), lfsrs, cmp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HwRun {
    pub stats: SnnRunStats,
    /// `[step][layer]` words, input first; empty unless requested.
    pub trace: Vec<Vec<SpikeWord>>,
    pub warnings: Vec<String>,
}

fn roms<T: Real>(model: &MlpModel<T>) -> Result<Vec<WeightRom>> {
    check_convertible(model)?;
    model.layers().iter().map(|l| WeightRom::from_layer(l, HW_FORMAT)).collect()
}

fn run_words(roms: &[WeightRom], cfg: &HwConfig, mut source: impl FnMut(usize) -> Result<SpikeWord>) -> Result<HwRun> {
    if cfg.n_steps == 0 {
        return param("n_steps must be at least 1");
    }
    let threshold = cfg.threshold_code()?;
    let mut sizes = vec![roms[0].fan_in()];
    sizes.extend(roms.iter().map(WeightRom::fan_out));
    let n_out = *sizes.last().unwrap();
    let mut arrays: Vec<Vec<FixedIfNeuron>> =
        roms.iter().map(|r| vec![FixedIfNeuron::default(); r.fan_out()]).collect();
    let mut stats = SnnRunStats {
        layer_sizes: sizes.clone(),
        n_steps: cfg.n_steps,
        spikes_per_layer: vec![0; sizes.len()],
        step_counts: Vec::with_capacity(cfg.n_steps),
        output_steps: Vec::with_capacity(cfg.n_steps),
        output_counts: vec![0; n_out],
        predicted: 0,
        low_confidence: false,
        trace: None,
    };
    let mut trace = Vec::new();
    for step in 0..cfg.n_steps {
        let input = source(step)?;
        if input.width() != sizes[0] {
            return Err(Error::Dimension { expected: sizes[0], got: input.width() });
        }
        let mut words = vec![input];
        for (rom, neurons) in roms.iter().zip(arrays.iter_mut()) {
            let out = fixed_if_layer_step(neurons, Lzc::new(words.last().unwrap()), rom, threshold)?;
            words.push(out);
        }
        let counts: Vec<u32> = words.iter().map(SpikeWord::popcount).collect();
        for (t, &c) in stats.spikes_per_layer.iter_mut().zip(&counts) {
            *t += c as u64;
        }
        let out = words.last().unwrap();
        let flags: Vec<u8> = (0..n_out).map(|k| out.get(k) as u8).collect();
        for (t, &f) in stats.output_counts.iter_mut().zip(&flags) {
            *t += f as u64;
        }
        stats.output_steps.push(flags);
        stats.step_counts.push(counts);
        if cfg.record_trace {
            trace.push(words);
        }
    }
    stats.predicted = argmax(&stats.output_counts);
    let top = stats.output_counts[stats.predicted];
    stats.low_confidence = stats.output_counts.iter().filter(|&&c| c == top).count() > 1;
    Ok(HwRun { stats, trace, warnings: Vec::new() })
}

/// Full datapath: LFSR encoding, address scanning, fixed-point IF layers.
pub fn hw_run<T: Real>(fv: &FeatureVector, model: &MlpModel<T>, cfg: &HwConfig) -> Result<HwRun> {
    let roms = roms(model)?;
    if fv.len() != roms[0].fan_in() {
        return Err(Error::Dimension { expected: roms[0].fan_in(), got: fv.len() });
    }
    let codes = fv_codes(fv);
    let mut lfsrs = cfg.lfsrs(codes.len())?;
    let warnings = seed_warnings(&lfsrs);
    let mut run = run_words(&roms, cfg, |_| encode_codes(&codes, &mut lfsrs, cfg.comparator))?;
    run.warnings = warnings;
    Ok(run)
}

pub fn hw_infer<T: Real>(fv: &FeatureVector, model: &MlpModel<T>, cfg: &HwConfig) -> Result<SnnRunStats> {
    Ok(hw_run(fv, model, cfg)?.stats)
}

/// Bypasses the LFSRs with externally supplied input words.
pub fn hw_infer_injected<T: Real>(words: &[SpikeWord], model: &MlpModel<T>, cfg: &HwConfig) -> Result<HwRun> {
    if words.len() != cfg.n_steps {
        return Err(Error::Dimension { expected: cfg.n_steps, got: words.len() });
    }
    let roms = roms(model)?;
    run_words(&roms, cfg, |step| Ok(words[step].clone()))
}

/// One line per step: step index then each layer's word in hex.
pub fn trace_hex(trace: &[Vec<SpikeWord>]) -> String {
    let mut s = String::new();
    for (step, words) in trace.iter().enumerate() {
        let _ = write!(s, "{step}");
        for w in words {
            let _ = write!(s, " {}", w.to_hex());
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Activation, Layer};

    #[test]
    fn codes_round_to_nearest() {
        let fv = FeatureVector::from_counts(vec![0, 1, 2, 4]);
        // 1/4*2047 = 511.75 -> 512, 2/4*2047 = 1023.5 -> 1024.
        assert_eq!(fv_codes(&fv), vec![0, 512, 1024, 2047]);
    }

    #[test]
    fn zero_feature_never_fires() {
        let fv = FeatureVector::from_counts(vec![0; 50]);
        let mut l = lane_lfsrs(3, 50).unwrap();
        for _ in 0..LFSR_PERIOD {
            assert!(hw_encode_spikes(&fv, &mut l, Comparator::GreaterEqual).unwrap().is_zero());
        }
    }

    #[test]
    fn lane_seeds_distinct() {
        let l = lane_lfsrs(11, 50).unwrap();
        assert!(seed_warnings(&l).is_empty());
        let dup = vec![Lfsr11::new(5).unwrap(); 2];
        assert_eq!(seed_warnings(&dup).len(), 1);
    }

    #[test]
    fn rejects_unquantised_weights() {
        let l = Layer { fan_in: 1, fan_out: 1, weights: vec![0.3f64], bias: None };
        let m = MlpModel::from_layers(vec![l.clone(), l], Activation::Relu).unwrap();
        let fv = FeatureVector::from_counts(vec![1]);
        assert!(matches!(hw_infer(&fv, &m, &HwConfig::default()), Err(Error::Conversion(_))));
    }

    #[test]
    fn zero_input_predicts_class_zero() {
        let m = crate::robustness::quantize_model(
            &MlpModel::<f64>::init(&[50, 80, 2], true, Activation::Relu, 2).unwrap(),
            HW_FORMAT,
            Default::default(),
        );
        let st = hw_infer(&FeatureVector::from_counts(vec![0; 50]), &m, &HwConfig::default()).unwrap();
        assert_eq!(st.total_spikes(), 0);
        assert_eq!(st.predicted, 0);
    }
}
