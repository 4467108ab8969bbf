use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{augment_noise, augment_roll, mix, synth_background, synth_footsteps_with, FootstepModel, NoiseKind};
use super::{BACKGROUND, FOOTSTEPS};
use crate::error::{param, Result};
use crate::num::Real;
use crate::rng;
use crate::signal::{AudioWindow, WINDOW_S, WORKING_RATE_HZ};

/// Train/validation/test sizes of the reference corpus (12352 windows).
pub const REFERENCE_SPLIT: [u64; 3] = [9_024, 1_664, 1_664];

/// Everything needed to regenerate one labelled window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    /// Unique across the dataset; doubles as the identity tag for disjointness checks.
    pub id: usize,
    pub label: usize,
    /// Background kind; `None` for imported recordings.
    pub noise: Option<NoiseKind>,
    /// 0 for background-only windows.
    pub walkers: usize,
    pub seed: u64,
    /// Source file for imported recordings.
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledWindow<T> {
    pub window: AudioWindow<T>,
    pub label: usize,
    pub meta: SampleMeta,
}

/// Disjoint train/validation/test partition.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetSplit<S> {
    pub train: Vec<S>,
    pub validation: Vec<S>,
    pub test: Vec<S>,
    /// Adjustments made while balancing (e.g. unequal class counts).
    pub notes: Vec<String>,
}

impl<S> DatasetSplit<S> {
    pub fn parts(&self) -> [(&'static str, &[S]); 3] {
        [("train", &self.train), ("validation", &self.validation), ("test", &self.test)]
    }

    pub fn map<U>(&self, mut f: impl FnMut(&S) -> U) -> DatasetSplit<U> {
        DatasetSplit {
            train: self.train.iter().map(&mut f).collect(),
            validation: self.validation.iter().map(&mut f).collect(),
            test: self.test.iter().map(&mut f).collect(),
            notes: self.notes.clone(),
        }
    }

    pub fn try_map<U>(&self, mut f: impl FnMut(&S) -> Result<U>) -> Result<DatasetSplit<U>> {
        Ok(DatasetSplit {
            train: self.train.iter().map(&mut f).collect::<Result<_>>()?,
            validation: self.validation.iter().map(&mut f).collect::<Result<_>>()?,
            test: self.test.iter().map(&mut f).collect::<Result<_>>()?,
            notes: self.notes.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Synthetic corpus recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub seed: u64,
    /// Windows per class: `[background, footsteps]`.
    pub per_class: [usize; 2],
    pub noise_kinds: Vec<NoiseKind>,
    /// Inclusive walker-count range for footstep windows.
    pub walkers: (usize, usize),
    /// Footstep-to-background RMS ratio range in dB.
    pub snr_db: (f64, f64),
    /// Additive white-noise augmentation range in dB; `None` disables it.
    pub aug_noise_snr_db: Option<(f64, f64)>,
    /// Apply a random circular roll to every window.
    pub roll: bool,
    pub sample_rate_hz: u32,
    pub duration_s: f64,
    /// Split proportions, applied by largest remainder.
    pub split_weights: [u64; 3],
    pub footsteps: FootstepModel,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            per_class: [6_176, 6_176],
            noise_kinds: NoiseKind::ALL.to_vec(),
            walkers: (1, 3),
            snr_db: (0.0, 10.0),
            aug_noise_snr_db: Some((20.0, 40.0)),
            roll: true,
            sample_rate_hz: WORKING_RATE_HZ,
            duration_s: WINDOW_S,
            split_weights: REFERENCE_SPLIT,
            footsteps: FootstepModel::default(),
        }
    }
}

impl SynthSpec {
    pub fn with_total(total: usize, seed: u64) -> Self {
        Self { seed, per_class: [total / 2, total - total / 2], ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_class.contains(&0) {
            return param("per-class counts must be positive");
        }
        if self.noise_kinds.is_empty() {
            return param("need at least one noise kind");
        }
        let (wl, wh) = self.walkers;
        if !(1 <= wl && wl <= wh && wh <= 3) {
            return param(format!("walker range {wl}..={wh} outside 1..=3"));
        }
        if !(self.snr_db.0 <= self.snr_db.1) {
            return param("snr range is inverted");
        }
        if let Some((lo, hi)) = self.aug_noise_snr_db {
            if !(lo <= hi) {
                return param("augmentation snr range is inverted");
            }
        }
        if self.split_weights.iter().sum::<u64>() == 0 {
            return param("split weights sum to zero");
        }
        Ok(())
    }
}

/// Splits `total` in proportion to `weights` by the largest-remainder method.
/// Equal remainders favour the later part.
pub fn allocate_largest_remainder(total: usize, weights: &[u64]) -> Vec<usize> {
    let denom: u128 = weights.iter().map(|&w| w as u128).sum();
    if denom == 0 {
        return vec![0; weights.len()];
    }
    let mut out: Vec<usize> = Vec::with_capacity(weights.len());
    let mut rems: Vec<(u128, usize)> = Vec::with_capacity(weights.len());
    for (k, &w) in weights.iter().enumerate() {
        let num = total as u128 * w as u128;
        out.push((num / denom) as usize);
        rems.push((num % denom, k));
    }
    let short = total - out.iter().sum::<usize>();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
    for &(_, k) in rems.iter().take(short) {
        out[k] += 1;
    }
    out
}

/// Assigns identities, labels, noise kinds and walker counts to every window
/// and partitions them. Kinds and walker counts cycle within each class so
/// every contiguous block (hence every split) is stratified within one sample.
pub fn plan_dataset(spec: &SynthSpec) -> Result<DatasetSplit<SampleMeta>> {
    spec.validate()?;
    let mut notes = Vec::new();
    let per_class = spec.per_class[0].min(spec.per_class[1]);
    if spec.per_class[0] != spec.per_class[1] {
        notes.push(format!("class counts {:?} unequal; using {per_class} per class for balance", spec.per_class));
    }
    let total = 2 * per_class;
    let sizes = allocate_largest_remainder(total, &spec.split_weights);

    // Class-0 count per split: floor(size / 2), with half of the odd-sized
    // splits taking the spare sample so class totals stay equal.
    let mut c0: Vec<usize> = sizes.iter().map(|s| s / 2).collect();
    let mut spare = per_class - c0.iter().sum::<usize>();
    for (k, s) in sizes.iter().enumerate() {
        if spare > 0 && s % 2 == 1 {
            c0[k] += 1;
            spare -= 1;
        }
    }

    let kinds = &spec.noise_kinds;
    let (wl, wh) = spec.walkers;
    let n_walker = wh - wl + 1;
    let make = |label: usize, j: usize| {
        let id = 2 * j + label;
        let walkers = if label == FOOTSTEPS { wl + (j / kinds.len()) % n_walker } else { 0 };
        SampleMeta {
            id,
            label,
            noise: Some(kinds[j % kinds.len()]),
            walkers,
            seed: rng::derive(spec.seed, &[id as u64]),
            source: None,
        }
    };
    let mut next = [0usize; 2];
    let mut parts: Vec<Vec<SampleMeta>> = Vec::with_capacity(3);
    for (k, &size) in sizes.iter().enumerate() {
        let counts = [c0[k], size - c0[k]];
        let mut part = Vec::with_capacity(size);
        for label in [BACKGROUND, FOOTSTEPS] {
            for _ in 0..counts[label] {
                part.push(make(label, next[label]));
                next[label] += 1;
            }
        }
        part.sort_by_key(|m| m.id);
        parts.push(part);
    }
    let test = parts.pop().unwrap();
    let validation = parts.pop().unwrap();
    let train = parts.pop().unwrap();
    Ok(DatasetSplit { train, validation, test, notes })
}

/// Synthesises the window described by `meta`. Pure in `(spec, meta)`.
pub fn render_sample<T: Real>(spec: &SynthSpec, meta: &SampleMeta) -> Result<LabeledWindow<T>> {
    let (dur, rate) = (spec.duration_s, spec.sample_rate_hz);
    let mut r = rng::stream(meta.seed, &[0x5A]);
    let kind = meta.noise.ok_or_else(|| crate::Error::Param(format!("sample {} has no noise kind", meta.id)))?;
    let bg = synth_background::<T>(kind, dur, rate, rng::derive(meta.seed, &[1]))?;
    let mut buf = if meta.label == FOOTSTEPS {
        let steps = synth_footsteps_with::<T>(meta.walkers, dur, rate, rng::derive(meta.seed, &[2]), &spec.footsteps)?;
        let snr = if spec.snr_db.1 > spec.snr_db.0 { r.gen_range(spec.snr_db.0..spec.snr_db.1) } else { spec.snr_db.0 };
        let ratio = 10f64.powf(snr / 20.0) * bg.rms().as_f64() / steps.rms().as_f64().max(1e-12);
        // Keep both scales in [0, 1] with the louder part at unit gain.
        let (a, b) = if ratio > 1.0 { (1.0 / ratio, 1.0) } else { (1.0, ratio) };
        mix(&[&bg, &steps], &[a, b])?
    } else {
        bg
    };
    if spec.roll && !buf.is_empty() {
        let offset = r.gen_range(0..buf.len());
        buf = augment_roll(&buf, offset);
    }
    if let Some((lo, hi)) = spec.aug_noise_snr_db {
        let snr = if hi > lo { r.gen_range(lo..hi) } else { lo };
        if buf.rms() > T::zero() {
            buf = augment_noise(&buf, snr, rng::derive(meta.seed, &[3]))?;
        }
    }
    let window = AudioWindow::new(buf.into_samples(), rate, dur)?;
    Ok(LabeledWindow { window, label: meta.label, meta: meta.clone() })
}

/// Plans and renders the whole corpus. Holds every window in memory; for large
/// corpora prefer [`plan_dataset`] + [`render_sample`] per window.
pub fn build_dataset<T: Real>(spec: &SynthSpec) -> Result<DatasetSplit<LabeledWindow<T>>> {
    plan_dataset(spec)?.try_map(|m| render_sample(spec, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn brute_force_largest_remainder(total: usize, w: &[u64]) -> Vec<usize> {
        // Exact rationals via f64 is fine at these sizes; ties broken to the later index.
        let denom: u64 = w.iter().sum();
        let quotas: Vec<f64> = w.iter().map(|&x| total as f64 * x as f64 / denom as f64).collect();
        let mut out: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut bumped = vec![false; w.len()];
        while out.iter().sum::<usize>() < total {
            let mut best: Option<usize> = None;
            for k in 0..w.len() {
                if bumped[k] {
                    continue;
                }
                let rk = quotas[k] - quotas[k].floor();
                match best {
                    Some(b) if rk < quotas[b] - quotas[b].floor() - 1e-9 => {}
                    _ => best = Some(k),
                }
            }
            let b = best.unwrap();
            bumped[b] = true;
            out[b] += 1;
        }
        out
    }

    #[test]
    fn reference_split_sizes() {
        assert_eq!(allocate_largest_remainder(12_352, &REFERENCE_SPLIT), vec![9_024, 1_664, 1_664]);
        assert_eq!(allocate_largest_remainder(100, &REFERENCE_SPLIT), vec![73, 13, 14]);
        assert_eq!(brute_force_largest_remainder(100, &REFERENCE_SPLIT), vec![73, 13, 14]);
        for total in [1, 2, 3, 7, 50, 99, 1_000, 2_001] {
            let a = allocate_largest_remainder(total, &REFERENCE_SPLIT);
            assert_eq!(a.iter().sum::<usize>(), total);
        }
    }

    #[test]
    fn plan_is_balanced_disjoint_and_stratified() {
        let spec = SynthSpec::with_total(100, 3);
        let plan = plan_dataset(&spec).unwrap();
        assert_eq!([plan.train.len(), plan.validation.len(), plan.test.len()], [73, 13, 14]);
        let mut seen = HashSet::new();
        for (_, part) in plan.parts() {
            let ones = part.iter().filter(|m| m.label == 1).count();
            let zeros = part.len() - ones;
            assert!(ones.abs_diff(zeros) <= 1);
            for m in part {
                assert!(seen.insert(m.id), "duplicate id {}", m.id);
            }
        }
        assert_eq!(seen.len(), 100);
        let c0 = plan.train.iter().filter(|m| m.label == 0);
        let mut per_kind = [0usize; 4];
        c0.for_each(|m| per_kind[m.noise.unwrap() as usize] += 1);
        assert!(per_kind.iter().max().unwrap() - per_kind.iter().min().unwrap() <= 1);
    }

    #[test]
    fn unequal_counts_are_noted() {
        let spec = SynthSpec { per_class: [10, 12], ..SynthSpec::default() };
        let plan = plan_dataset(&spec).unwrap();
        assert_eq!(plan.len(), 20);
        assert_eq!(plan.notes.len(), 1);
    }

    #[test]
    fn render_is_pure() {
        let spec = SynthSpec { duration_s: 0.5, ..SynthSpec::with_total(4, 1) };
        let plan = plan_dataset(&spec).unwrap();
        for m in &plan.train {
            let a: LabeledWindow<f64> = render_sample(&spec, m).unwrap();
            let b: LabeledWindow<f64> = render_sample(&spec, m).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.window.len(), 5_513);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(plan_dataset(&SynthSpec { per_class: [0, 3], ..Default::default() }).is_err());
        assert!(plan_dataset(&SynthSpec { walkers: (0, 2), ..Default::default() }).is_err());
        assert!(plan_dataset(&SynthSpec { noise_kinds: vec![], ..Default::default() }).is_err());
    }
}
