//! Parametric signal models. They are not meant to sound realistic, only to
//! give each class the zero-crossing statistics that make it recognisable:
//! high-pitched tonal crickets, swept bird calls, broadband rain, low-frequency
//! wind, and footsteps made of a low thump plus a mid-band gravel crunch.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::num::Real;
use crate::rng;
use crate::signal::AudioBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Crickets,
    Birds,
    Rain,
    Wind,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [NoiseKind::Crickets, NoiseKind::Birds, NoiseKind::Rain, NoiseKind::Wind];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Crickets => "crickets",
            NoiseKind::Birds => "birds",
            NoiseKind::Rain => "rain",
            NoiseKind::Wind => "wind",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Param(format!("unknown noise kind {s:?}")))
    }
}

fn n_samples(duration_s: f64, rate: u32) -> Result<usize> {
    if !(duration_s > 0.0) || rate == 0 {
        return param(format!("need positive duration and rate, got {duration_s} s at {rate} Hz"));
    }
    Ok((duration_s * rate as f64).round() as usize)
}

fn gauss(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

/// First-order low-pass, in place.
fn one_pole_lp(x: &mut [f64], cutoff_hz: f64, rate: f64) {
    let a = (-2.0 * PI * cutoff_hz / rate).exp();
    let mut y = 0.0;
    for v in x.iter_mut() {
        y = (1.0 - a) * *v + a * y;
        *v = y;
    }
}

/// First-order high-pass, in place.
fn one_pole_hp(x: &mut [f64], cutoff_hz: f64, rate: f64) {
    let a = (-2.0 * PI * cutoff_hz / rate).exp();
    let (mut y, mut prev) = (0.0, 0.0);
    for v in x.iter_mut() {
        y = a * (y + *v - prev);
        prev = *v;
        *v = y;
    }
}

fn peak_normalise(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        x.iter_mut().for_each(|v| *v *= peak / m);
    }
}

fn add_floor(x: &mut [f64], r: &mut ChaCha8Rng, level: f64) {
    x.iter_mut().for_each(|v| *v += level * gauss(r));
}

fn crickets(x: &mut [f64], rate: f64, r: &mut ChaCha8Rng) {
    let nyq = rate / 2.0;
    let voices = r.gen_range(1..=3);
    for _ in 0..voices {
        let carrier = r.gen_range(4_000.0..5_000.0f64).min(0.95 * nyq);
        let syllable_hz = r.gen_range(15.0..40.0);
        let chirp_len = r.gen_range(0.15..0.5);
        let chirp_gap = r.gen_range(0.1..0.4);
        let amp = r.gen_range(0.4..1.0);
        let phase0 = r.gen_range(0.0..(chirp_len + chirp_gap));
        for (i, v) in x.iter_mut().enumerate() {
            let t = i as f64 / rate;
            let in_chirp = (t + phase0) % (chirp_len + chirp_gap) < chirp_len;
            if !in_chirp {
                continue;
            }
            let syl = (PI * syllable_hz * t).sin().powi(2);
            *v += amp * syl * (2.0 * PI * carrier * t).sin();
        }
    }
    add_floor(x, r, 0.01);
}

fn birds(x: &mut [f64], rate: f64, r: &mut ChaCha8Rng) {
    let n = x.len();
    let call_rate = r.gen_range(3.0..8.0);
    let mut t = r.gen_range(0.0..0.3);
    let total = n as f64 / rate;
    let hi = (0.9 * rate / 2.0).min(4_500.0);
    while t < total {
        let dur = r.gen_range(0.05..0.25);
        let f0 = r.gen_range(1_500.0..hi);
        let f1 = r.gen_range(1_500.0..hi);
        let amp = r.gen_range(0.3..1.0);
        let start = (t * rate) as usize;
        let len = (dur * rate) as usize;
        let mut phase = 0.0;
        for k in 0..len.min(n.saturating_sub(start)) {
            let u = k as f64 / len as f64;
            let f = f0 * (f1 / f0).powf(u);
            phase += 2.0 * PI * f / rate;
            x[start + k] += amp * (PI * u).sin().powi(2) * phase.sin();
        }
        t += dur - (1.0 / call_rate) * (r.gen_range(0.0f64..1.0).max(1e-9)).ln();
    }
    add_floor(x, r, 0.01);
}

fn rain(x: &mut [f64], rate: f64, r: &mut ChaCha8Rng) {
    let n = x.len();
    let hiss = r.gen_range(0.05..0.15);
    x.iter_mut().for_each(|v| *v += hiss * gauss(r));
    let drop_rate = r.gen_range(100.0..400.0);
    let mut t = 0.0;
    let total = n as f64 / rate;
    loop {
        t -= (r.gen_range(0.0f64..1.0).max(1e-12)).ln() / drop_rate;
        if t >= total {
            break;
        }
        let tau = r.gen_range(0.001..0.005) * rate;
        let amp = r.gen_range(0.2..1.0);
        let start = (t * rate) as usize;
        let len = (5.0 * tau) as usize;
        for k in 0..len.min(n - start) {
            x[start + k] += amp * (-(k as f64) / tau).exp() * gauss(r);
        }
    }
}

fn wind(x: &mut [f64], rate: f64, r: &mut ChaCha8Rng) {
    // Pink-ish noise from a bank of leaky integrators, then a low-pass.
    let poles = [0.99886, 0.99332, 0.96900, 0.86650, 0.55000];
    let gains = [0.0555179, 0.0750759, 0.1538520, 0.3104856, 0.5329522];
    let mut state = [0.0f64; 5];
    for v in x.iter_mut() {
        let w = gauss(r);
        let mut acc = 0.0;
        for k in 0..5 {
            state[k] = poles[k] * state[k] + gains[k] * w;
            acc += state[k];
        }
        *v = acc;
    }
    let cutoff = r.gen_range(200.0..600.0);
    one_pole_lp(x, cutoff, rate);
    one_pole_lp(x, cutoff, rate);
    let gust_hz = r.gen_range(0.1..0.5);
    let gust_phase = r.gen_range(0.0..2.0 * PI);
    for (i, v) in x.iter_mut().enumerate() {
        let t = i as f64 / rate;
        *v *= 0.6 + 0.4 * (2.0 * PI * gust_hz * t + gust_phase).sin();
    }
}

/// One background recording of `kind`, peak-normalised to 0.5.
///
/// Deterministic in `(kind, duration_s, sample_rate_hz, seed)`.
pub fn synth_background<T: Real>(
    kind: NoiseKind,
    duration_s: f64,
    sample_rate_hz: u32,
    seed: u64,
) -> Result<AudioBuffer<T>> {
    let n = n_samples(duration_s, sample_rate_hz)?;
    let rate = sample_rate_hz as f64;
    let mut r = rng::stream(seed, &[0xB6, kind as u64]);
    let mut x = vec![0.0; n];
    match kind {
        NoiseKind::Crickets => crickets(&mut x, rate, &mut r),
        NoiseKind::Birds => birds(&mut x, rate, &mut r),
        NoiseKind::Rain => rain(&mut x, rate, &mut r),
        NoiseKind::Wind => wind(&mut x, rate, &mut r),
    }
    peak_normalise(&mut x, 0.5);
    AudioBuffer::new(x.into_iter().map(T::of).collect(), sample_rate_hz)
}

/// Footstep transient model: every step is an exponentially damped
/// low-frequency sinusoid (heel thump) plus a band-passed noise burst (gravel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FootstepModel {
    pub step_rate_hz: (f64, f64),
    pub thump_hz: (f64, f64),
    pub thump_decay_s: (f64, f64),
    pub crunch_band_hz: (f64, f64),
    pub crunch_decay_s: (f64, f64),
    /// Crunch amplitude relative to the thump.
    pub crunch_level: (f64, f64),
    /// Standard deviation of step-time jitter.
    pub jitter_s: f64,
}

impl Default for FootstepModel {
    fn default() -> Self {
        Self {
            step_rate_hz: (1.5, 2.5),
            thump_hz: (60.0, 300.0),
            thump_decay_s: (0.015, 0.04),
            crunch_band_hz: (200.0, 1_500.0),
            crunch_decay_s: (0.05, 0.15),
            crunch_level: (0.5, 1.0),
            jitter_s: 0.02,
        }
    }
}

fn range(r: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        r.gen_range(lo..hi)
    } else {
        lo
    }
}

fn add_step(x: &mut [f64], rate: f64, at: usize, model: &FootstepModel, r: &mut ChaCha8Rng) {
    let n = x.len();
    let f = range(r, model.thump_hz);
    let tau = range(r, model.thump_decay_s) * rate;
    let amp = r.gen_range(0.6..1.0);
    for k in 0..((6.0 * tau) as usize).min(n.saturating_sub(at)) {
        let t = k as f64;
        x[at + k] += amp * (-t / tau).exp() * (2.0 * PI * f * t / rate).sin();
    }
    let c_tau = range(r, model.crunch_decay_s) * rate;
    let c_amp = amp * range(r, model.crunch_level);
    let len = ((5.0 * c_tau) as usize).min(n.saturating_sub(at));
    let mut burst: Vec<f64> = (0..len).map(|_| gauss(r)).collect();
    one_pole_hp(&mut burst, model.crunch_band_hz.0, rate);
    one_pole_lp(&mut burst, model.crunch_band_hz.1, rate);
    one_pole_lp(&mut burst, model.crunch_band_hz.1, rate);
    let rms = (burst.iter().map(|v| v * v).sum::<f64>() / len.max(1) as f64).sqrt().max(1e-12);
    let attack = 0.005 * rate;
    for (k, b) in burst.iter().enumerate() {
        let t = k as f64;
        let env = (t / attack).min(1.0) * (-t / c_tau).exp();
        x[at + k] += c_amp * env * b / rms * 0.5;
    }
}

/// Footsteps of `walkers` people with an explicit model. Each walker has its
/// own cadence, phase and a loudness drawn uniformly from (0, 1].
pub fn synth_footsteps_with<T: Real>(
    walkers: usize,
    duration_s: f64,
    sample_rate_hz: u32,
    seed: u64,
    model: &FootstepModel,
) -> Result<AudioBuffer<T>> {
    if !(1..=3).contains(&walkers) {
        return param(format!("walkers must be 1..=3, got {walkers}"));
    }
    let n = n_samples(duration_s, sample_rate_hz)?;
    let rate = sample_rate_hz as f64;
    let mut x = vec![0.0; n];
    for w in 0..walkers {
        let mut r = rng::stream(seed, &[0xF007, w as u64]);
        let cadence = range(&mut r, model.step_rate_hz);
        let scale = 1.0 - r.gen_range(0.0..1.0);
        let mut walker = vec![0.0; n];
        let period = 1.0 / cadence;
        let mut t = r.gen_range(0.0..period);
        while t < duration_s {
            let jitter = model.jitter_s * gauss(&mut r);
            let at = ((t + jitter).max(0.0) * rate) as usize;
            if at < n {
                add_step(&mut walker, rate, at, model, &mut r);
            }
            t += period;
        }
        x.iter_mut().zip(&walker).for_each(|(a, b)| *a += scale * b);
    }
    peak_normalise(&mut x, 0.5);
    AudioBuffer::new(x.into_iter().map(T::of).collect(), sample_rate_hz)
}

pub fn synth_footsteps<T: Real>(
    walkers: usize,
    duration_s: f64,
    sample_rate_hz: u32,
    seed: u64,
) -> Result<AudioBuffer<T>> {
    synth_footsteps_with(walkers, duration_s, sample_rate_hz, seed, &FootstepModel::default())
}
