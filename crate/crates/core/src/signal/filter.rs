use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::AudioBuffer;
use crate::error::{param, Result};
use crate::num::Real;

/// Low-pass band edges and stop-band attenuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub passband_hz: f64,
    pub stopband_hz: f64,
    pub stopband_atten_db: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self { passband_hz: 5_000.0, stopband_hz: 6_000.0, stopband_atten_db: 40.0 }
    }
}

impl FilterSpec {
    pub fn validate(&self, sample_rate_hz: u32) -> Result<()> {
        let nyquist = sample_rate_hz as f64 / 2.0;
        if !(self.passband_hz > 0.0 && self.passband_hz < self.stopband_hz) {
            return param(format!("need 0 < passband ({}) < stopband ({})", self.passband_hz, self.stopband_hz));
        }
        if self.stopband_hz >= nyquist {
            return param(format!("stopband {} Hz at or above Nyquist {nyquist} Hz", self.stopband_hz));
        }
        if !(self.stopband_atten_db > 0.0) {
            return param("stop-band attenuation must be positive");
        }
        Ok(())
    }
}

/// Zeroth-order modified Bessel function of the first kind.
pub(crate) fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= half / k as f64;
        let t2 = term * term;
        sum += t2;
        if t2 < sum * 1e-20 {
            break;
        }
    }
    sum
}

pub(crate) fn kaiser_beta(atten_db: f64) -> f64 {
    if atten_db > 50.0 {
        0.1102 * (atten_db - 8.7)
    } else if atten_db >= 21.0 {
        0.5842 * (atten_db - 21.0).powf(0.4) + 0.07886 * (atten_db - 21.0)
    } else {
        0.0
    }
}

/// Odd Kaiser-estimated length for a transition of `transition` cycles/sample.
pub(crate) fn kaiser_len(atten_db: f64, transition: f64) -> usize {
    let n = ((atten_db - 7.95) / (14.36 * transition)).ceil().max(1.0) as usize + 1;
    n | 1
}

/// Windowed-sinc prototype; `cutoff` in cycles/sample, DC gain normalised to `gain`.
pub(crate) fn windowed_sinc(len: usize, cutoff: f64, beta: f64, gain: f64) -> Vec<f64> {
    let mid = (len - 1) as f64 / 2.0;
    let i0_beta = bessel_i0(beta);
    let mut h: Vec<f64> = (0..len)
        .map(|n| {
            let t = n as f64 - mid;
            let sinc = if t == 0.0 { 2.0 * cutoff } else { (2.0 * PI * cutoff * t).sin() / (PI * t) };
            let r = if mid > 0.0 { t / mid } else { 0.0 };
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
            sinc * w
        })
        .collect();
    let dc: f64 = h.iter().sum();
    for v in &mut h {
        *v *= gain / dc;
    }
    h
}

/// Linear-phase FIR taps (odd length) meeting `spec` at `sample_rate_hz`.
///
/// Kaiser windowed sinc with the cut-off midway between the band edges. The
/// design attenuation carries a 6 dB margin over the requested figure to absorb
/// the error of Kaiser's length estimate.
pub fn design_lowpass<T: Real>(spec: &FilterSpec, sample_rate_hz: u32) -> Result<Vec<T>> {
    spec.validate(sample_rate_hz)?;
    let fs = sample_rate_hz as f64;
    let atten = spec.stopband_atten_db + 6.0;
    let transition = (spec.stopband_hz - spec.passband_hz) / fs;
    let len = kaiser_len(atten, transition);
    let cutoff = 0.5 * (spec.passband_hz + spec.stopband_hz) / fs;
    Ok(windowed_sinc(len, cutoff, kaiser_beta(atten), 1.0).into_iter().map(T::of).collect())
}

/// Applies the designed FIR with its group delay removed; output length equals input length.
pub fn lowpass<T: Real>(buf: &AudioBuffer<T>, spec: &FilterSpec) -> Result<AudioBuffer<T>> {
    let taps = design_lowpass::<T>(spec, buf.sample_rate_hz())?;
    AudioBuffer::new(convolve_same(buf.samples(), &taps), buf.sample_rate_hz())
}

pub(crate) fn convolve_same<T: Real>(x: &[T], taps: &[T]) -> Vec<T> {
    let n = x.len();
    let delay = (taps.len() - 1) / 2;
    (0..n)
        .map(|i| {
            // y[i] = sum_k h[k] x[i + delay - k]
            let hi = i + delay;
            let k_lo = hi.saturating_sub(n - 1);
            let k_hi = hi.min(taps.len() - 1);
            (k_lo..=k_hi).fold(T::zero(), |acc, k| acc + taps[k] * x[hi - k])
        })
        .collect()
}
