//! Short-window FFT baseline feature: per-bin maximum of the one-sided PSD over
//! consecutive 50 ms sub-windows of a classification window.

use rustfft::num_complex::Complex;
use rustfft::{FftNum, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::num::Real;

pub const SUB_WINDOW_S: f64 = 0.05;
pub const MAX_FFT_N: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFv<T> {
    pub values: Vec<T>,
    pub fft_n: usize,
}

fn check_n(fft_n: usize) -> Result<()> {
    if !fft_n.is_power_of_two() || !(2..=MAX_FFT_N).contains(&fft_n) {
        return param(format!("fft_n must be a power of two in [2, {MAX_FFT_N}], got {fft_n}"));
    }
    Ok(())
}

/// Two-sided `|X_k|^2 / n` of one segment, truncated or zero-padded to `fft_n`.
pub fn psd_two_sided<T: Real + FftNum>(segment: &[T], fft_n: usize) -> Result<Vec<T>> {
    check_n(fft_n)?;
    let fft = FftPlanner::<T>::new().plan_fft_forward(fft_n);
    let mut buf = frame(segment, fft_n);
    fft.process(&mut buf);
    let n = T::of_usize(fft_n);
    Ok(buf.iter().map(|c| c.norm_sqr() / n).collect())
}

fn frame<T: Real + FftNum>(segment: &[T], fft_n: usize) -> Vec<Complex<T>> {
    let mut buf = vec![Complex::new(T::zero(), T::zero()); fft_n];
    for (b, &x) in buf.iter_mut().zip(segment) {
        b.re = x;
    }
    buf
}

/// Elementwise maximum of the one-sided PSD (bins `0..fft_n/2`) over the
/// non-overlapping 50 ms sub-windows of `samples`. Rectangular window.
pub fn spectral_fv_case3<T: Real + FftNum>(samples: &[T], sample_rate_hz: u32, fft_n: usize) -> Result<SpectralFv<T>> {
    check_n(fft_n)?;
    let sub_len = (SUB_WINDOW_S * sample_rate_hz as f64).floor() as usize;
    if sub_len == 0 {
        return param("sample rate too low for a 50 ms sub-window");
    }
    let fft = FftPlanner::<T>::new().plan_fft_forward(fft_n);
    let n = T::of_usize(fft_n);
    let mut values = vec![T::zero(); fft_n / 2];
    for seg in samples.chunks_exact(sub_len) {
        let mut buf = frame(seg, fft_n);
        fft.process(&mut buf);
        for (v, c) in values.iter_mut().zip(&buf) {
            *v = v.max(c.norm_sqr() / n);
        }
    }
    Ok(SpectralFv { values, fft_n })
}
