use rand_distr::{Distribution, StandardNormal};

use crate::error::{param, Result};
use crate::num::Real;
use crate::rng;
use crate::signal::AudioBuffer;

/// Weighted sum of equal-length buffers, clipped to `[-1, 1]`.
pub fn mix<T: Real>(parts: &[&AudioBuffer<T>], scales: &[f64]) -> Result<AudioBuffer<T>> {
    if parts.len() != scales.len() || parts.is_empty() {
        return param(format!("{} parts but {} scales", parts.len(), scales.len()));
    }
    let (len, rate) = (parts[0].len(), parts[0].sample_rate_hz());
    if parts.iter().any(|p| p.len() != len || p.sample_rate_hz() != rate) {
        return param("mixed buffers must share length and sample rate");
    }
    if let Some(s) = scales.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return param(format!("mix scale {s} outside [0, 1]"));
    }
    let mut out = vec![T::zero(); len];
    for (p, &s) in parts.iter().zip(scales) {
        let s = T::of(s);
        for (o, &x) in out.iter_mut().zip(p.samples()) {
            *o += s * x;
        }
    }
    out.iter_mut().for_each(|v| *v = v.max(-T::one()).min(T::one()));
    AudioBuffer::new(out, rate)
}

/// Circular shift right by `offset` (reduced modulo the length).
pub fn augment_roll<T: Real>(buf: &AudioBuffer<T>, offset: usize) -> AudioBuffer<T> {
    let mut s = buf.samples().to_vec();
    if !s.is_empty() {
        let k = offset % s.len();
        s.rotate_right(k);
    }
    AudioBuffer::new(s, buf.sample_rate_hz()).expect("rolled buffer stays valid")
}

/// Adds white Gaussian noise whose realised RMS sits exactly `snr_db` below the
/// signal RMS. `snr_db = +inf` returns the input unchanged.
pub fn augment_noise<T: Real>(buf: &AudioBuffer<T>, snr_db: f64, seed: u64) -> Result<AudioBuffer<T>> {
    if snr_db == f64::INFINITY {
        return Ok(buf.clone());
    }
    if !snr_db.is_finite() {
        return param(format!("snr_db must be finite or +inf, got {snr_db}"));
    }
    let sig_rms = buf.rms().as_f64();
    if !(sig_rms > 0.0) {
        return param("cannot set an SNR against a silent signal");
    }
    let mut r = rng::stream(seed, &[0xA0C5]);
    let noise: Vec<f64> = (0..buf.len()).map(|_| StandardNormal.sample(&mut r)).collect();
    let noise_rms = (noise.iter().map(|v| v * v).sum::<f64>() / noise.len() as f64).sqrt();
    let gain = sig_rms / 10f64.powf(snr_db / 20.0) / noise_rms;
    let out = buf.samples().iter().zip(&noise).map(|(&x, &n)| x + T::of(gain * n)).collect();
    AudioBuffer::new(out, buf.sample_rate_hz())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> AudioBuffer<f64> {
        AudioBuffer::new((0..n).map(|i| ((i as f64) * 0.37).sin() * 0.5).collect(), 1_000).unwrap()
    }

    #[test]
    fn mix_identities() {
        let x = ramp(64);
        assert_eq!(mix(&[&x], &[1.0]).unwrap(), x);
        let half = mix(&[&x, &x], &[0.5, 0.5]).unwrap();
        for (a, b) in half.samples().iter().zip(x.samples()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(mix(&[&x, &x], &[0.0, 0.0]).unwrap().samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mix_clips_and_validates() {
        let one = AudioBuffer::new(vec![0.9f64; 4], 1_000).unwrap();
        assert!(mix(&[&one, &one], &[1.0, 1.0]).unwrap().samples().iter().all(|&v| v == 1.0));
        assert!(mix(&[&one, &ramp(5)], &[1.0, 1.0]).is_err());
        assert!(mix(&[&one], &[1.0, 1.0]).is_err());
        let other_rate = AudioBuffer::new(vec![0.0f64; 4], 2_000).unwrap();
        assert!(mix(&[&one, &other_rate], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn roll_examples() {
        let x = AudioBuffer::new(vec![1.0f64, 2.0, 3.0], 10).unwrap();
        assert_eq!(augment_roll(&x, 1).samples(), &[3.0, 1.0, 2.0]);
        assert_eq!(augment_roll(&x, 0), x);
        assert_eq!(augment_roll(&x, 4).samples(), &[3.0, 1.0, 2.0]);
        let y = ramp(101);
        assert_eq!(augment_roll(&augment_roll(&y, 37), 101 - 37), y);
    }

    #[test]
    fn noise_hits_target_snr() {
        let x = ramp(20_000);
        let y = augment_noise(&x, 20.0, 5).unwrap();
        let noise: Vec<f64> = y.samples().iter().zip(x.samples()).map(|(a, b)| a - b).collect();
        let nr = (noise.iter().map(|v| v * v).sum::<f64>() / noise.len() as f64).sqrt();
        let snr = 20.0 * (x.rms() / nr).log10();
        assert!((19.9..=20.1).contains(&snr), "{snr}");
        assert_eq!(augment_noise(&x, 20.0, 5).unwrap(), y);
        assert_ne!(augment_noise(&x, 20.0, 6).unwrap(), y);
    }

    #[test]
    fn noise_edge_cases() {
        let x = ramp(100);
        assert_eq!(augment_noise(&x, f64::INFINITY, 1).unwrap(), x);
        let silent = AudioBuffer::<f64>::zeros(100, 1_000).unwrap();
        assert!(augment_noise(&silent, 10.0, 1).is_err());
        assert!(augment_noise(&x, f64::NAN, 1).is_err());
    }
}
