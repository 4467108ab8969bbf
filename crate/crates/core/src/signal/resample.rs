use super::filter::{kaiser_beta, windowed_sinc};
use super::AudioBuffer;
use crate::error::{param, Result};
use crate::num::Real;

/// Taps per polyphase branch for rational conversion.
const TAPS_PER_PHASE: usize = 48;
const PROTOTYPE_ATTEN_DB: f64 = 70.0;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Converts `buf` to `target_hz`.
///
/// Integer down-ratios pick every M-th sample; the caller is expected to have
/// band-limited the input (see [`super::lowpass`]). Any other ratio L/M uses a
/// polyphase Kaiser-windowed sinc interpolator.
pub fn resample<T: Real>(buf: &AudioBuffer<T>, target_hz: i64) -> Result<AudioBuffer<T>> {
    if target_hz <= 0 {
        return param(format!("target rate must be positive, got {target_hz}"));
    }
    let src = buf.sample_rate_hz() as u64;
    let tgt = target_hz as u64;
    let tgt_u32 = u32::try_from(tgt).map_err(|_| crate::Error::Param("target rate too large".into()))?;
    if src == tgt {
        return Ok(buf.clone());
    }
    let g = gcd(src, tgt);
    let (up, down) = (tgt / g, src / g);
    let n = buf.len() as u64;
    let out_len = (n * up).div_ceil(down) as usize;
    let x = buf.samples();

    if up == 1 {
        let step = down as usize;
        let out = x.iter().step_by(step).copied().collect();
        return AudioBuffer::new(out, tgt_u32);
    }

    // Prototype at the up-sampled rate src * up; cut-off below the lower Nyquist.
    let len = (TAPS_PER_PHASE * up as usize) | 1;
    let cutoff = 0.5 * 0.9 / up.max(down) as f64;
    let h: Vec<T> =
        windowed_sinc(len, cutoff, kaiser_beta(PROTOTYPE_ATTEN_DB), up as f64).into_iter().map(T::of).collect();
    let delay = ((len - 1) / 2) as u64;
    let out = (0..out_len as u64)
        .map(|m| {
            // v[j] = sum_i h[j - i*up] x[i], sampled at j = m*down + delay
            let j = m * down + delay;
            let i_hi = (j / up).min(n.saturating_sub(1));
            let i_lo = (j + up).saturating_sub(len as u64) / up;
            let mut acc = T::zero();
            let mut i = i_lo;
            while i <= i_hi {
                let k = j - i * up;
                if (k as usize) < len {
                    acc += h[k as usize] * x[i as usize];
                }
                i += 1;
            }
            acc
        })
        .collect();
    AudioBuffer::new(out, tgt_u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn four_to_one_length() {
        let buf = AudioBuffer::<f64>::zeros(220_500, 44_100).unwrap();
        let out = resample(&buf, 11_025).unwrap();
        assert_eq!(out.len(), 55_125);
        assert_eq!(out.sample_rate_hz(), 11_025);
    }

    #[test]
    fn identity_when_rates_match() {
        let buf = AudioBuffer::new(vec![0.1f64, -0.2, 0.3], 11_025).unwrap();
        assert_eq!(resample(&buf, 11_025).unwrap(), buf);
    }

    #[test]
    fn dc_preserved_integer_ratio() {
        let buf = AudioBuffer::new(vec![0.3f64; 4_410], 44_100).unwrap();
        let out = resample(&buf, 11_025).unwrap();
        assert!(out.samples().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn rational_ratio_keeps_dc_and_duration() {
        for target in [12_500, 13_500, 14_000, 15_500] {
            let buf = AudioBuffer::new(vec![0.3f64; 44_100], 44_100).unwrap();
            let out = resample(&buf, target).unwrap();
            let expected = buf.duration_s() * target as f64;
            assert!((out.len() as f64 - expected).abs() <= 1.0);
            let n = out.len();
            for &v in &out.samples()[n / 4..3 * n / 4] {
                assert!((v - 0.3).abs() < 1e-3, "{target}: {v}");
            }
        }
    }

    #[test]
    fn rational_ratio_passes_low_tone() {
        let fs = 44_100;
        let s: Vec<f64> = (0..fs).map(|i| (2.0 * PI * 440.0 * i as f64 / fs as f64).sin()).collect();
        let out = resample(&AudioBuffer::new(s, fs as u32).unwrap(), 12_500).unwrap();
        for (m, &v) in out.samples().iter().enumerate().skip(1000).take(5000) {
            let want = (2.0 * PI * 440.0 * m as f64 / 12_500.0).sin();
            assert!((v - want).abs() < 5e-3, "m={m}: {v} vs {want}");
        }
    }

    #[test]
    fn idempotent_in_rate() {
        let buf = AudioBuffer::new((0..8_820).map(|i| ((i % 17) as f64 - 8.0) / 10.0).collect(), 44_100).unwrap();
        let once = resample(&buf, 12_500).unwrap();
        assert_eq!(resample(&once, 12_500).unwrap(), once);
    }

    #[test]
    fn rejects_nonpositive_target() {
        let buf = AudioBuffer::<f64>::zeros(10, 44_100).unwrap();
        assert!(resample(&buf, 0).is_err());
        assert!(resample(&buf, -5).is_err());
    }
}
