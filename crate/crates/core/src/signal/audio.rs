use crate::error::{param, Result};
use crate::num::Real;

/// Mono sample buffer at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer<T> {
    samples: Vec<T>,
    sample_rate_hz: u32,
}

impl<T: Real> AudioBuffer<T> {
    pub fn new(samples: Vec<T>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return param("sample rate must be positive");
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return param(format!("non-finite sample at index {i}"));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn zeros(len: usize, sample_rate_hz: u32) -> Result<Self> {
        Self::new(vec![T::zero(); len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn rms(&self) -> T {
        if self.samples.is_empty() {
            return T::zero();
        }
        let ss: T = self.samples.iter().map(|&s| s * s).sum();
        (ss / T::of_usize(self.samples.len())).sqrt()
    }

    /// Returns a copy of `[start, start + len)`, or `None` if out of range.
    pub fn slice(&self, start: usize, len: usize) -> Option<Self> {
        let end = start.checked_add(len)?;
        (end <= self.samples.len())
            .then(|| Self { samples: self.samples[start..end].to_vec(), sample_rate_hz: self.sample_rate_hz })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.samples.iter().map(|&s| f(s)).collect(), self.sample_rate_hz)
    }
}

/// One classification frame, `round(duration_s * rate)` samples long.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioWindow<T> {
    samples: Vec<T>,
    sample_rate_hz: u32,
    duration_s: f64,
    /// Index of the first sample in the source buffer.
    pub start_index: usize,
}

impl<T: Real> AudioWindow<T> {
    pub fn new(samples: Vec<T>, sample_rate_hz: u32, duration_s: f64) -> Result<Self> {
        if sample_rate_hz == 0 || !(duration_s > 0.0) {
            return param("window needs a positive rate and duration");
        }
        let expected = (duration_s * sample_rate_hz as f64).round() as usize;
        if samples.len() != expected {
            return param(format!(
                "window of {duration_s} s at {sample_rate_hz} Hz needs {expected} samples, got {}",
                samples.len()
            ));
        }
        Ok(Self { samples, sample_rate_hz, duration_s, start_index: 0 })
    }

    /// Wraps a whole buffer as a window covering its full duration.
    pub fn from_buffer(buf: AudioBuffer<T>) -> Self {
        let duration_s = buf.duration_s();
        Self { samples: buf.samples, sample_rate_hz: buf.sample_rate_hz, duration_s, start_index: 0 }
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn to_buffer(&self) -> AudioBuffer<T> {
        AudioBuffer { samples: self.samples.clone(), sample_rate_hz: self.sample_rate_hz }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(AudioBuffer::<f64>::new(vec![0.0], 0).is_err());
        assert!(AudioBuffer::new(vec![0.0, f64::NAN], 8000).is_err());
        assert!(AudioBuffer::new(vec![f32::INFINITY], 8000).is_err());
    }

    #[test]
    fn window_length_invariant() {
        assert!(AudioWindow::new(vec![0.0f64; 55_125], 11_025, 5.0).is_ok());
        assert!(AudioWindow::new(vec![0.0f64; 55_124], 11_025, 5.0).is_err());
    }

    #[test]
    fn rms_of_constant() {
        let b = AudioBuffer::new(vec![-0.5f64; 10], 100).unwrap();
        assert!((b.rms() - 0.5).abs() < 1e-15);
    }
}
