use std::collections::VecDeque;

use num_traits::Zero;

use super::{DsHistogram, EpochStream, FeatureVector};
use crate::error::{Error, Result};

/// Fixed ring of per-slice histograms whose sum is the current feature vector.
#[derive(Debug, Clone)]
pub struct SliceRing {
    slices: VecDeque<DsHistogram>,
    aggregate: DsHistogram,
}

impl SliceRing {
    pub fn new(n_slices: usize, d_max: usize, s_max: usize) -> Result<Self> {
        if n_slices == 0 {
            return Err(Error::Param("slice ring needs at least one slice".into()));
        }
        let zero = DsHistogram::new(d_max, s_max)?;
        Ok(Self { slices: std::iter::repeat_n(zero.clone(), n_slices).collect(), aggregate: zero })
    }

    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    /// Evicts the oldest slice, appends `new_slice` and returns the sum of all slices.
    pub fn push(&mut self, new_slice: DsHistogram) -> Result<FeatureVector> {
        if !new_slice.same_shape(&self.aggregate) {
            return Err(Error::Dimension { expected: self.aggregate.counts().len(), got: new_slice.counts().len() });
        }
        self.slices.pop_front();
        self.slices.push_back(new_slice);
        // Recompute rather than subtract so the sum never depends on history.
        self.aggregate.clear();
        for s in &self.slices {
            self.aggregate.add_assign(s);
        }
        Ok(self.aggregate.flatten())
    }

    pub fn feature_vector(&self) -> FeatureVector {
        self.aggregate.flatten()
    }
}

/// Slice boundaries `round(k * slice_s * rate)` covering `len` samples.
pub fn slice_bounds(len: usize, sample_rate_hz: u32, slice_s: f64) -> Result<Vec<usize>> {
    if !(slice_s > 0.0) {
        return Err(Error::Param("slice length must be positive".into()));
    }
    let mut b = vec![0];
    for k in 1usize.. {
        let end = (k as f64 * slice_s * sample_rate_hz as f64).round() as usize;
        if end > len {
            break;
        }
        b.push(end);
    }
    Ok(b)
}

/// Streams a window through the slice datapath and returns the per-slice
/// histograms and the ring sum. Each epoch lands in the slice containing its
/// closing index; samples past the last whole slice are ignored.
pub fn streaming_fv<S: Copy + PartialOrd + Zero>(
    samples: &[S],
    sample_rate_hz: u32,
    d_max: usize,
    s_max: usize,
    slice_s: f64,
) -> Result<(Vec<DsHistogram>, FeatureVector)> {
    let bounds = slice_bounds(samples.len(), sample_rate_hz, slice_s)?;
    let n_slices = bounds.len().saturating_sub(1).max(1);
    let mut ring = SliceRing::new(n_slices, d_max, s_max)?;
    let mut stream = EpochStream::new();
    let mut slices = Vec::with_capacity(n_slices);
    for w in bounds.windows(2) {
        let mut current = DsHistogram::new(d_max, s_max)?;
        for &x in &samples[w[0]..w[1]] {
            if let Some(e) = stream.push(x) {
                current.add_epoch(&e);
            }
        }
        ring.push(current.clone())?;
        slices.push(current);
    }
    Ok((slices, ring.feature_vector()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tespar::{extract_fv, Epoch, Polarity};

    #[test]
    fn zero_ring_zero_fv() {
        let mut ring = SliceRing::new(10, 10, 5).unwrap();
        let fv = ring.push(DsHistogram::new(10, 5).unwrap()).unwrap();
        assert_eq!(fv.total(), 0);
    }

    #[test]
    fn identical_slices_sum() {
        let mut ring = SliceRing::new(10, 10, 5).unwrap();
        let mut slice = DsHistogram::new(10, 5).unwrap();
        for _ in 0..3 {
            slice.add_epoch(&Epoch { polarity: Polarity::Positive, d: 4, s: 2, close_index: 0 });
        }
        let mut fv = None;
        for _ in 0..10 {
            fv = Some(ring.push(slice.clone()).unwrap());
        }
        let fv = fv.unwrap();
        assert_eq!(fv.values[3 * 5 + 2], 30);
        assert_eq!(fv.total(), 30);
        // An eleventh slice evicts the first.
        let fv = ring.push(DsHistogram::new(10, 5).unwrap()).unwrap();
        assert_eq!(fv.total(), 27);
    }

    #[test]
    fn mismatched_slice_rejected() {
        let mut ring = SliceRing::new(10, 10, 5).unwrap();
        assert!(ring.push(DsHistogram::new(5, 5).unwrap()).is_err());
    }

    #[test]
    fn bounds_for_half_second_slices() {
        let b = slice_bounds(55_125, 11_025, 0.5).unwrap();
        assert_eq!(b.len(), 11);
        assert_eq!(b[1], 5_513);
        assert_eq!(*b.last().unwrap(), 55_125);
    }

    #[test]
    fn streaming_matches_monolithic_on_sine() {
        let s: Vec<f64> = (0..55_125).map(|i| (i as f64 * 0.37).sin() + 0.3 * (i as f64 * 2.1).sin()).collect();
        let (slices, fv) = streaming_fv(&s, 11_025, 10, 5, 0.5).unwrap();
        assert_eq!(slices.len(), 10);
        assert_eq!(fv, extract_fv(&s, 10, 5).unwrap());
    }
}
