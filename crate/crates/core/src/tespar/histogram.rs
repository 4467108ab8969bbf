use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{extract_epochs, Epoch};
use crate::error::{Error, Result};
use crate::num::Real;

/// Saturating (D, S) bin indices: D in `[0, d_max)`, S in `[0, s_max)`.
#[inline]
pub fn code_epoch(e: &Epoch, d_max: usize, s_max: usize) -> (usize, usize) {
    debug_assert!(d_max >= 1 && s_max >= 1);
    (e.d.clamp(1, d_max) - 1, e.s.min(s_max - 1))
}

/// Occurrence counts over the `d_max x s_max` grid, row-major over D.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsHistogram {
    counts: Vec<u32>,
    d_max: usize,
    s_max: usize,
}

impl DsHistogram {
    pub fn new(d_max: usize, s_max: usize) -> Result<Self> {
        if d_max == 0 || s_max == 0 {
            return Err(Error::Param("d_max and s_max must be at least 1".into()));
        }
        Ok(Self { counts: vec![0; d_max * s_max], d_max, s_max })
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn get(&self, d_bin: usize, s_bin: usize) -> u32 {
        self.counts[d_bin * self.s_max + s_bin]
    }

    pub fn add_epoch(&mut self, e: &Epoch) {
        let (d, s) = code_epoch(e, self.d_max, self.s_max);
        self.counts[d * self.s_max + s] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.d_max == other.d_max && self.s_max == other.s_max
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn clear(&mut self) {
        self.counts.iter_mut().for_each(|c| *c = 0);
    }

    pub fn flatten(&self) -> FeatureVector {
        FeatureVector { values: self.counts.clone(), d_max: self.d_max, s_max: self.s_max }
    }
}

pub fn histogram(epochs: &[Epoch], d_max: usize, s_max: usize) -> Result<DsHistogram> {
    let mut h = DsHistogram::new(d_max, s_max)?;
    epochs.iter().for_each(|e| h.add_epoch(e));
    Ok(h)
}

/// Flattened D/S histogram; the classifier input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<u32>,
    pub d_max: usize,
    pub s_max: usize,
}

impl FeatureVector {
    pub fn from_counts(values: Vec<u32>) -> Self {
        let n = values.len();
        Self { values, d_max: n, s_max: 1 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.values.iter().map(|&c| c as u64).sum()
    }

    pub fn max(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn to_real<T: Real>(&self) -> Vec<T> {
        self.values.iter().map(|&c| T::of(c as f64)).collect()
    }

    /// Values divided by the largest entry; all zeros when the vector is empty of counts.
    pub fn normalized<T: Real>(&self) -> Vec<T> {
        let m = self.max();
        if m == 0 {
            return vec![T::zero(); self.values.len()];
        }
        let inv = 1.0 / m as f64;
        self.values.iter().map(|&c| T::of(c as f64 * inv)).collect()
    }
}

/// Epochs -> codes -> histogram -> flat vector for a whole window.
pub fn extract_fv<S: Copy + PartialOrd + Zero>(samples: &[S], d_max: usize, s_max: usize) -> Result<FeatureVector> {
    Ok(histogram(&extract_epochs(samples), d_max, s_max)?.flatten())
}

#[cfg(test)]
mod tests {
    use super::super::Polarity;
    use super::*;

    fn ep(d: usize, s: usize) -> Epoch {
        Epoch { polarity: Polarity::Positive, d, s, close_index: 0 }
    }

    #[test]
    fn coding_saturates() {
        assert_eq!(code_epoch(&ep(3, 1), 10, 5), (2, 1));
        assert_eq!(code_epoch(&ep(25, 0), 10, 5), (9, 0));
        assert_eq!(code_epoch(&ep(4, 9), 10, 5), (3, 4));
        assert_eq!(code_epoch(&ep(1, 0), 1, 1), (0, 0));
    }

    #[test]
    fn histogram_counts() {
        let h = histogram(&[ep(3, 1), ep(3, 1), ep(12, 0)], 10, 5).unwrap();
        assert_eq!(h.get(2, 1), 2);
        assert_eq!(h.get(9, 0), 1);
        assert_eq!(h.total(), 3);
        assert_eq!(histogram(&[], 10, 5).unwrap().total(), 0);
    }

    #[test]
    fn fv_dimension_and_silence() {
        let fv = extract_fv(&[0.0f64; 1000], 10, 5).unwrap();
        assert_eq!(fv.len(), 50);
        assert_eq!(fv.total(), 0);
        assert_eq!(extract_fv(&[0.0f64; 10], 5, 5).unwrap().len(), 25);
        assert!(fv.normalized::<f64>().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(DsHistogram::new(0, 5).is_err());
    }
}
