use crate::error::{Error, Result};
use crate::tespar::{code_epoch, Epoch, FeatureVector};

pub const SLICE_COUNTER_MAX: u16 = 8191;

/// One 0.5 s slice worth of 13-bit saturating D/S counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceRegisterFile {
    d_max: usize,
    s_max: usize,
    counters: Vec<u16>,
}

impl Default for SliceRegisterFile {
    fn default() -> Self {
        Self::new(crate::tespar::DEFAULT_D_MAX, crate::tespar::DEFAULT_S_MAX)
    }
}

impl SliceRegisterFile {
    pub fn new(d_max: usize, s_max: usize) -> Self {
        Self { d_max, s_max, counters: vec![0; d_max * s_max] }
    }

    pub fn counters(&self) -> &[u16] {
        &self.counters
    }

    pub fn get(&self, d_bin: usize, s_bin: usize) -> Option<u16> {
        (d_bin < self.d_max && s_bin < self.s_max).then(|| self.counters[d_bin * self.s_max + s_bin])
    }

    pub fn slice_update(&mut self, d_bin: usize, s_bin: usize) -> Result<()> {
        if d_bin >= self.d_max || s_bin >= self.s_max {
            return Err(Error::Fault(format!("register address ({d_bin}, {s_bin}) out of range")));
        }
        let c = &mut self.counters[d_bin * self.s_max + s_bin];
        *c = (*c + 1).min(SLICE_COUNTER_MAX);
        Ok(())
    }

    pub fn record_epoch(&mut self, e: &Epoch) -> Result<()> {
        let (d, s) = code_epoch(e, self.d_max, self.s_max);
        self.slice_update(d, s)
    }

    pub fn clear(&mut self) {
        self.counters.fill(0);
    }

    pub fn to_feature_vector(&self) -> FeatureVector {
        FeatureVector {
            values: self.counters.iter().map(|&c| c as u32).collect(),
            d_max: self.d_max,
            s_max: self.s_max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturates_at_13_bits() {
        let mut rf = SliceRegisterFile::default();
        for _ in 0..8192 {
            rf.slice_update(3, 2).unwrap();
        }
        assert_eq!(rf.get(3, 2), Some(8191));
        rf.slice_update(3, 2).unwrap();
        assert_eq!(rf.get(3, 2), Some(8191));
        assert!(matches!(rf.slice_update(10, 0), Err(Error::Fault(_))));
        assert!(matches!(rf.slice_update(0, 5), Err(Error::Fault(_))));
    }

    #[test]
    fn single_update() {
        let mut rf = SliceRegisterFile::default();
        rf.slice_update(0, 4).unwrap();
        assert_eq!(rf.counters().iter().filter(|&&c| c != 0).count(), 1);
        assert_eq!(rf.get(0, 4), Some(1));
    }
}
