use std::fmt::Write as _;

use crate::error::{param, Result};

/// Fixed-width bit vector, one lane per input neuron. Lane 0 is the most
/// significant bit, matching the scan order of the address encoder.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpikeWord {
    width: usize,
    chunks: Vec<u64>,
}

impl SpikeWord {
    pub fn zeros(width: usize) -> Self {
        Self { width, chunks: vec![0; width.div_ceil(64)] }
    }

    pub fn from_bools(lanes: &[bool]) -> Self {
        let mut w = Self::zeros(lanes.len());
        for (i, &b) in lanes.iter().enumerate() {
            w.set(i, b);
        }
        w
    }

    /// `width <= 64`; bit `width - 1 - lane` of `value` holds `lane`.
    pub fn from_u64(width: usize, value: u64) -> Result<Self> {
        if width == 0 || width > 64 {
            return param("from_u64 supports widths 1..=64");
        }
        if width < 64 && value >> width != 0 {
            return param("value wider than the word");
        }
        let mut w = Self::zeros(width);
        w.chunks[0] = value << (64 - width);
        Ok(w)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, lane: usize) -> bool {
        lane < self.width && self.chunks[lane / 64] >> (63 - lane % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, lane: usize, on: bool) {
        assert!(lane < self.width, "lane {lane} outside word of width {}", self.width);
        let bit = 1u64 << (63 - lane % 64);
        if on {
            self.chunks[lane / 64] |= bit;
        } else {
            self.chunks[lane / 64] &= !bit;
        }
    }

    pub fn popcount(&self) -> u32 {
        self.chunks.iter().map(|c| c.count_ones()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.chunks.iter().all(|&c| c == 0)
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.width).map(|i| self.get(i)).collect()
    }

    /// Lane 0 first, padded with zero bits on the right to whole nibbles.
    pub fn to_hex(&self) -> String {
        let nibbles = self.width.div_ceil(4);
        let mut s = String::with_capacity(nibbles);
        for k in 0..nibbles {
            let v = (0..4).fold(0u8, |acc, b| acc << 1 | self.get(4 * k + b) as u8);
            let _ = write!(s, "{v:x}");
        }
        s
    }
}

/// Priority encoder with highest-bit reset: yields set lanes from lane 0
/// upward, then `None` (the invalid marker) once the word is exhausted.
#[derive(Debug, Clone)]
pub struct Lzc {
    chunks: Vec<u64>,
    chunk: usize,
}

impl Lzc {
    pub fn new(word: &SpikeWord) -> Self {
        Self { chunks: word.chunks.clone(), chunk: 0 }
    }
}

impl Iterator for Lzc {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.chunk < self.chunks.len() {
            let c = self.chunks[self.chunk];
            if c != 0 {
                let lz = c.leading_zeros() as usize;
                self.chunks[self.chunk] = c & !(1u64 << (63 - lz));
                return Some(self.chunk * 64 + lz);
            }
            self.chunk += 1;
        }
        None
    }
}

pub fn lzc_scan(word: &SpikeWord) -> Vec<usize> {
    Lzc::new(word).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(lzc_scan(&SpikeWord::from_u64(8, 0b0010_0100).unwrap()), vec![2, 5]);
        assert_eq!(lzc_scan(&SpikeWord::from_u64(8, 0b1000_0000).unwrap()), vec![0]);
        assert!(lzc_scan(&SpikeWord::zeros(50)).is_empty());
        let mut l = Lzc::new(&SpikeWord::from_u64(8, 1).unwrap());
        assert_eq!((l.next(), l.next(), l.next()), (Some(7), None, None));
    }

    #[test]
    fn hex_is_lane_ordered() {
        let w = SpikeWord::from_bools(&[true, false, false, false, false, true]);
        assert_eq!(w.to_hex(), "84");
        let mut w = SpikeWord::zeros(70);
        w.set(69, true);
        assert_eq!(lzc_scan(&w), vec![69]);
        assert_eq!(w.popcount(), 1);
    }
}
