use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

pub const LFSR_PERIOD: usize = 2047;
const MASK: u16 = 0x7FF;

/// 11-bit Fibonacci LFSR. The default taps (11, 9) give `x^11 + x^9 + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lfsr11 {
    state: u16,
    taps: (u8, u8),
}

impl Lfsr11 {
    pub fn new(seed: u16) -> Result<Self> {
        Self::with_taps(seed, (11, 9))
    }

    /// Taps are 1-based bit positions in `1..=11`.
    pub fn with_taps(seed: u16, taps: (u8, u8)) -> Result<Self> {
        if seed == 0 {
            return param("LFSR state 0 is the lock-up state");
        }
        if seed > MASK {
            return param(format!("LFSR seed {seed} does not fit in 11 bits"));
        }
        if !(1..=11).contains(&taps.0) || !(1..=11).contains(&taps.1) || taps.0 == taps.1 {
            return param("LFSR taps must be two distinct positions in 1..=11");
        }
        Ok(Self { state: seed, taps })
    }

    #[inline]
    pub fn state(&self) -> u16 {
        self.state
    }

    #[inline]
    pub fn advance(&mut self) {
        let fb = ((self.state >> (self.taps.0 - 1)) ^ (self.state >> (self.taps.1 - 1))) & 1;
        self.state = ((self.state << 1) | fb) & MASK;
    }
}

/// Next state; a zero state is rejected.
pub fn lfsr_next(s: Lfsr11) -> Result<Lfsr11> {
    if s.state == 0 {
        return param("LFSR state 0 is the lock-up state");
    }
    let mut n = s;
    n.advance();
    Ok(n)
}
