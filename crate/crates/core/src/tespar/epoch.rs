use num_traits::Zero;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    /// Sign bit convention: zero counts as positive.
    #[inline]
    pub fn of<S: PartialOrd + Zero>(x: &S) -> Self {
        if *x < S::zero() {
            Polarity::Negative
        } else {
            Polarity::Positive
        }
    }
}

/// Segment between two consecutive real zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epoch {
    pub polarity: Polarity,
    /// Samples in the epoch.
    pub d: usize,
    /// Maxima (positive epoch) or minima (negative epoch).
    pub s: usize,
    /// Index of the sample whose sign change closed the epoch.
    pub close_index: usize,
}

/// Sample-at-a-time epoch extractor.
///
/// Mirrors the comparator datapath: the sign bit of each new sample is compared
/// against the previous one, a three-sample window detects extrema, and the
/// D/S counters latch and reset on every crossing. Counting starts at the first
/// sample, so the leading partial segment forms the first epoch; a segment that
/// is still open when the stream stops is never emitted.
#[derive(Debug, Clone)]
pub struct EpochStream<S> {
    prev2: Option<S>,
    prev: Option<S>,
    polarity: Polarity,
    d: usize,
    s: usize,
    index: usize,
}

impl<S: Copy + PartialOrd + Zero> Default for EpochStream<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Copy + PartialOrd + Zero> EpochStream<S> {
    pub fn new() -> Self {
        Self { prev2: None, prev: None, polarity: Polarity::Positive, d: 0, s: 0, index: 0 }
    }

    /// Number of samples consumed so far.
    pub fn position(&self) -> usize {
        self.index
    }

    pub fn push(&mut self, x: S) -> Option<Epoch> {
        let mut closed = None;
        if let Some(p) = self.prev {
            // The middle sample belongs to the open epoch, so score it before latching.
            if let Some(pp) = self.prev2 {
                let is_extremum = match self.polarity {
                    Polarity::Positive => pp < p && p > x,
                    Polarity::Negative => pp > p && p < x,
                };
                if is_extremum {
                    self.s += 1;
                }
            }
            let pol = Polarity::of(&x);
            if pol != self.polarity {
                closed = Some(Epoch { polarity: self.polarity, d: self.d, s: self.s, close_index: self.index });
                self.polarity = pol;
                self.d = 0;
                self.s = 0;
            }
        } else {
            self.polarity = Polarity::of(&x);
        }
        self.d += 1;
        self.prev2 = self.prev;
        self.prev = Some(x);
        self.index += 1;
        closed
    }
}

/// All closed epochs of `samples`, in order.
pub fn extract_epochs<S: Copy + PartialOrd + Zero>(samples: &[S]) -> Vec<Epoch> {
    let mut stream = EpochStream::new();
    samples.iter().filter_map(|&x| stream.push(x)).collect()
}
