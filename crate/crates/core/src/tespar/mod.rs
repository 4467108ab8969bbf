//! TESPAR D/S coding: zero-crossing epochs, duration/shape binning, 2-D
//! histograms and the 0.5 s slice ring that produces the 5 s feature vector.
//!
//! The extractor is generic over the sample type so the same code runs on
//! floating audio and on integer ADC codes.

mod epoch;
mod histogram;
mod slice;

pub use epoch::{extract_epochs, Epoch, EpochStream, Polarity};
pub use histogram::{code_epoch, extract_fv, histogram, DsHistogram, FeatureVector};
pub use slice::{slice_bounds, streaming_fv, SliceRing};

pub const DEFAULT_D_MAX: usize = 10;
pub const DEFAULT_S_MAX: usize = 5;
pub const DEFAULT_SLICE_S: f64 = 0.5;
pub const DEFAULT_N_SLICES: usize = 10;
