//! Audio ingestion and conditioning: WAV I/O, FIR low-pass, rate conversion and
//! windowing into fixed-length classification frames.

mod audio;
mod filter;
mod resample;
mod wav;
mod window;

pub use audio::{AudioBuffer, AudioWindow};
pub use filter::{design_lowpass, lowpass, FilterSpec};
pub use resample::resample;
pub use wav::{load_wav, write_wav};
pub use window::window_stream;

/// Working sample rate of the feature extractor.
pub const WORKING_RATE_HZ: u32 = 11_025;
/// Rate of the source recordings.
pub const SOURCE_RATE_HZ: u32 = 44_100;
/// Classification window length in seconds.
pub const WINDOW_S: f64 = 5.0;
