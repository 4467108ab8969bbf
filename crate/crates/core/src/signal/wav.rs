use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioBuffer;
use crate::error::{Error, Result};
use crate::num::Real;

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), reason: reason.into() }
}

fn map_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        hound::Error::FormatError(m) => format_err(path, m),
        hound::Error::Unsupported => format_err(path, "unsupported encoding"),
        other => format_err(path, other.to_string()),
    }
}

/// Reads an 8/16/24-bit PCM WAV. Integer codes are scaled by `2^(bits-1)` and
/// multi-channel frames are averaged to mono.
pub fn load_wav<T: Real>(path: impl AsRef<Path>) -> Result<AudioBuffer<T>> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || !matches!(spec.bits_per_sample, 8 | 16 | 24) {
        return Err(format_err(
            path,
            format!("{:?} {}-bit samples (need 8/16/24-bit PCM)", spec.sample_format, spec.bits_per_sample),
        ));
    }
    let channels = spec.channels.max(1) as usize;
    let scale = 1.0 / (1u32 << (spec.bits_per_sample - 1)) as f64;
    let raw =
        reader.into_samples::<i32>().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| map_hound(path, e))?;
    if raw.len() % channels != 0 {
        return Err(Error::Io(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "truncated frame")));
    }
    let mono = raw
        .chunks_exact(channels)
        .map(|frame| T::of(frame.iter().map(|&s| s as f64 * scale).sum::<f64>() / channels as f64))
        .collect();
    AudioBuffer::new(mono, spec.sample_rate)
}

/// Writes a mono 16-bit PCM WAV, clipping to `[-1, 1)`.
pub fn write_wav<T: Real>(path: impl AsRef<Path>, buf: &AudioBuffer<T>) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate_hz(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in buf.samples() {
        let code = (s.as_f64() * 32_768.0).round().clamp(-32_768.0, 32_767.0) as i16;
        w.write_sample(code).map_err(|e| map_hound(path, e))?;
    }
    w.finalize().map_err(|e| map_hound(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_raw(path: &Path, channels: u16, bits: u16, frames: &[i32]) {
        let spec = WavSpec { channels, sample_rate: 8_000, bits_per_sample: bits, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(path, spec).unwrap();
        for &s in frames {
            match bits {
                8 => w.write_sample(s as i8).unwrap(),
                16 => w.write_sample(s as i16).unwrap(),
                _ => w.write_sample(s).unwrap(),
            }
        }
        w.finalize().unwrap();
    }

    #[test]
    fn silence_and_full_scale() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_raw(&p, 1, 16, &[0, 0, 32_767, -32_768]);
        let b: AudioBuffer<f64> = load_wav(&p).unwrap();
        assert_eq!(b.sample_rate_hz(), 8_000);
        assert_eq!(&b.samples()[..2], &[0.0, 0.0]);
        assert_eq!(b.samples()[2], 32_767.0 / 32_768.0);
        assert_eq!(b.samples()[3], -1.0);
    }

    #[test]
    fn stereo_downmix_by_mean() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        write_raw(&p, 2, 16, &[16_384, -16_384, 16_384, 0]);
        let b: AudioBuffer<f32> = load_wav(&p).unwrap();
        assert_eq!(b.samples(), &[0.0, 0.25]);
    }

    #[test]
    fn eight_and_twenty_four_bit() {
        let dir = tempfile::tempdir().unwrap();
        let p8 = dir.path().join("8.wav");
        write_raw(&p8, 1, 8, &[64, -128]);
        let b: AudioBuffer<f64> = load_wav(&p8).unwrap();
        assert_eq!(b.samples(), &[0.5, -1.0]);
        let p24 = dir.path().join("24.wav");
        write_raw(&p24, 1, 24, &[1 << 22]);
        let b: AudioBuffer<f64> = load_wav(&p24).unwrap();
        assert_eq!(b.samples(), &[0.5]);
    }

    #[test]
    fn float_wav_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.wav");
        let spec = WavSpec { channels: 1, sample_rate: 8_000, bits_per_sample: 32, sample_format: SampleFormat::Float };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(0.5f32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(load_wav::<f64>(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn truncated_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.wav");
        write_raw(&p, 1, 16, &[1, 2, 3, 4, 5, 6]);
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(load_wav::<f64>(&p).is_err());
        assert!(matches!(load_wav::<f64>(dir.path().join("missing.wav")), Err(Error::Io(_))));
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rt.wav");
        let b = AudioBuffer::new(vec![0.0f64, 0.5, -0.25], 11_025).unwrap();
        write_wav(&p, &b).unwrap();
        assert_eq!(load_wav::<f64>(&p).unwrap(), b);
    }
}
