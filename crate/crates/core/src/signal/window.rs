use super::{AudioBuffer, AudioWindow};
use crate::error::{param, Result};
use crate::num::Real;

/// Cuts `buf` into windows of `window_s` seconds every `hop_s` seconds.
///
/// Window `k` starts at `round(k * hop_s * rate)`; a trailing partial window is
/// dropped, so a buffer shorter than one window yields no windows.
pub fn window_stream<T: Real>(buf: &AudioBuffer<T>, window_s: f64, hop_s: f64) -> Result<Vec<AudioWindow<T>>> {
    if !(hop_s > 0.0 && window_s >= hop_s) {
        return param(format!("need window_s >= hop_s > 0, got window {window_s}, hop {hop_s}"));
    }
    let rate = buf.sample_rate_hz() as f64;
    let len = (window_s * rate).round() as usize;
    let mut out = Vec::new();
    for k in 0usize.. {
        let start = (k as f64 * hop_s * rate).round() as usize;
        let Some(slice) = buf.slice(start, len) else { break };
        let mut w = AudioWindow::new(slice.into_samples(), buf.sample_rate_hz(), window_s)?;
        w.start_index = start;
        out.push(w);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buf(seconds: f64) -> AudioBuffer<f64> {
        let n = (seconds * 1_000.0).round() as usize;
        AudioBuffer::new((0..n).map(|i| i as f64 / n as f64).collect(), 1_000).unwrap()
    }

    #[test]
    fn window_counts() {
        assert_eq!(window_stream(&buf(10.0), 5.0, 0.5).unwrap().len(), 11);
        assert_eq!(window_stream(&buf(5.0), 5.0, 5.0).unwrap().len(), 1);
        assert_eq!(window_stream(&buf(4.9), 5.0, 0.5).unwrap().len(), 0);
    }

    #[test]
    fn windows_tile_at_hop_stride() {
        let b = AudioBuffer::new((0..55_125 * 2).map(|i| i as f64).collect(), 11_025).unwrap();
        let ws = window_stream(&b, 5.0, 0.5).unwrap();
        for (k, w) in ws.iter().enumerate() {
            let start = (k as f64 * 0.5 * 11_025.0).round() as usize;
            assert_eq!(w.start_index, start);
            assert_eq!(w.samples()[0], start as f64);
            assert_eq!(w.len(), 55_125);
        }
    }

    #[test]
    fn rejects_bad_hop() {
        assert!(window_stream(&buf(10.0), 5.0, 0.0).is_err());
        assert!(window_stream(&buf(10.0), 1.0, 2.0).is_err());
    }
}
