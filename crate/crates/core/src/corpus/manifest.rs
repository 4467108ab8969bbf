use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DatasetSplit, LabeledWindow, SampleMeta};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::signal::{self, lowpass, resample, window_stream, AudioBuffer, FilterSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: usize,
}

#[derive(Deserialize)]
struct Row {
    path: String,
    label: usize,
}

/// Reads a `path,label` CSV (extra columns ignored). Relative paths resolve
/// against the manifest's directory.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        if row.label > 1 {
            return Err(Error::Param(format!("label {} for {} is not 0 or 1", row.label, row.path)));
        }
        let p = PathBuf::from(&row.path);
        out.push(ManifestEntry { path: if p.is_absolute() { p } else { base.join(p) }, label: row.label });
    }
    Ok(out)
}

/// Band-limits and converts a recording to `target_hz`. The low-pass runs only
/// when the source rate can hold the filter's stop band.
pub fn condition<T: Real>(buf: &AudioBuffer<T>, target_hz: u32, filter: &FilterSpec) -> Result<AudioBuffer<T>> {
    let filtered = if filter.validate(buf.sample_rate_hz()).is_ok() && buf.sample_rate_hz() > target_hz {
        lowpass(buf, filter)?
    } else {
        buf.clone()
    };
    resample(&filtered, target_hz as i64)
}

/// Loads every manifest entry, conditions it and cuts it into labelled windows.
pub fn load_manifest_windows<T: Real>(
    entries: &[ManifestEntry],
    target_hz: u32,
    filter: &FilterSpec,
    window_s: f64,
    hop_s: f64,
) -> Result<Vec<LabeledWindow<T>>> {
    let mut out = Vec::new();
    for entry in entries {
        let raw = signal::load_wav::<T>(&entry.path)?;
        let buf = condition(&raw, target_hz, filter)?;
        for window in window_stream(&buf, window_s, hop_s)? {
            let id = out.len();
            let meta = SampleMeta {
                id,
                label: entry.label,
                noise: None,
                walkers: 0,
                seed: 0,
                source: Some(format!("{}@{}", entry.path.display(), window.start_index)),
            };
            out.push(LabeledWindow { window, label: entry.label, meta });
        }
    }
    Ok(out)
}

/// Same as [`load_manifest_windows`] starting from a manifest file.
pub fn import_manifest<T: Real>(
    manifest: impl AsRef<Path>,
    target_hz: u32,
    filter: &FilterSpec,
    window_s: f64,
    hop_s: f64,
) -> Result<Vec<LabeledWindow<T>>> {
    load_manifest_windows(&read_manifest(manifest)?, target_hz, filter, window_s, hop_s)
}

/// Writes `<dir>/<split>/<id>.wav` for every window plus `<dir>/labels.csv`,
/// which is itself a valid manifest.
pub fn dump_dataset<T: Real>(dir: impl AsRef<Path>, data: &DatasetSplit<LabeledWindow<T>>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let labels = dir.join("labels.csv");
    let mut w = csv::Writer::from_path(&labels)?;
    w.write_record(["path", "label", "split", "noise", "walkers", "seed"])?;
    for (name, part) in data.parts() {
        std::fs::create_dir_all(dir.join(name))?;
        for s in part {
            let rel = format!("{name}/{:06}.wav", s.meta.id);
            signal::write_wav(dir.join(&rel), &s.window.to_buffer())?;
            let noise = s.meta.noise.map(|k| k.name().to_string()).unwrap_or_default();
            w.write_record([
                rel,
                s.label.to_string(),
                name.to_string(),
                noise,
                s.meta.walkers.to_string(),
                s.meta.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(labels)
}
