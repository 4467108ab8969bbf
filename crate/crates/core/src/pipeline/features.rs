use std::path::Path;

use serde::{Deserialize, Serialize};

use rand::seq::SliceRandom;

use crate::corpus::{
    allocate_largest_remainder, condition, plan_dataset, render_sample, DatasetSplit, LabeledWindow, NoiseKind,
    SampleMeta, SynthSpec, REFERENCE_SPLIT,
};
use crate::error::{Error, Result};
use crate::mlp::Sample;
use crate::num::Real;
use crate::rng;
use crate::signal::{self, FilterSpec};
use crate::tespar::{extract_fv, FeatureVector};

/// One window's feature vector and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub meta: SampleMeta,
    pub fv: FeatureVector,
}

pub type FeatureSplit = DatasetSplit<FeatureRow>;

pub fn window_features<T: Real>(w: &LabeledWindow<T>, d_max: usize, s_max: usize) -> Result<FeatureRow> {
    Ok(FeatureRow { meta: w.meta.clone(), fv: extract_fv(w.window.samples(), d_max, s_max)? })
}

/// Renders every planned window and keeps only its feature vector.
pub fn synth_features<T: Real>(spec: &SynthSpec, d_max: usize, s_max: usize) -> Result<FeatureSplit> {
    plan_dataset(spec)?.try_map(|m| window_features(&render_sample::<T>(spec, m)?, d_max, s_max))
}

/// Streams a synthetic corpus to `<dir>/<split>/<id>.wav` plus `labels.csv`
/// without holding the audio in memory.
pub fn write_synth_corpus<T: Real>(spec: &SynthSpec, dir: &Path) -> Result<std::path::PathBuf> {
    let plan = plan_dataset(spec)?;
    std::fs::create_dir_all(dir)?;
    let labels = dir.join("labels.csv");
    let mut w = csv::Writer::from_path(&labels)?;
    w.write_record(["path", "label", "split", "noise", "walkers", "seed"])?;
    for (name, part) in plan.parts() {
        std::fs::create_dir_all(dir.join(name))?;
        for m in part {
            let s = render_sample::<T>(spec, m)?;
            let rel = format!("{name}/{:06}.wav", m.id);
            signal::write_wav(dir.join(&rel), &s.window.to_buffer())?;
            let noise = m.noise.map(|k| k.name().to_string()).unwrap_or_default();
            w.write_record([
                rel,
                m.label.to_string(),
                name.to_string(),
                noise,
                m.walkers.to_string(),
                m.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(labels)
}

#[derive(Deserialize)]
struct ImportRow {
    path: String,
    label: usize,
    #[serde(default)]
    split: String,
    #[serde(default)]
    noise: String,
    #[serde(default)]
    walkers: usize,
}

/// Features for every window of every recording listed in a `path,label`
/// CSV (as written by [`write_synth_corpus`]). Recordings are band-limited,
/// resampled to `fs_hz` and cut into back-to-back windows. Rows without a
/// `split` column are assigned whole-file to train/validation/test in the
/// reference proportions after a seeded shuffle.
pub fn import_features(
    manifest: &Path,
    fs_hz: u32,
    window_s: f64,
    d_max: usize,
    s_max: usize,
    seed: u64,
) -> Result<FeatureSplit> {
    let base = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(manifest)?;
    let rows: Vec<ImportRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    if rows.is_empty() {
        return Err(Error::Param(format!("{} lists no recordings", manifest.display())));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut rng::stream(seed, &[0x1A9]));
    let sizes = allocate_largest_remainder(rows.len(), &REFERENCE_SPLIT);
    let mut assigned = vec![""; rows.len()];
    for (pos, &k) in order.iter().enumerate() {
        assigned[k] = if pos < sizes[0] {
            "train"
        } else if pos < sizes[0] + sizes[1] {
            "validation"
        } else {
            "test"
        };
    }
    let mut out = FeatureSplit { train: Vec::new(), validation: Vec::new(), test: Vec::new(), notes: Vec::new() };
    let mut id = 0;
    for (k, row) in rows.iter().enumerate() {
        if row.label > 1 {
            return Err(Error::Param(format!("label {} for {} is not 0 or 1", row.label, row.path)));
        }
        let p = Path::new(&row.path);
        let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let buf = condition(&signal::load_wav::<f64>(&full)?, fs_hz, &FilterSpec::default())?;
        let windows = signal::window_stream(&buf, window_s, window_s)?;
        if windows.is_empty() {
            out.notes.push(format!("{} is shorter than one window; skipped", row.path));
        }
        let noise = match row.noise.as_str() {
            "" => None,
            s => Some(s.parse::<NoiseKind>()?),
        };
        let split = if row.split.is_empty() { assigned[k] } else { row.split.as_str() };
        for w in windows {
            let meta = SampleMeta {
                id,
                label: row.label,
                noise,
                walkers: row.walkers,
                seed: 0,
                source: Some(row.path.clone()),
            };
            id += 1;
            let fr = FeatureRow { meta, fv: extract_fv(w.samples(), d_max, s_max)? };
            match split {
                "train" => out.train.push(fr),
                "validation" => out.validation.push(fr),
                "test" => out.test.push(fr),
                s => return Err(Error::Parse(format!("unknown split {s:?} for {}", row.path))),
            }
        }
    }
    Ok(out)
}

/// Max-normalised classifier inputs.
pub fn to_samples<T: Real>(rows: &[FeatureRow]) -> Vec<Sample<T>> {
    rows.iter().map(|r| Sample { x: r.fv.normalized(), label: r.meta.label }).collect()
}

fn column_name(k: usize, s_max: usize) -> String {
    format!("d{}_s{}", k / s_max + 1, k % s_max)
}

/// CSV: `split,id,label,noise,walkers,seed,source` then one `d<D>_s<S>`
/// column per bin.
pub fn write_features_csv(path: &Path, data: &FeatureSplit) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let Some(first) = data.parts().iter().flat_map(|(_, p)| p.iter()).next().cloned() else {
        return Err(Error::Param("no feature rows to write".into()));
    };
    let (d_max, s_max) = (first.fv.d_max, first.fv.s_max);
    let mut header: Vec<String> =
        ["split", "id", "label", "noise", "walkers", "seed", "source"].iter().map(|s| s.to_string()).collect();
    header.extend((0..d_max * s_max).map(|k| column_name(k, s_max)));
    w.write_record(&header)?;
    for (name, part) in data.parts() {
        for r in part {
            if r.fv.d_max != d_max || r.fv.s_max != s_max {
                return Err(Error::Param("feature rows mix different D/S grids".into()));
            }
            let mut rec = vec![
                name.to_string(),
                r.meta.id.to_string(),
                r.meta.label.to_string(),
                r.meta.noise.map(|k| k.name().to_string()).unwrap_or_default(),
                r.meta.walkers.to_string(),
                r.meta.seed.to_string(),
                r.meta.source.clone().unwrap_or_default(),
            ];
            rec.extend(r.fv.values.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv(path: &Path) -> Result<FeatureSplit> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    let bad = |msg: String| Error::Parse(format!("{}: {msg}", path.display()));
    if header.len() < 8 || &header[0] != "split" {
        return Err(bad("not a feature table".into()));
    }
    let bins: Vec<(usize, usize)> = header
        .iter()
        .skip(7)
        .map(|h| {
            let (d, s) =
                h.strip_prefix('d').and_then(|r| r.split_once("_s")).ok_or_else(|| bad(format!("bad column {h}")))?;
            Ok((
                d.parse().map_err(|_| bad(format!("bad column {h}")))?,
                s.parse().map_err(|_| bad(format!("bad column {h}")))?,
            ))
        })
        .collect::<Result<_>>()?;
    let d_max = bins.iter().map(|b| b.0).max().unwrap_or(0);
    let s_max = bins.iter().map(|b| b.1).max().unwrap_or(0) + 1;
    if d_max * s_max != bins.len() || bins.iter().enumerate().any(|(k, &(d, s))| (d - 1) * s_max + s != k) {
        return Err(bad("bin columns do not form a full D/S grid".into()));
    }
    let mut out = FeatureSplit { train: Vec::new(), validation: Vec::new(), test: Vec::new(), notes: Vec::new() };
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| rec[i].parse::<u64>().map_err(|_| bad(format!("bad number {:?}", &rec[i])));
        let noise = match &rec[3] {
            "" => None,
            s => Some(s.parse::<NoiseKind>()?),
        };
        let meta = SampleMeta {
            id: num(1)? as usize,
            label: num(2)? as usize,
            noise,
            walkers: num(4)? as usize,
            seed: num(5)?,
            source: (!rec[6].is_empty()).then(|| rec[6].to_string()),
        };
        let values = (7..rec.len()).map(|i| num(i).map(|v| v as u32)).collect::<Result<Vec<_>>>()?;
        let row = FeatureRow { meta, fv: FeatureVector { values, d_max, s_max } };
        match &rec[0] {
            "train" => out.train.push(row),
            "validation" => out.validation.push(row),
            "test" => out.test.push(row),
            s => return Err(bad(format!("unknown split {s:?}"))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let spec = SynthSpec { duration_s: 1.0, ..SynthSpec::with_total(10, 4) };
        let data = synth_features::<f32>(&spec, 4, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        write_features_csv(&p, &data).unwrap();
        let back = read_features_csv(&p).unwrap();
        assert_eq!(back.train, data.train);
        assert_eq!(back.validation, data.validation);
        assert_eq!(back.test, data.test);
    }

    #[test]
    fn import_matches_direct_features() {
        let spec = SynthSpec { duration_s: 1.0, ..SynthSpec::with_total(8, 5) };
        let dir = tempfile::tempdir().unwrap();
        let labels = write_synth_corpus::<f64>(&spec, dir.path()).unwrap();
        let imported = import_features(&labels, 11_025, 1.0, 10, 5, 0).unwrap();
        let direct = synth_features::<f64>(&spec, 10, 5).unwrap();
        assert_eq!(imported.len(), direct.len());
        assert_eq!(imported.test.len(), direct.test.len());
        // 16-bit storage nudges near-zero samples, which moves a few epochs between bins.
        for (a, b) in imported.parts().into_iter().zip(direct.parts()).flat_map(|((_, x), (_, y))| x.iter().zip(y)) {
            assert_eq!(a.meta.label, b.meta.label);
            let l1: u32 = a.fv.values.iter().zip(&b.fv.values).map(|(x, y)| x.abs_diff(*y)).sum();
            let total: u32 = b.fv.values.iter().sum();
            assert!(l1 * 50 <= total, "l1 {l1} of {total}");
        }
    }
}
