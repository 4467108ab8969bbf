use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::features::{synth_features, to_samples, write_features_csv};
use crate::energy::{energy_csv, energy_estimate, op_counts, EnergyTable, OpCounts};
use crate::error::Result;
use crate::hwsim::{hw_infer, HwConfig, WeightRom};
use crate::mlp::{evaluate, train, write_model, MlpModel, Sample};
use crate::robustness::{
    quant_csv, quant_sweep, quantize_model, robustness_sweep, variation_csv, PerturbSpec, QuantRow, VariationRow,
    HW_FORMAT,
};
use crate::snn::{evaluate_snn, run_snn_scaled, sample_seed, sweep_rv, SnnConfig};
use crate::tespar::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub artifacts: Vec<ArtifactEntry>,
}

/// Headline numbers of one end-to-end run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproSummary {
    pub seed: u64,
    pub split_sizes: [usize; 3],
    pub best_epoch: usize,
    pub ann_val_accuracy: f64,
    pub ann_test_accuracy: f64,
    pub snn_r_hz: f64,
    pub snn_v_t: f64,
    pub snn_val_accuracy: f64,
    pub snn_test_accuracy: f64,
    pub hw_test_accuracy: Option<f64>,
    /// Mean spikes per test inference, per layer.
    pub mean_spikes_per_layer: Vec<f64>,
    pub n_spk: u64,
    pub ops: OpCounts,
    pub quant: Vec<QuantRow>,
    pub variation: Vec<VariationRow>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Writer<'a> {
    dir: &'a Path,
    entries: Vec<ArtifactEntry>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::write(self.dir.join(name), bytes)?;
        self.entries.push(ArtifactEntry { path: name.into(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    fn put_file(&mut self, name: &str) -> Result<()> {
        let bytes = std::fs::read(self.dir.join(name))?;
        self.entries.push(ArtifactEntry { path: name.into(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
        Ok(())
    }
}

/// Best threshold on the validation split at a fixed input rate.
pub fn tune_vt<T: crate::Real>(
    model: &MlpModel<T>,
    validation: &[Sample<T>],
    vt_grid: &[f64],
    cfg: &SnnConfig,
) -> Result<(f64, f64)> {
    let grid = sweep_rv(model, validation, &[cfg.r_max_hz], vt_grid, cfg)?;
    Ok(grid.best_vt(cfg.r_max_hz).expect("rate present in its own grid"))
}

/// Mean per-layer spike totals over a set of inputs.
pub fn mean_spikes<T: crate::Real>(model: &MlpModel<T>, samples: &[Sample<T>], cfg: &SnnConfig) -> Result<Vec<f64>> {
    let mut sums = vec![0u64; model.dims().len()];
    for (k, s) in samples.iter().enumerate() {
        let st = run_snn_scaled(model, &s.x, &SnnConfig { seed: sample_seed(cfg.seed, k), ..cfg.clone() })?;
        for (a, b) in sums.iter_mut().zip(&st.spikes_per_layer) {
            *a += b;
        }
    }
    Ok(sums.iter().map(|&v| v as f64 / samples.len().max(1) as f64).collect())
}

fn hw_accuracy(model: &MlpModel<f64>, rows: &[FeatureVector], labels: &[usize], cfg: &HwConfig) -> Result<f64> {
    let mut correct = 0;
    for (k, (fv, &label)) in rows.iter().zip(labels).enumerate() {
        let c = HwConfig { seed: sample_seed(cfg.seed, k), ..cfg.clone() };
        correct += (hw_infer(fv, model, &c)?.predicted == label) as usize;
    }
    Ok(correct as f64 / rows.len().max(1) as f64)
}

/// Synthesises the corpus, trains, sweeps and writes every artifact plus a
/// `manifest.json` of content hashes into `out`.
pub fn repro(cfg: &RunConfig, out: &Path) -> Result<ReproSummary> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    std::fs::create_dir_all(out)?;
    let mut w = Writer { dir: out, entries: Vec::new() };
    w.put("config.toml", cfg.to_toml().as_bytes())?;

    let feats = synth_features::<f64>(&cfg.corpus, cfg.features.d_max, cfg.features.s_max)?;
    write_features_csv(&out.join("features.csv"), &feats)?;
    w.put_file("features.csv")?;
    let (tr, va, te) =
        (to_samples::<f64>(&feats.train), to_samples::<f64>(&feats.validation), to_samples::<f64>(&feats.test));

    let n_in = cfg.features.d_max * cfg.features.s_max;
    let dims = [n_in, 80, 2];
    let outcome = train(&dims, &tr, &va, &cfg.train)?;
    let model = outcome.model;
    write_model(out.join("model.txt"), &model)?;
    w.put_file("model.txt")?;
    let mut curve = String::from("epoch,train_loss,train_accuracy,val_accuracy\n");
    for r in &outcome.curve {
        let _ = writeln!(curve, "{},{:.6},{:.6},{:.6}", r.epoch, r.train_loss, r.train_accuracy, r.val_accuracy);
    }
    w.put("training_curve.csv", curve.as_bytes())?;
    let ann_test = evaluate(&model, &te)?;

    let mut snn_cfg = cfg.snn_config();
    let (v_t, snn_val) = if cfg.snn.tune_vt {
        tune_vt(&model, &va, &cfg.snn.vt_grid, &snn_cfg)?
    } else {
        (cfg.snn.v_t, evaluate_snn(&model, &va, &snn_cfg)?)
    };
    snn_cfg.v_t = v_t;
    let table = sweep_rv(&model, &te, &cfg.snn.r_grid, &cfg.snn.vt_grid, &snn_cfg)?;
    w.put("rv_sweep.csv", table.to_csv().as_bytes())?;
    let snn_test = evaluate_snn(&model, &te, &snn_cfg)?;
    let spikes = mean_spikes(&model, &te, &snn_cfg)?;
    let n_spk = spikes.iter().sum::<f64>().round() as u64;
    let rounded: Vec<u64> = spikes.iter().map(|v| v.round() as u64).collect();
    let ops = op_counts(&rounded, &dims)?;

    let quant = quant_sweep(
        &model,
        &te,
        cfg.sweep.int_bits,
        &cfg.sweep.frac_bits,
        cfg.sweep.rounding,
        &cfg.sweep.paths,
        &snn_cfg,
    )?;
    w.put("quant_sweep.csv", quant_csv(&quant).as_bytes())?;
    let perturb =
        PerturbSpec { sigma_pct: 0.0, n_trials: cfg.sweep.n_trials, seed: cfg.seed, mode: cfg.sweep.perturb_mode };
    let variation = robustness_sweep(&model, &te, &cfg.sweep.sigmas_pct, &perturb, &cfg.sweep.paths, &snn_cfg)?;
    w.put("variation_sweep.csv", variation_csv(&variation).as_bytes())?;

    let hw_test = if cfg.hw.enabled {
        let q = quantize_model(&model, HW_FORMAT, cfg.sweep.rounding);
        for (l, layer) in q.layers().iter().enumerate() {
            w.put(&format!("rom_layer{}.hex", l + 1), WeightRom::from_layer(layer, HW_FORMAT)?.to_hex().as_bytes())?;
        }
        let hw_cfg = HwConfig {
            n_steps: snn_cfg.n_steps,
            v_t,
            comparator: cfg.hw.comparator,
            seed: cfg.seed,
            ..HwConfig::default()
        };
        let fvs: Vec<FeatureVector> = feats.test.iter().map(|r| r.fv.clone()).collect();
        let labels: Vec<usize> = feats.test.iter().map(|r| r.meta.label).collect();
        Some(hw_accuracy(&q, &fvs, &labels, &hw_cfg)?)
    } else {
        None
    };

    let energy_table = match &cfg.energy.table {
        Some(p) => EnergyTable::load(p)?,
        None => EnergyTable::default(),
    };
    w.put("energy.csv", energy_csv(&energy_estimate(n_spk, &energy_table)).as_bytes())?;

    let summary = ReproSummary {
        seed: cfg.seed,
        split_sizes: [feats.train.len(), feats.validation.len(), feats.test.len()],
        best_epoch: outcome.best_epoch,
        ann_val_accuracy: outcome.best_val_accuracy,
        ann_test_accuracy: ann_test,
        snn_r_hz: snn_cfg.r_max_hz,
        snn_v_t: v_t,
        snn_val_accuracy: snn_val,
        snn_test_accuracy: snn_test,
        hw_test_accuracy: hw_test,
        mean_spikes_per_layer: spikes,
        n_spk,
        ops,
        quant,
        variation,
    };
    w.put("summary.json", serde_json::to_string_pretty(&summary)?.as_bytes())?;

    let manifest = Manifest { schema_version: cfg.schema_version, seed: cfg.seed, artifacts: w.entries };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(summary)
}

pub fn read_manifest_json(path: &Path) -> Result<Manifest> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Recomputes every artifact hash; returns the paths that differ.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let m = read_manifest_json(&dir.join("manifest.json"))?;
    let mut bad = Vec::new();
    for a in &m.artifacts {
        match std::fs::read(dir.join(&a.path)) {
            Ok(b) if sha256_hex(&b) == a.sha256 => {}
            _ => bad.push(a.path.clone()),
        }
    }
    Ok(bad)
}
