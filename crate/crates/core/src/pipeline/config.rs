use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::SynthSpec;
use crate::error::{param, Error, Result};
use crate::hwsim::Comparator;
use crate::mlp::TrainConfig;
use crate::robustness::{InferencePath, PerturbMode, Rounding};
use crate::snn::{SnnConfig, DEFAULT_R_GRID, DEFAULT_VT_GRID};
use crate::tespar::{DEFAULT_D_MAX, DEFAULT_SLICE_S, DEFAULT_S_MAX};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Whole-pipeline configuration, read from TOML. Unknown keys are rejected.
///
/// The top-level `seed` is the only seed: it replaces the corpus, training,
/// spiking and perturbation seeds when the config is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub paths: PathsConfig,
    pub features: FeatureConfig,
    pub corpus: SynthSpec,
    pub train: TrainConfig,
    pub snn: SnnSection,
    pub sweep: SweepConfig,
    pub hw: HwSection,
    pub energy: EnergySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 7,
            paths: PathsConfig::default(),
            features: FeatureConfig::default(),
            corpus: SynthSpec::default(),
            train: TrainConfig::default(),
            snn: SnnSection::default(),
            sweep: SweepConfig::default(),
            hw: HwSection::default(),
            energy: EnergySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub corpus_dir: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { corpus_dir: None, model: None, out_dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub fs_hz: u32,
    pub d_max: usize,
    pub s_max: usize,
    pub window_s: f64,
    pub slice_s: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { fs_hz: 11_025, d_max: DEFAULT_D_MAX, s_max: DEFAULT_S_MAX, window_s: 5.0, slice_s: DEFAULT_SLICE_S }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SnnSection {
    pub r_max_hz: f64,
    /// Used when `tune_vt` is off.
    pub v_t: f64,
    pub dt_s: f64,
    pub n_steps: usize,
    pub r_grid: Vec<f64>,
    pub vt_grid: Vec<f64>,
    /// Pick the threshold at `r_max_hz` with the best validation accuracy.
    pub tune_vt: bool,
}

impl Default for SnnSection {
    fn default() -> Self {
        let d = SnnConfig::default();
        Self {
            r_max_hz: d.r_max_hz,
            v_t: d.v_t,
            dt_s: d.dt_s,
            n_steps: d.n_steps,
            r_grid: DEFAULT_R_GRID.to_vec(),
            vt_grid: DEFAULT_VT_GRID.to_vec(),
            tune_vt: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub int_bits: u32,
    pub frac_bits: Vec<u32>,
    pub rounding: Rounding,
    pub sigmas_pct: Vec<f64>,
    pub n_trials: usize,
    pub perturb_mode: PerturbMode,
    pub paths: Vec<InferencePath>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            int_bits: 3,
            frac_bits: (1..=8).collect(),
            rounding: Rounding::Nearest,
            sigmas_pct: vec![0.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 75.0, 100.0],
            n_trials: 10,
            perturb_mode: PerturbMode::Relative,
            paths: vec![InferencePath::Ann, InferencePath::Snn],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HwSection {
    pub comparator: Comparator,
    /// Run the bit-level model on the test split.
    pub enabled: bool,
}

impl Default for HwSection {
    fn default() -> Self {
        Self { comparator: Comparator::GreaterEqual, enabled: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct EnergySection {
    /// Replacement for the bundled per-spike energy table.
    pub table: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "config schema version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Propagates the master seed and feature settings into module configs.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.corpus.seed = c.seed;
        c.corpus.sample_rate_hz = c.features.fs_hz;
        c.corpus.duration_s = c.features.window_s;
        c.train.seed = c.seed;
        c
    }

    pub fn snn_config(&self) -> SnnConfig {
        SnnConfig {
            r_max_hz: self.snn.r_max_hz,
            v_t: self.snn.v_t,
            dt_s: self.snn.dt_s,
            n_steps: self.snn.n_steps,
            seed: self.seed,
            ..SnnConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return param(format!("unsupported schema version {}", self.schema_version));
        }
        let f = &self.features;
        if f.fs_hz == 0 || f.d_max == 0 || f.s_max == 0 {
            return param("fs_hz, d_max and s_max must be positive");
        }
        if !(f.window_s > 0.0 && f.slice_s > 0.0 && f.slice_s <= f.window_s) {
            return param("need 0 < slice_s <= window_s");
        }
        let r = self.resolved();
        r.corpus.validate()?;
        r.train.validate()?;
        r.snn_config().validate()?;
        if self.snn.r_grid.is_empty() || self.snn.vt_grid.is_empty() {
            return param("snn grids must be non-empty");
        }
        if self.sweep.frac_bits.is_empty() || self.sweep.sigmas_pct.is_empty() || self.sweep.paths.is_empty() {
            return param("sweep lists must be non-empty");
        }
        if self.sweep.n_trials == 0 {
            return param("n_trials must be at least 1");
        }
        if self.sweep.sigmas_pct.iter().any(|s| !(*s >= 0.0)) {
            return param("sigmas must be non-negative");
        }
        Ok(())
    }
}
