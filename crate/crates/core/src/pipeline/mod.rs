//! Configuration and glue that chains the modules into the end-to-end
//! experiment: corpus -> features -> training -> spiking sweeps -> robustness
//! sweeps -> energy, with hashed artifacts.

mod config;
mod features;
mod repro;

pub use config::{
    EnergySection, FeatureConfig, HwSection, PathsConfig, RunConfig, SnnSection, SweepConfig, CONFIG_SCHEMA_VERSION,
};
pub use features::{
    import_features, read_features_csv, synth_features, to_samples, window_features, write_features_csv,
    write_synth_corpus, FeatureRow, FeatureSplit,
};
pub use repro::{
    mean_spikes, read_manifest_json, repro, sha256_hex, tune_vt, verify_manifest, ArtifactEntry, Manifest, ReproSummary,
};
