//! Labelled corpora: a deterministic synthetic stand-in for field recordings of
//! footsteps on gravel over natural background noise, the two augmentation
//! operations (circular roll, additive noise), balanced splits, and CSV
//! manifests for bringing real WAV files in.

mod augment;
mod dataset;
mod manifest;
mod synth;

pub use augment::{augment_noise, augment_roll, mix};
pub use dataset::{
    allocate_largest_remainder, build_dataset, plan_dataset, render_sample, DatasetSplit, LabeledWindow, SampleMeta,
    SynthSpec, REFERENCE_SPLIT,
};
pub use manifest::{condition, dump_dataset, import_manifest, load_manifest_windows, read_manifest, ManifestEntry};
pub use synth::{synth_background, synth_footsteps, synth_footsteps_with, FootstepModel, NoiseKind};

pub const BACKGROUND: usize = 0;
pub const FOOTSTEPS: usize = 1;
