#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Acoustic footstep detection with time-encoded (D/S) features and a
//! rate-coded spiking classifier.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod corpus;
pub mod energy;
pub mod error;
pub mod hwsim;
pub mod mlp;
pub mod num;
pub mod pipeline;
pub mod rng;
pub mod robustness;
pub mod signal;
pub mod snn;
pub mod spectral;
pub mod tespar;

pub use error::{Error, Result};
pub use num::Real;

pub type MlpModelF32 = mlp::MlpModel<f32>;
pub type MlpModelF64 = mlp::MlpModel<f64>;
pub type SampleF32 = mlp::Sample<f32>;
pub type SampleF64 = mlp::Sample<f64>;
pub type AudioBufferF32 = signal::AudioBuffer<f32>;
pub type AudioBufferF64 = signal::AudioBuffer<f64>;
pub type AudioWindowF32 = signal::AudioWindow<f32>;
pub type AudioWindowF64 = signal::AudioWindow<f64>;
pub type LabeledWindowF32 = corpus::LabeledWindow<f32>;
pub type LabeledWindowF64 = corpus::LabeledWindow<f64>;
pub type SpectralFvF64 = spectral::SpectralFv<f64>;
pub type NeuronStateF64 = snn::NeuronState<f64>;
