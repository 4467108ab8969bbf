//! Bit-level model of the digital inference datapath: per-lane LFSR spike
//! generation, leading-zero-count address scanning, a fixed-point
//! integrate-and-fire array fed from a weight ROM, and the saturating D/S slice
//! register file.

mod infer;
mod lfsr;
mod neuron;
mod slice;
mod word;

pub use infer::{
    fv_codes, hw_encode_spikes, hw_infer, hw_infer_injected, hw_run, lane_lfsrs, seed_warnings, trace_hex, Comparator,
    HwConfig, HwRun, ACC_CLAMP,
};
pub use lfsr::{lfsr_next, Lfsr11, LFSR_PERIOD};
pub use neuron::{fixed_if_layer_step, FixedIfNeuron, WeightRom};
pub use slice::{SliceRegisterFile, SLICE_COUNTER_MAX};
pub use word::{lzc_scan, Lzc, SpikeWord};
