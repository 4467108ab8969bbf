//! Fully connected ReLU network trained with Adam on softmax cross-entropy.
//!
//! Weights are stored fan-in x fan-out so that row `i` of a layer holds every
//! outgoing weight of presynaptic neuron `i`, the layout the spiking engines
//! and the weight ROM consume directly.

mod io;
mod model;
mod train;

pub use io::{read_model, write_model, MODEL_FORMAT_VERSION};
pub use model::{cross_entropy, softmax, Activation, Layer, MlpModel};
pub use train::{evaluate, train, EpochRecord, Sample, TrainConfig, TrainOutcome};

/// Network shape used throughout: 50 D/S features, 80 hidden, 2 classes.
pub const DEFAULT_DIMS: [usize; 3] = [50, 80, 2];
