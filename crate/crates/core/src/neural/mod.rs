//! Feed-forward tap-count classifier trained by manual backpropagation.

mod adam;
pub mod checkpoint;
mod layers;
mod network;
mod scheduler;
mod softmax;
mod tensor;

pub use adam::AdamState;
pub use layers::{
    BatchNormCache, BatchNormGrads, BatchNormLayer, DenseGrads, DenseLayer, DropoutLayer, Mode,
    ShrinkageLayer,
};
pub use network::{batch_ranges, train_epoch, ArchitectureConfig, EpochStats, Layer, LayerGrads, Network};
pub use scheduler::LrScheduler;
pub use softmax::{argmax, cross_entropy, softmax, softmax_ce_backward, softmax_cross_entropy};
pub use tensor::Tensor2;
