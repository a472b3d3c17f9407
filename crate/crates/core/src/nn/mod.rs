//! A small reverse-mode network stack: tensors, layers with explicit backward
//! passes, squeeze-and-excitation, the fused classifier, training and metrics.

mod checkpoint;
pub mod layers;
mod metrics;
mod model;
pub mod se;
mod tensor;
mod train;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use metrics::{confusion_metrics, evaluate, Metrics};
pub use model::{argmax, fc_head, sgd_step, InputDims, Model, ModelConfig, Trace};
pub use se::SEParams;
pub use tensor::{Param, Tensor};
pub use train::{train, EpochRecord, Sample, TrainOutcome};
