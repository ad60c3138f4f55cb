//! Dual encoders, the three similarity/classification losses, analytic
//! gradients and the AdamW training loop.

mod checkpoint;
pub mod gradcheck;
pub mod loss;
mod objective;
mod optim;
mod params;
mod train;
mod vocab;

pub use checkpoint::{load_model, save_model, Checkpoint, NamedTensor, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use loss::{cosine_sim_matrix, loss_clip, loss_logic, loss_mc};
pub use objective::{loss_and_grad, loss_total, Batch, BatchItem, LossBreakdown, LossWeights, ObjectiveOptions};
pub use optim::{default_warmup, learning_rate, AdamW, AdamWConfig};
pub use params::{
    EncoderParams, ModelDims, Tensor, INIT_TEMPERATURE, MAX_TEMPERATURE, MIN_TEMPERATURE, TENSOR_NAMES,
};
pub use train::{train, train_with, Model, StepLog, TrainConfig, TrainOutcome};
pub use vocab::{Vocab, DEFAULT_MAX_VOCAB, UNK};
