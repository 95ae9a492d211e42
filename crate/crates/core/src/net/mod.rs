//! The transcription network, its training loop and cross-validation.

mod config;
mod extractor;
mod model;
mod train;

pub use config::{ModelConfig, TrainConfig, LATENCY_BUDGET_SAMPLES};
pub use model::{Trace, TypingNet};
pub use train::{
    cross_validate, decode_inputs, decode_prepared, encode_target, fold_assignment, prepare_blocks, train,
    train_prepared, EpochRecord, FoldResult, PreparedBlock, TrainHistory, Transcript,
};
