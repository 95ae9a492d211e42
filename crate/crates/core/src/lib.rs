//! sEMG-to-keystroke transcription.
//!
//! The pipeline mirrors how the data flows:
//!
//! * [`signal`]: multichannel recordings, Fourier resampling and spatial
//!   channel interpolation.
//! * [`corpus`]: the 32-key alphabet, finger assignments, keylog ingestion,
//!   block segmentation and a seeded synthetic sEMG generator.
//! * [`nn`]: the layer kernels (conv, pool, FC, batch norm, dropout, LSTM,
//!   softmax) with hand-written backward passes, plus Adam.
//! * [`net`]: the four-stage per-channel CNN -> LSTM -> classifier network,
//!   its training loop and k-fold cross-validation.
//! * [`ctc`]: CTC loss and greedy / prefix-beam decoding.
//! * [`channel`]: edit-distance scoring and the deletion / insertion /
//!   substitution noisy-channel model fitted by EM.

pub mod channel;
pub mod corpus;
pub mod ctc;
pub mod error;
pub mod net;
pub mod nn;
pub mod signal;

pub use error::{Error, Result};
