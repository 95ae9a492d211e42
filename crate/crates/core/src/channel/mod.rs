//! Edit-distance scoring and the EM-fitted noisy-channel error model.

mod edit;
mod finger;
mod model;

pub use edit::{apply_alignment, char_accuracy, corpus_accuracy, edit_distance, EditOp};
pub use finger::{adjacent_substitution_share, finger_confusion, FingerConfusion};
pub use model::{
    em_fit, em_fit_observed, expected_counts, fit_paper_style, maximize, pair_counts, pair_log_likelihood, ChannelCounts,
    ChannelModel, EmFit, EmOptions,
};
