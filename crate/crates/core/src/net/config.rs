use serde::{Deserialize, Serialize};

use crate::corpus::N_CLASSES;
use crate::error::{Error, Result};

/// Largest admissible front-end receptive field, in input samples.
pub const LATENCY_BUDGET_SAMPLES: usize = 200;

/// Architecture hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_channels: usize,
    pub conv_kernels: Vec<usize>,
    pub conv_widths: Vec<usize>,
    pub pool_width: usize,
    pub pool_stride: usize,
    pub merge_fc: usize,
    pub lstm_hidden: Vec<usize>,
    /// Head layer widths; the last one is the class count.
    pub head_fc: Vec<usize>,
    pub dropout: f64,
    /// Multiplier applied to raw samples before the first convolution.
    pub input_scale: f64,
    /// Left-pad each convolution by `k - 1` so it keeps the sequence length.
    pub causal_padding: bool,
    /// Interleave the separator class between consecutive label symbols.
    pub separators: bool,
    pub seed: u64,
}

impl ModelConfig {
    /// Full-size configuration: 32 channels, 50 features per channel.
    pub fn paper() -> Self {
        ModelConfig {
            n_channels: 32,
            conv_kernels: vec![9, 9, 9],
            conv_widths: vec![16, 32, 50],
            pool_width: 3,
            pool_stride: 3,
            merge_fc: 128,
            lstm_hidden: vec![128, 64],
            head_fc: vec![64, 64, N_CLASSES],
            dropout: 0.2,
            input_scale: 1e-3,
            causal_padding: true,
            separators: false,
            seed: 0,
        }
    }

    /// Scaled-down configuration for 8-channel desk runs.
    pub fn desk() -> Self {
        ModelConfig {
            n_channels: 8,
            conv_widths: vec![4, 8, 8],
            merge_fc: 32,
            lstm_hidden: vec![32, 32],
            head_fc: vec![32, 32, N_CLASSES],
            dropout: 0.1,
            ..ModelConfig::paper()
        }
    }

    pub fn per_channel_features(&self) -> usize {
        *self.conv_widths.last().unwrap_or(&0)
    }

    /// `rf ← rf + (k − 1)·jump` through each convolution and pool,
    /// `jump ← jump·stride` after each pool.
    pub fn receptive_field(&self) -> usize {
        let (mut rf, mut jump) = (1usize, 1usize);
        for &k in &self.conv_kernels {
            rf += (k - 1) * jump;
            rf += (self.pool_width - 1) * jump;
            jump *= self.pool_stride;
        }
        rf
    }

    pub fn downsampling(&self) -> usize {
        self.pool_stride.pow(self.conv_kernels.len() as u32)
    }

    /// Output frames for `t` input samples.
    pub fn output_len(&self, t: usize) -> Result<usize> {
        let mut t = t;
        for &k in &self.conv_kernels {
            if !self.causal_padding {
                if k > t {
                    return Err(Error::TooShort { len: t, needed: k });
                }
                t = t - k + 1;
            }
            if t < self.pool_width {
                return Err(Error::TooShort {
                    len: t,
                    needed: self.pool_width,
                });
            }
            t = (t - self.pool_width) / self.pool_stride + 1;
        }
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |arg: &'static str, why: &str| Err(Error::invalid(arg, why));
        if self.n_channels == 0 {
            return bad("n_channels", "must be positive");
        }
        if self.conv_kernels.len() != 3 || self.conv_widths.len() != 3 {
            return bad("conv_kernels", "three convolution stages are required");
        }
        if self.conv_kernels.iter().chain(&self.conv_widths).any(|&v| v == 0) {
            return bad("conv_widths", "kernel and feature widths must be positive");
        }
        if self.pool_width == 0 || self.pool_stride == 0 {
            return bad("pool_width", "must be positive");
        }
        if self.merge_fc == 0 || self.lstm_hidden.len() != 2 || self.lstm_hidden.contains(&0) {
            return bad("lstm_hidden", "two positive LSTM widths are required");
        }
        if self.head_fc.last() != Some(&N_CLASSES) || self.head_fc.contains(&0) {
            return bad("head_fc", "the last head layer must have one unit per class");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout", "rate must lie in [0, 1)");
        }
        if !(self.input_scale.is_finite() && self.input_scale > 0.0) {
            return bad("input_scale", "must be positive");
        }
        let rf = self.receptive_field();
        if rf >= LATENCY_BUDGET_SAMPLES {
            return Err(Error::LatencyBudget {
                rf,
                budget: LATENCY_BUDGET_SAMPLES,
            });
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("model config: {e}")))
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::paper()
    }
}

/// Optimization and evaluation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub folds: usize,
    pub beam_width: usize,
    /// Rescale the minibatch gradient to at most this global L2 norm
    /// (0 disables).
    pub clip_norm: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn paper() -> Self {
        TrainConfig {
            epochs: 300,
            batch_size: 32,
            lr: 1e-3,
            folds: 10,
            beam_width: 5,
            clip_norm: 0.0,
            seed: 0,
        }
    }

    pub fn desk() -> Self {
        TrainConfig {
            epochs: 25,
            batch_size: 2,
            lr: 3e-3,
            folds: 5,
            clip_norm: 5.0,
            ..TrainConfig::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::invalid("folds", "at least 2 folds are required"));
        }
        if self.batch_size < 1 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if self.beam_width < 1 {
            return Err(Error::invalid("beam_width", "must be at least 1"));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::invalid("lr", "must be positive"));
        }
        if !(self.clip_norm >= 0.0) {
            return Err(Error::invalid("clip_norm", "must be non-negative"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("train config: {e}")))
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::paper()
    }
}
