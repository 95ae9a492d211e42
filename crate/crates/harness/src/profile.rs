//! Named run profiles and the experiment description built from them.

use std::path::PathBuf;

use anyhow::{bail, Result};
use myotype::corpus::SynthConfig;
use myotype::net::{ModelConfig, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 8 channels, 5 s blocks, narrow network. Minutes on one core.
    Desk,
    /// 32 channels, 15 s blocks, full-size network.
    Paper,
}

/// Where the blocks come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Manifest(PathBuf),
    /// Generate one session in memory.
    Synth { cfg: SynthConfig, chars: usize, per_arm: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    None,
    Spatial(Vec<usize>),
    Temporal(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub profile: Profile,
    pub data: DataSource,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub sweep: Sweep,
    pub block_seconds: f64,
    /// Channels per arm of the source data.
    pub per_arm: usize,
    /// Use at most this many blocks (in dataset order).
    pub max_blocks: Option<usize>,
    pub out: PathBuf,
    pub seed: u64,
}

pub const DEFAULT_HZ: [u32; 6] = [100, 200, 400, 600, 1000, 2000];

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }

    pub fn per_arm(self) -> usize {
        match self {
            Profile::Desk => 4,
            Profile::Paper => 16,
        }
    }

    pub fn block_seconds(self) -> f64 {
        match self {
            Profile::Desk => 5.0,
            Profile::Paper => 15.0,
        }
    }

    pub fn blocks(self) -> usize {
        200
    }

    pub fn model(self, seed: u64) -> ModelConfig {
        let base = match self {
            Profile::Desk => ModelConfig::desk(),
            Profile::Paper => ModelConfig::paper(),
        };
        ModelConfig { seed, ..base }
    }

    pub fn train(self, seed: u64) -> TrainConfig {
        let base = match self {
            Profile::Desk => TrainConfig::desk(),
            Profile::Paper => TrainConfig::paper(),
        };
        TrainConfig { seed, ..base }
    }

    /// Characters to synthesize so that `blocks()` full blocks come out.
    pub fn synth_chars(self, cfg: &SynthConfig) -> usize {
        (self.blocks() as f64 * self.block_seconds() * cfg.chars_per_second * 1.02) as usize + 20
    }

    pub fn default_ks(self) -> Vec<usize> {
        match self {
            Profile::Desk => vec![1, 2, 3, 4],
            Profile::Paper => vec![1, 2, 4, 6, 8, 10, 12, 14, 16],
        }
    }
}

/// Synthesis settings for a seed: high SNR, default timing.
pub fn synth_config(seed: u64) -> SynthConfig {
    SynthConfig { seed, ..SynthConfig::default() }
}

impl ExperimentSpec {
    /// Profile defaults with synthetic in-memory data.
    pub fn from_profile(profile: Profile, seed: u64, out: PathBuf) -> Self {
        let cfg = synth_config(seed);
        ExperimentSpec {
            profile,
            data: DataSource::Synth { chars: profile.synth_chars(&cfg), cfg, per_arm: profile.per_arm() },
            model: profile.model(seed),
            train: profile.train(seed),
            sweep: Sweep::None,
            block_seconds: profile.block_seconds(),
            per_arm: profile.per_arm(),
            max_blocks: Some(profile.blocks()),
            out,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.sweep {
            Sweep::None => {}
            Sweep::Spatial(ks) => {
                if ks.is_empty() {
                    bail!("spatial sweep needs at least one k");
                }
                for &k in ks {
                    if k == 0 || k > 16 || k > self.per_arm {
                        bail!("k = {k} outside [1, {}]", self.per_arm.min(16));
                    }
                }
            }
            Sweep::Temporal(hz) => {
                if hz.is_empty() {
                    bail!("temporal sweep needs at least one rate");
                }
                for &h in hz {
                    if h == 0 || h > 2000 {
                        bail!("rate {h} Hz outside (0, 2000]");
                    }
                }
            }
        }
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }
}
