//! Multichannel recordings and the resolution-degradation transforms.

mod emgr;
mod resample;
mod spatial;

pub use emgr::{read_emgr, read_emgr_file, write_emgr, write_emgr_file, EMGR_MAGIC, EMGR_VERSION};
pub use resample::{resample_len, resample_temporal, roundtrip_degrade, spectral_resize};
pub use spatial::{downsample_spatial, spatial_positions};

use crate::error::{Error, Result};

/// Channel-major sample storage.
///
/// Raw acquisitions are 16-bit; anything produced by resampling or spatial
/// interpolation stays real-valued.
#[derive(Clone, Debug, PartialEq)]
pub enum Samples {
    Int16(Vec<i16>),
    Float32(Vec<f32>),
    Float64(Vec<f64>),
}

impl Samples {
    pub fn len(&self) -> usize {
        match self {
            Samples::Int16(v) => v.len(),
            Samples::Float32(v) => v.len(),
            Samples::Float64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Samples::Int16(_) => "int16",
            Samples::Float32(_) => "float32",
            Samples::Float64(_) => "float64",
        }
    }
}

/// A multichannel sEMG stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    sample_rate: u32,
    n_channels: usize,
    n_samples: usize,
    samples: Samples,
    session_id: String,
}

impl Recording {
    /// Builds a recording from channel-major samples (`n_channels` runs of
    /// equal length laid end to end).
    pub fn new(
        sample_rate: u32,
        n_channels: usize,
        samples: Samples,
        session_id: impl Into<String>,
    ) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample_rate", "must be positive"));
        }
        if n_channels == 0 {
            return Err(Error::invalid("n_channels", "must be at least 1"));
        }
        if samples.len() % n_channels != 0 {
            return Err(Error::Shape(format!(
                "{} {} samples do not split into {} equal channels",
                samples.len(),
                samples.kind_name(),
                n_channels
            )));
        }
        Ok(Recording {
            sample_rate,
            n_channels,
            n_samples: samples.len() / n_channels,
            samples,
            session_id: session_id.into(),
        })
    }

    /// Builds a real-valued recording from one vector per channel.
    pub fn from_channels(
        sample_rate: u32,
        channels: Vec<Vec<f64>>,
        session_id: impl Into<String>,
    ) -> Result<Self> {
        let n_channels = channels.len();
        let n = channels.first().map_or(0, Vec::len);
        if channels.iter().any(|c| c.len() != n) {
            return Err(Error::Shape("channels have different lengths".into()));
        }
        let data: Vec<f64> = channels.into_iter().flatten().collect();
        Recording::new(sample_rate, n_channels, Samples::Float64(data), session_id)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn set_session_id(&mut self, id: impl Into<String>) {
        self.session_id = id.into();
    }

    pub fn duration_seconds(&self) -> f64 {
        self.n_samples as f64 / self.sample_rate as f64
    }

    pub fn is_empty(&self) -> bool {
        self.n_samples == 0
    }

    /// Channel `ch` as f64 values.
    pub fn channel(&self, ch: usize) -> Vec<f64> {
        let r = self.channel_range(ch);
        match &self.samples {
            Samples::Int16(v) => v[r].iter().map(|&s| s as f64).collect(),
            Samples::Float32(v) => v[r].iter().map(|&s| s as f64).collect(),
            Samples::Float64(v) => v[r].to_vec(),
        }
    }

    /// Writes channel `ch`, scaled by `scale`, into `out` as f32.
    pub fn channel_into_f32(&self, ch: usize, scale: f32, out: &mut [f32]) {
        let r = self.channel_range(ch);
        match &self.samples {
            Samples::Int16(v) => {
                for (o, &s) in out.iter_mut().zip(&v[r]) {
                    *o = s as f32 * scale;
                }
            }
            Samples::Float32(v) => {
                for (o, &s) in out.iter_mut().zip(&v[r]) {
                    *o = s * scale;
                }
            }
            Samples::Float64(v) => {
                for (o, &s) in out.iter_mut().zip(&v[r]) {
                    *o = (s * scale as f64) as f32;
                }
            }
        }
    }

    pub fn channels(&self) -> Vec<Vec<f64>> {
        (0..self.n_channels).map(|c| self.channel(c)).collect()
    }

    /// Copies samples `[start, start + len)` of every channel.
    pub fn slice(&self, start: usize, len: usize) -> Result<Recording> {
        if start + len > self.n_samples {
            return Err(Error::invalid(
                "slice",
                format!("[{start}, {}) exceeds {} samples", start + len, self.n_samples),
            ));
        }
        let n = self.n_samples;
        fn cut<T: Copy>(v: &[T], nc: usize, n: usize, start: usize, len: usize) -> Vec<T> {
            (0..nc)
                .flat_map(|c| v[c * n + start..c * n + start + len].iter().copied())
                .collect()
        }
        let samples = match &self.samples {
            Samples::Int16(v) => Samples::Int16(cut(v, self.n_channels, n, start, len)),
            Samples::Float32(v) => Samples::Float32(cut(v, self.n_channels, n, start, len)),
            Samples::Float64(v) => Samples::Float64(cut(v, self.n_channels, n, start, len)),
        };
        Ok(Recording {
            sample_rate: self.sample_rate,
            n_channels: self.n_channels,
            n_samples: len,
            samples,
            session_id: self.session_id.clone(),
        })
    }

    fn channel_range(&self, ch: usize) -> std::ops::Range<usize> {
        assert!(ch < self.n_channels, "channel {ch} out of range");
        ch * self.n_samples..(ch + 1) * self.n_samples
    }
}

/// Physical channel arrangement: two arms, left arm first, `per_arm`
/// contiguous channels each.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChannelLayout {
    pub per_arm: usize,
}

impl ChannelLayout {
    pub const ARMS: usize = 2;

    pub fn new(per_arm: usize) -> Result<Self> {
        if per_arm == 0 {
            return Err(Error::invalid("per_arm", "must be at least 1"));
        }
        Ok(ChannelLayout { per_arm })
    }

    pub fn n_channels(&self) -> usize {
        self.per_arm * Self::ARMS
    }

    /// Channel index range of `arm` (0 = left, 1 = right).
    pub fn arm_range(&self, arm: usize) -> std::ops::Range<usize> {
        arm * self.per_arm..(arm + 1) * self.per_arm
    }
}

impl Default for ChannelLayout {
    fn default() -> Self {
        ChannelLayout { per_arm: 16 }
    }
}
