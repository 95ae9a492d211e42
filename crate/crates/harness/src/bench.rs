//! Single-block inference timing.

use std::time::Instant;

use anyhow::Result;
use myotype::net::{ModelConfig, TypingNet};
use myotype::signal::{Recording, Samples};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct BenchResult {
    pub channels: usize,
    pub samples: usize,
    pub sample_rate: u32,
    pub frames: usize,
    /// Median wall time of one forward pass, in seconds.
    pub seconds: f64,
    /// Signal duration over inference time.
    pub realtime_factor: f64,
}

/// Times `reps` forward passes over one random int16 block of `seconds`
/// at 2000 Hz, after one warm-up pass.
pub fn bench_inference(net: &TypingNet<f32>, block_seconds: f64, reps: usize, seed: u64) -> Result<BenchResult> {
    let rate = 2000u32;
    let n = (block_seconds * rate as f64).round() as usize;
    let c = net.cfg.n_channels;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<i16> = (0..c * n).map(|_| rng.random_range(-2000..2000)).collect();
    let rec = Recording::new(rate, c, Samples::Int16(data), "bench")?;
    let frames = net.forward(&rec)?.rows();
    let mut times: Vec<f64> = (0..reps.max(1))
        .map(|_| {
            let t0 = Instant::now();
            let out = net.forward(&rec);
            let dt = t0.elapsed().as_secs_f64();
            out.map(|_| dt)
        })
        .collect::<myotype::Result<_>>()?;
    times.sort_by(f64::total_cmp);
    let seconds = times[times.len() / 2];
    Ok(BenchResult { channels: c, samples: n, sample_rate: rate, frames, seconds, realtime_factor: block_seconds / seconds })
}

/// A freshly initialized full-size network.
pub fn paper_net(seed: u64) -> Result<TypingNet<f32>> {
    Ok(TypingNet::new(&ModelConfig { seed, ..ModelConfig::paper() })?)
}
