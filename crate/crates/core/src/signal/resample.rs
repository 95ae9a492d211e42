//! Fourier-domain (periodic) resampling.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{Recording, Samples};
use crate::error::{Error, Result};

/// Output length for a rate change: `round(n * target / rate)`.
pub fn resample_len(n_samples: usize, rate: u32, target_hz: u32) -> usize {
    (n_samples as f64 * target_hz as f64 / rate as f64).round() as usize
}

/// Resizes one periodic signal to `m` samples by truncating or zero-padding
/// its spectrum.
///
/// An even-length Nyquist bin is folded when shrinking and split in half
/// when growing, so the output stays real and shrink(grow(x)) == x.
pub fn spectral_resize(x: &[f64], m: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = x.len();
    if n == 0 || m == 0 {
        return vec![0.0; m];
    }
    let mut spec: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spec);

    let mut out = vec![Complex64::new(0.0, 0.0); m];
    let common = n.min(m);
    let nyq = common / 2 + 1;
    out[..nyq].copy_from_slice(&spec[..nyq]);
    let neg = common - nyq;
    if neg > 0 {
        out[m - neg..].copy_from_slice(&spec[n - neg..]);
    }
    if common % 2 == 0 {
        let h = common / 2;
        if m < n {
            out[h] += spec[n - h];
        } else if m > n {
            out[h] *= 0.5;
            out[m - h] = out[h];
        }
    }
    planner.plan_fft_inverse(m).process(&mut out);
    // Unnormalized inverse divides by m; the length ratio m/n cancels it.
    let scale = 1.0 / n as f64;
    out.iter().map(|c| c.re * scale).collect()
}

fn resize_recording(rec: &Recording, m: usize, rate: u32) -> Result<Recording> {
    let channels: Vec<Vec<f64>> = (0..rec.n_channels())
        .into_par_iter()
        .map_init(FftPlanner::new, |planner, c| {
            spectral_resize(&rec.channel(c), m, planner)
        })
        .collect();
    let data = channels.into_iter().flatten().collect();
    Recording::new(rate, rec.n_channels(), Samples::Float64(data), rec.session_id())
}

/// Resamples every channel independently to `target_hz`.
pub fn resample_temporal(rec: &Recording, target_hz: u32) -> Result<Recording> {
    if rec.is_empty() {
        return Err(Error::EmptyInput);
    }
    if target_hz == 0 {
        return Err(Error::invalid("target_hz", "must be positive"));
    }
    let m = resample_len(rec.n_samples(), rec.sample_rate(), target_hz);
    if m < 2 {
        return Err(Error::DegenerateRate(m));
    }
    resize_recording(rec, m, target_hz)
}

/// Band-limits a recording by resampling down to `low_hz` and back up to
/// the original rate and length. At the native rate the recording is
/// returned unchanged.
pub fn roundtrip_degrade(rec: &Recording, low_hz: u32) -> Result<Recording> {
    if low_hz == 0 || low_hz > rec.sample_rate() {
        return Err(Error::invalid(
            "low_hz",
            format!("{low_hz} outside (0, {}]", rec.sample_rate()),
        ));
    }
    if low_hz == rec.sample_rate() {
        return Ok(rec.clone());
    }
    let low = resample_temporal(rec, low_hz)?;
    resize_recording(&low, rec.n_samples(), rec.sample_rate())
}
