//! Seeded synthetic sEMG + keylog generator.
//!
//! Each key excites a small set of channels on its hand's arm with a Hann
//! envelope modulating band-limited noise. The channel set comes from the
//! finger (spatial centre on the arm), the row picks the carrier band and
//! the column tweaks centre and envelope length, so that same-finger
//! neighbours are the most similar signatures.

use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, Normal, StandardNormal};

use super::charset::{key_pos, CharSet, Finger, FingerMap};
use super::keylog::KeyLog;
use crate::error::{Error, Result};
use crate::signal::{ChannelLayout, Recording, Samples};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub chars_per_second: f64,
    /// Burst peak amplitude over baseline noise standard deviation.
    pub snr: f64,
    /// Standard deviation of burst onset around the logged press, in ms.
    pub jitter_ms: f64,
    /// Whether consecutive bursts may overlap in time.
    pub overlap: bool,
    /// Shortest possible inter-press interval, in ms. Gaps are this plus an
    /// exponential, keeping the mean at `1 / chars_per_second`.
    pub min_gap_ms: f64,
    /// Burst onset precedes the logged press by this much, in ms.
    pub lead_ms: f64,
    /// Peak burst amplitude in int16 units.
    pub amplitude: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            chars_per_second: 5.03,
            snr: 20.0,
            jitter_ms: 5.0,
            overlap: true,
            min_gap_ms: 40.0,
            lead_ms: 20.0,
            amplitude: 2000.0,
            sample_rate: 2000,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if !(self.chars_per_second > 0.0) {
            return Err(Error::invalid("chars_per_second", "must be positive"));
        }
        if !(self.snr > 0.0) {
            return Err(Error::invalid("snr", "must be positive"));
        }
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample_rate", "must be positive"));
        }
        if self.min_gap() * 1000.0 >= 1000.0 / self.chars_per_second {
            return Err(Error::invalid("min_gap_ms", "must be below the mean interval"));
        }
        Ok(())
    }

    fn min_gap(&self) -> f64 {
        let gap = if self.overlap {
            self.min_gap_ms
        } else {
            self.min_gap_ms.max(MAX_BURST_MS + self.lead_ms)
        };
        gap / 1000.0
    }
}

const MAX_BURST_MS: f64 = 150.0;
const CARRIER_TONES: usize = 6;

/// Deterministic per-key signal template.
#[derive(Clone, Debug, PartialEq)]
pub struct KeySignature {
    pub arm: usize,
    /// `(arm-local channel, gain)`, 2 to 4 entries, strongest first.
    pub channels: Vec<(usize, f64)>,
    pub band_hz: (f64, f64),
    pub duration_ms: f64,
}

/// Carrier band per keyboard row (top, home, bottom, space bar).
const ROW_BANDS: [(f64, f64); 4] = [(300.0, 480.0), (150.0, 260.0), (60.0, 120.0), (20.0, 60.0)];

fn finger_centre(f: Finger) -> f64 {
    match f {
        Finger::L5 | Finger::R2 => 0.0,
        Finger::L4 | Finger::R3 => 1.0 / 3.0,
        Finger::L3 | Finger::R4 => 2.0 / 3.0,
        Finger::L2 | Finger::R5 => 1.0,
        Finger::RThumb => 0.5,
    }
}

// Keys a finger reaches by moving sideways from its home column.
fn column_step(c: char) -> u8 {
    match c {
        't' | 'g' | 'b' | 'y' | 'h' | 'n' | '\'' => 1,
        super::charset::ENTER => 2,
        super::charset::BACKSPACE => 3,
        _ => 0,
    }
}

pub fn key_signature(c: char, fm: &FingerMap, cs: &CharSet, layout: ChannelLayout) -> Result<KeySignature> {
    let finger = fm.finger_of_char(cs, c).ok_or(Error::UnknownSymbol(c))?;
    let pos = key_pos(c).ok_or(Error::UnknownSymbol(c))?;
    let step = column_step(c) as f64;
    let inward = if finger_centre(finger) > 0.5 { -1.0 } else { 1.0 };
    let mu = finger_centre(finger) + inward * 0.12 * step + (pos.row.min(2) as f64 - 1.0) * 0.05;
    let sigma = if finger == Finger::RThumb { 0.5 } else { 0.22 };

    let p = layout.per_arm;
    let mut gains: Vec<(usize, f64)> = (0..p)
        .map(|ch| {
            let x = if p == 1 { 0.5 } else { ch as f64 / (p - 1) as f64 };
            (ch, (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp())
        })
        .collect();
    gains.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let keep = gains
        .iter()
        .take(4)
        .enumerate()
        .take_while(|&(i, &(_, g))| i < 2 || g >= 0.15)
        .count()
        .min(p);
    gains.truncate(keep);
    let peak = gains[0].1;
    for g in &mut gains {
        g.1 /= peak;
    }
    Ok(KeySignature {
        arm: if finger.is_left() { 0 } else { 1 },
        channels: gains,
        band_hz: ROW_BANDS[pos.row as usize],
        duration_ms: 70.0 + 25.0 * step.min(2.0) + 10.0 * pos.row.min(2) as f64,
    })
}

/// I.i.d. draws from the alphabet's unigram frequencies.
pub fn sample_text(cs: &CharSet, length: usize, seed: u64) -> Vec<char> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = WeightedIndex::new(cs.freqs()).expect("valid frequencies");
    (0..length).map(|_| cs.chars()[dist.sample(&mut rng)]).collect()
}

/// Draws press times for `n` keys: cumulative shifted-exponential gaps.
fn press_times(cfg: &SynthConfig, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let min_gap = cfg.min_gap();
    let exp = Exp::new(1.0 / (1.0 / cfg.chars_per_second - min_gap)).unwrap();
    let mut t = 0.0;
    (0..n)
        .map(|_| {
            t += min_gap + exp.sample(rng);
            // Microsecond resolution, matching the keylog text format.
            (t * 1e6).round() / 1e6
        })
        .collect()
}

/// Renders `text` as a recording plus its ground-truth key log.
pub fn generate_synthetic(
    cfg: &SynthConfig,
    text: &[char],
    cs: &CharSet,
    fm: &FingerMap,
    layout: ChannelLayout,
    session_id: &str,
) -> Result<(Recording, KeyLog)> {
    cfg.validate()?;
    if text.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sigs: Vec<KeySignature> = {
        let mut table = Vec::with_capacity(cs.len());
        for &c in cs.chars() {
            table.push(key_signature(c, fm, cs, layout)?);
        }
        let mut out = Vec::with_capacity(text.len());
        for &c in text {
            out.push(table[cs.index_of(c).ok_or(Error::UnknownSymbol(c))?].clone());
        }
        out
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let times = press_times(cfg, text.len(), &mut rng);
    let rate = cfg.sample_rate as f64;
    let duration = times.last().unwrap() + 1.0;
    let n = (duration * rate).ceil() as usize;
    let nc = layout.n_channels();
    let mut sig = vec![0.0f64; nc * n];

    let jitter = Normal::new(0.0, cfg.jitter_ms.max(0.0) / 1000.0).unwrap();
    for (&t, key) in times.iter().zip(&sigs) {
        let onset = t - cfg.lead_ms / 1000.0 + jitter.sample(&mut rng);
        let start = (onset * rate).round().max(0.0) as usize;
        let len = (key.duration_ms / 1000.0 * rate).round() as usize;
        let amp = cfg.amplitude * (1.0 + 0.1 * rng.sample::<f64, _>(StandardNormal)).clamp(0.7, 1.3);
        for &(ch, gain) in &key.channels {
            let tones: Vec<(f64, f64)> = (0..CARRIER_TONES)
                .map(|_| {
                    let f = rng.random_range(key.band_hz.0..key.band_hz.1);
                    (2.0 * PI * f / rate, rng.random_range(0.0..2.0 * PI))
                })
                .collect();
            let norm = (2.0 / CARRIER_TONES as f64).sqrt();
            let row = &mut sig[(key.arm * layout.per_arm + ch) * n..][..n];
            for i in 0..len.min(n.saturating_sub(start)) {
                let env = 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos();
                let carrier: f64 = tones.iter().map(|&(w, ph)| (w * i as f64 + ph).sin()).sum();
                row[start + i] += amp * gain * env * norm * carrier;
            }
        }
    }

    let noise_sd = cfg.amplitude / cfg.snr;
    let samples: Vec<i16> = sig
        .into_iter()
        .map(|v| {
            let noisy = if noise_sd > 0.0 {
                v + noise_sd * rng.sample::<f64, _>(StandardNormal)
            } else {
                v
            };
            noisy.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
        })
        .collect();
    let rec = Recording::new(cfg.sample_rate, nc, Samples::Int16(samples), session_id)?;
    let log = KeyLog::from_presses(times.into_iter().zip(text.iter().copied()))?;
    Ok((rec, log))
}
