//! Spatial down-sampling by linear interpolation between neighbouring
//! electrode channels.

use super::{ChannelLayout, Recording, Samples};
use crate::error::{Error, Result};

/// Fractional channel positions kept per arm when reducing `per_arm`
/// channels to `k`: both end channels plus `k - 2` equally spaced ones, or
/// the arm midpoint when `k == 1`.
pub fn spatial_positions(per_arm: usize, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > per_arm {
        return Err(Error::invalid("k", format!("{k} outside [1, {per_arm}]")));
    }
    let span = (per_arm - 1) as f64;
    if k == 1 {
        return Ok(vec![span / 2.0]);
    }
    Ok((0..k)
        .map(|i| (i * (per_arm - 1)) as f64 / (k - 1) as f64)
        .collect())
}

/// Reduces each arm to `k` channels. A fractional position `c + f` becomes
/// `(1 - f) * ch[c] + f * ch[c + 1]`; output is real-valued, `2k` channels.
pub fn downsample_spatial(rec: &Recording, layout: ChannelLayout, k: usize) -> Result<Recording> {
    if rec.n_channels() != layout.n_channels() {
        return Err(Error::Shape(format!(
            "recording has {} channels, layout expects {}",
            rec.n_channels(),
            layout.n_channels()
        )));
    }
    let positions = spatial_positions(layout.per_arm, k)?;
    let n = rec.n_samples();
    let mut data = Vec::with_capacity(2 * k * n);
    for arm in 0..ChannelLayout::ARMS {
        let base = layout.arm_range(arm).start;
        for &p in &positions {
            let c = p.floor() as usize;
            let f = p - c as f64;
            if f == 0.0 {
                data.extend(rec.channel(base + c));
            } else {
                let lo = rec.channel(base + c);
                let hi = rec.channel(base + c + 1);
                data.extend(lo.iter().zip(&hi).map(|(a, b)| (1.0 - f) * a + f * b));
            }
        }
    }
    Recording::new(rec.sample_rate(), 2 * k, Samples::Float64(data), rec.session_id())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_recording(per_arm: usize, n: usize) -> Recording {
        let chans = (0..2 * per_arm)
            .map(|c| (0..n).map(|t| (c * 100 + t) as f64).collect())
            .collect();
        Recording::from_channels(2000, chans, "r").unwrap()
    }

    #[test]
    fn five_positions_match_reference_example() {
        assert_eq!(spatial_positions(16, 5).unwrap(), vec![0.0, 3.75, 7.5, 11.25, 15.0]);
    }

    #[test]
    fn k1_is_midpoint_average() {
        let rec = ramp_recording(16, 4);
        let out = downsample_spatial(&rec, ChannelLayout::new(16).unwrap(), 1).unwrap();
        assert_eq!(out.n_channels(), 2);
        let want: Vec<f64> = rec.channel(7).iter().zip(rec.channel(8)).map(|(a, b)| (a + b) / 2.0).collect();
        assert_eq!(out.channel(0), want);
        let want_r: Vec<f64> = rec.channel(23).iter().zip(rec.channel(24)).map(|(a, b)| (a + b) / 2.0).collect();
        assert_eq!(out.channel(1), want_r);
    }

    #[test]
    fn k16_is_identity() {
        let rec = ramp_recording(16, 5);
        let out = downsample_spatial(&rec, ChannelLayout::new(16).unwrap(), 16).unwrap();
        assert_eq!(out.channels(), rec.channels());
    }

    #[test]
    fn out_of_range_k_rejected() {
        let rec = ramp_recording(4, 3);
        let layout = ChannelLayout::new(4).unwrap();
        assert!(downsample_spatial(&rec, layout, 0).is_err());
        assert!(downsample_spatial(&rec, layout, 5).is_err());
        assert!(downsample_spatial(&rec, ChannelLayout::new(3).unwrap(), 2).is_err());
    }
}
