//! Fixed-length training blocks.

use super::charset::CharSet;
use super::keylog::{Key, KeyLog};
use crate::error::{Error, Result};
use crate::signal::Recording;

/// One fixed-duration signal window and the keys pressed inside it.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledBlock {
    pub signal: Recording,
    pub label: Vec<char>,
    pub session: String,
    pub index: usize,
}

impl LabeledBlock {
    pub fn id(&self) -> String {
        format!("{}#{}", self.session, self.index)
    }

    pub fn label_string(&self) -> String {
        self.label.iter().collect()
    }

    pub fn classes(&self, cs: &CharSet) -> Result<Vec<usize>> {
        cs.encode(&self.label)
    }
}

/// A block dropped because it contained an out-of-set key.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscardedBlock {
    pub index: usize,
    /// Its in-set keys, in order.
    pub in_set: Vec<char>,
}

#[derive(Clone, Debug, Default)]
pub struct Segmentation {
    pub blocks: Vec<LabeledBlock>,
    pub discarded: Vec<DiscardedBlock>,
    /// In-set keys pressed during the trailing partial block (or after the
    /// recording ends).
    pub trailing_keys: usize,
}

pub fn block_len(sample_rate: u32, block_seconds: f64) -> Result<usize> {
    let n = (block_seconds * sample_rate as f64).round();
    if !(n >= 1.0) {
        return Err(Error::invalid("block_seconds", format!("{block_seconds} gives no samples")));
    }
    Ok(n as usize)
}

/// Tiles a session into `block_seconds` windows. A key belongs to the block
/// holding its press timestamp; the partial trailing block is dropped, as is
/// any block containing an out-of-set key.
pub fn segment_blocks(rec: &Recording, log: &KeyLog, block_seconds: f64) -> Result<Segmentation> {
    let len = block_len(rec.sample_rate(), block_seconds)?;
    let n_blocks = rec.n_samples() / len;
    let mut labels: Vec<Vec<char>> = vec![Vec::new(); n_blocks];
    let mut invalid = vec![false; n_blocks];
    let mut trailing_keys = 0;
    for e in &log.events {
        let sample = (e.time * rec.sample_rate() as f64).floor() as usize;
        let b = sample / len;
        if b >= n_blocks {
            if matches!(e.key, Key::InSet(_)) {
                trailing_keys += 1;
            }
            continue;
        }
        match &e.key {
            Key::InSet(c) => labels[b].push(*c),
            Key::OutOfSet(_) => invalid[b] = true,
        }
    }
    let mut seg = Segmentation {
        trailing_keys,
        ..Default::default()
    };
    for (i, label) in labels.into_iter().enumerate() {
        if invalid[i] {
            seg.discarded.push(DiscardedBlock { index: i, in_set: label });
        } else {
            seg.blocks.push(LabeledBlock {
                signal: rec.slice(i * len, len)?,
                label,
                session: rec.session_id().to_string(),
                index: i,
            });
        }
    }
    Ok(seg)
}
