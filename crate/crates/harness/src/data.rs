//! Sessions on disk or in memory, and block extraction under a transform.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use myotype::corpus::{
    generate_synthetic, ingest_keylog, read_manifest, sample_text, segment_blocks, write_manifest, CharSet, FingerMap,
    KeyLog, LabeledBlock, SynthConfig,
};
use myotype::signal::{read_emgr_file, write_emgr_file, ChannelLayout, Recording};

use crate::profile::DataSource;

pub const SYNTH_SESSION: &str = "s0";

pub struct Session {
    pub rec: Recording,
    pub log: KeyLog,
}

pub fn synthesize(cfg: &SynthConfig, chars: usize, per_arm: usize) -> Result<Session> {
    let cs = CharSet::standard();
    let fm = FingerMap::standard(&cs);
    let text = sample_text(&cs, chars, cfg.seed.wrapping_add(1));
    let layout = ChannelLayout::new(per_arm)?;
    let (rec, log) = generate_synthetic(cfg, &text, &cs, &fm, layout, SYNTH_SESSION)?;
    Ok(Session { rec, log })
}

/// Writes one synthetic session plus its manifest; returns the manifest path.
pub fn write_synthetic(dir: &Path, cfg: &SynthConfig, chars: usize, per_arm: usize) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let s = synthesize(cfg, chars, per_arm)?;
    let rec = format!("{SYNTH_SESSION}.emgr");
    let log = format!("{SYNTH_SESSION}.keylog.csv");
    write_emgr_file(&s.rec, dir.join(&rec))?;
    s.log.write(dir.join(&log))?;
    let manifest = dir.join("manifest.csv");
    write_manifest(&manifest, &[(rec, log)])?;
    Ok(manifest)
}

pub fn load_sessions(src: &DataSource) -> Result<Vec<Session>> {
    match src {
        DataSource::Manifest(path) => read_manifest(path)
            .with_context(|| format!("reading manifest {}", path.display()))?
            .into_iter()
            .map(|p| {
                Ok(Session {
                    rec: read_emgr_file(&p.recording).with_context(|| format!("reading {}", p.recording.display()))?,
                    log: ingest_keylog(&p.keylog).with_context(|| format!("reading {}", p.keylog.display()))?,
                })
            })
            .collect(),
        DataSource::Synth { cfg, chars, per_arm } => Ok(vec![synthesize(cfg, *chars, *per_arm)?]),
    }
}

/// Applies `transform` to every whole session, then cuts labelled blocks.
pub fn blocks_from(
    sessions: &[Session],
    block_seconds: f64,
    max_blocks: Option<usize>,
    transform: impl Fn(&Recording) -> myotype::Result<Recording>,
) -> Result<Vec<LabeledBlock>> {
    let mut blocks = Vec::new();
    for s in sessions {
        let rec = transform(&s.rec)?;
        let seg = segment_blocks(&rec, &s.log, block_seconds)?;
        if !seg.discarded.is_empty() {
            log::info!("session {}: {} blocks discarded", rec.session_id(), seg.discarded.len());
        }
        blocks.extend(seg.blocks);
    }
    if let Some(n) = max_blocks {
        blocks.truncate(n);
    }
    Ok(blocks)
}
