//! Dataset manifest: one `recording_path,keylog_path` line per session.
//! Relative paths resolve against the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use super::blocks::{segment_blocks, LabeledBlock};
use super::keylog::ingest_keylog;
use crate::error::{Error, Result};
use crate::signal::read_emgr_file;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionPaths {
    pub recording: PathBuf,
    pub keylog: PathBuf,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<SessionPaths>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (rec, log) = line.split_once(',').ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: i + 1,
            reason: "expected `recording_path,keylog_path`".into(),
        })?;
        out.push(SessionPaths {
            recording: base.join(rec.trim()),
            keylog: base.join(log.trim()),
        });
    }
    Ok(out)
}

/// Writes a manifest with paths relative to its own directory.
pub fn write_manifest(path: impl AsRef<Path>, sessions: &[(String, String)]) -> Result<()> {
    let mut s = String::new();
    for (rec, log) in sessions {
        s.push_str(rec);
        s.push(',');
        s.push_str(log);
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// All valid blocks of a manifest, in session order.
#[derive(Clone, Debug, Default)]
pub struct Dataset {
    pub blocks: Vec<LabeledBlock>,
    pub discarded: usize,
}

pub fn load_dataset(manifest: impl AsRef<Path>, block_seconds: f64) -> Result<Dataset> {
    let mut ds = Dataset::default();
    for s in read_manifest(manifest)? {
        let rec = read_emgr_file(&s.recording)?;
        let log = ingest_keylog(&s.keylog)?;
        let seg = segment_blocks(&rec, &log, block_seconds)?;
        ds.discarded += seg.discarded.len();
        ds.blocks.extend(seg.blocks);
    }
    Ok(ds)
}
