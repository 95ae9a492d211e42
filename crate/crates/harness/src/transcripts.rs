//! Decoded-vs-recorded text pairs as tab-separated lines.
//!
//! Columns: `block_id, recorded_text, predicted_text, fold, holdout`.
//! Enter, Backspace and tab are written as `\n`, `\b` and `\t`; a literal
//! backslash as `\\`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use myotype::net::Transcript;

pub const HEADER: &str = "block_id\trecorded_text\tpredicted_text\tfold\tholdout";

#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptRow {
    pub block_id: String,
    pub recorded: Vec<char>,
    pub predicted: Vec<char>,
    pub fold: usize,
    pub holdout: bool,
}

impl TranscriptRow {
    pub fn from_transcript(t: &Transcript, fold: usize) -> Self {
        TranscriptRow {
            block_id: t.block_id.clone(),
            recorded: t.recorded.clone(),
            predicted: t.predicted.clone(),
            fold,
            holdout: t.holdout,
        }
    }
}

pub fn escape(text: &[char]) -> String {
    let mut s = String::with_capacity(text.len());
    for &c in text {
        match c {
            '\\' => s.push_str("\\\\"),
            '\n' => s.push_str("\\n"),
            '\u{8}' => s.push_str("\\b"),
            '\t' => s.push_str("\\t"),
            c => s.push(c),
        }
    }
    s
}

pub fn unescape(field: &str) -> Result<Vec<char>> {
    let mut out = Vec::with_capacity(field.len());
    let mut it = field.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match it.next() {
            Some('\\') => '\\',
            Some('n') => '\n',
            Some('b') => '\u{8}',
            Some('t') => '\t',
            other => bail!("bad escape \\{}", other.map(String::from).unwrap_or_default()),
        });
    }
    Ok(out)
}

pub fn to_tsv(rows: &[TranscriptRow]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for r in rows {
        writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            r.block_id,
            escape(&r.recorded),
            escape(&r.predicted),
            r.fold,
            u8::from(r.holdout)
        )
        .unwrap();
    }
    s
}

pub fn parse_tsv(text: &str) -> Result<Vec<TranscriptRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        _ => bail!("missing transcript header"),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 5 {
                bail!("line {}: expected 5 fields, found {}", i + 2, f.len());
            }
            Ok(TranscriptRow {
                block_id: f[0].to_string(),
                recorded: unescape(f[1])?,
                predicted: unescape(f[2])?,
                fold: f[3].parse().map_err(|e| anyhow!("line {}: fold: {e}", i + 2))?,
                holdout: match f[4] {
                    "1" => true,
                    "0" => false,
                    v => bail!("line {}: holdout flag {v:?}", i + 2),
                },
            })
        })
        .collect()
}

pub fn write_tsv(path: &Path, rows: &[TranscriptRow]) -> Result<()> {
    fs::write(path, to_tsv(rows)).with_context(|| format!("writing {}", path.display()))
}

pub fn read_tsv(path: &Path) -> Result<Vec<TranscriptRow>> {
    parse_tsv(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)
}
