//! Keylogger CSV: one `timestamp_ms,key_name` line per key press.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::charset::{key_name, parse_key_name};
use crate::error::{Error, Result};

/// Out-of-order timestamps within this many milliseconds are clamped, not
/// rejected.
const REORDER_TOLERANCE_MS: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub enum Key {
    InSet(char),
    /// A key outside the 32-character alphabet (F1, shift, ...), kept so that
    /// block segmentation can discard the block it falls into.
    OutOfSet(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeyEvent {
    /// Seconds since recording start.
    pub time: f64,
    pub key: Key,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyLog {
    pub events: Vec<KeyEvent>,
}

impl KeyLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Builds a log from in-set presses; times must be non-decreasing.
    pub fn from_presses(presses: impl IntoIterator<Item = (f64, char)>) -> Result<Self> {
        let events: Vec<KeyEvent> = presses
            .into_iter()
            .map(|(time, c)| KeyEvent {
                time,
                key: Key::InSet(c),
            })
            .collect();
        if let Some(i) = events.windows(2).position(|w| w[1].time < w[0].time) {
            return Err(Error::NonMonotonic(i + 2));
        }
        Ok(KeyLog { events })
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut events: Vec<KeyEvent> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (ts, name) = line.split_once(',').ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                line: lineno,
                reason: format!("expected `timestamp_ms,key_name`, got {line:?}"),
            })?;
            let ms: f64 = ts.trim().parse().map_err(|_| Error::Parse {
                path: origin.to_string(),
                line: lineno,
                reason: format!("bad timestamp {ts:?}"),
            })?;
            if !ms.is_finite() || ms < 0.0 {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: lineno,
                    reason: format!("bad timestamp {ts:?}"),
                });
            }
            if name.is_empty() {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: lineno,
                    reason: "missing key name".into(),
                });
            }
            let mut time = ms / 1000.0;
            if let Some(prev) = events.last() {
                if ms < prev.time * 1000.0 - REORDER_TOLERANCE_MS {
                    return Err(Error::NonMonotonic(lineno));
                }
                time = time.max(prev.time);
            }
            let key = match parse_key_name(name) {
                Some(c) => Key::InSet(c),
                None => Key::OutOfSet(name.to_string()),
            };
            events.push(KeyEvent { time, key });
        }
        Ok(KeyLog { events })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for e in &self.events {
            let name = match &e.key {
                Key::InSet(c) => key_name(*c),
                Key::OutOfSet(n) => n.clone(),
            };
            // Millisecond timestamps with microsecond precision.
            writeln!(s, "{:.3},{}", e.time * 1000.0, name).unwrap();
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

pub fn ingest_keylog(path: impl AsRef<Path>) -> Result<KeyLog> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    KeyLog::parse(&text, &path.display().to_string())
}
