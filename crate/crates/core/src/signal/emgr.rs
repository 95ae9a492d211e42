//! `EMGR` binary recording format.
//!
//! Little-endian. Header: `b"EMGR"`, u32 version, u32 n_channels,
//! u32 sample_rate, u64 n_samples, u8 sample_kind (0 = int16, 1 = float32,
//! 2 = float64). Body: channel-major raw samples.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Recording, Samples};
use crate::error::{Error, Result};

pub const EMGR_MAGIC: &[u8; 4] = b"EMGR";
pub const EMGR_VERSION: u32 = 1;

pub fn write_emgr<W: Write>(rec: &Recording, mut w: W) -> Result<()> {
    w.write_all(EMGR_MAGIC)?;
    w.write_all(&EMGR_VERSION.to_le_bytes())?;
    w.write_all(&(rec.n_channels() as u32).to_le_bytes())?;
    w.write_all(&rec.sample_rate().to_le_bytes())?;
    w.write_all(&(rec.n_samples() as u64).to_le_bytes())?;
    match rec.samples() {
        Samples::Int16(v) => {
            w.write_all(&[0])?;
            for s in v {
                w.write_all(&s.to_le_bytes())?;
            }
        }
        Samples::Float32(v) => {
            w.write_all(&[1])?;
            for s in v {
                w.write_all(&s.to_le_bytes())?;
            }
        }
        Samples::Float64(v) => {
            w.write_all(&[2])?;
            for s in v {
                w.write_all(&s.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_emgr<R: Read>(mut r: R, session_id: impl Into<String>) -> Result<Recording> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != EMGR_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != EMGR_VERSION {
        return Err(Error::Format(format!("unsupported EMGR version {version}")));
    }
    let n_channels = read_u32(&mut r)? as usize;
    let sample_rate = read_u32(&mut r)?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n_samples = u64::from_le_bytes(b8) as usize;
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;

    let total = n_channels
        .checked_mul(n_samples)
        .ok_or_else(|| Error::Format("sample count overflows".into()))?;
    let width = match kind[0] {
        0 => 2,
        1 => 4,
        2 => 8,
        k => return Err(Error::Format(format!("unknown sample kind {k}"))),
    };
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != total * width {
        return Err(Error::Format(format!(
            "body holds {} bytes, header promises {}",
            body.len(),
            total * width
        )));
    }
    let samples = match kind[0] {
        0 => Samples::Int16(
            body.chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]))
                .collect(),
        ),
        1 => Samples::Float32(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        _ => Samples::Float64(
            body.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };
    Recording::new(sample_rate, n_channels, samples, session_id)
}

pub fn write_emgr_file(rec: &Recording, path: impl AsRef<Path>) -> Result<()> {
    write_emgr(rec, BufWriter::new(File::create(path)?))
}

/// Reads a recording; the session id is taken from the file stem.
pub fn read_emgr_file(path: impl AsRef<Path>) -> Result<Recording> {
    let path = path.as_ref();
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_emgr(BufReader::new(File::open(path)?), id)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
