//! Alphabet metadata, keylog ingestion, block segmentation and synthetic
//! data generation.

mod blocks;
mod charset;
mod keylog;
mod manifest;
mod synth;

pub use blocks::{block_len, segment_blocks, DiscardedBlock, LabeledBlock, Segmentation};
pub use charset::{
    key_name, key_pos, parse_key_name, CharSet, Finger, FingerMap, KeyPos, BACKSPACE, BLANK, ENTER,
    N_CHARS, N_CLASSES, SEPARATOR,
};
pub use keylog::{ingest_keylog, Key, KeyEvent, KeyLog};
pub use manifest::{load_dataset, read_manifest, write_manifest, Dataset, SessionPaths};
pub use synth::{generate_synthetic, key_signature, sample_text, KeySignature, SynthConfig};
