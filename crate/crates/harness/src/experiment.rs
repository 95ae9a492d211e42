//! Baseline cross-validation and the spatial / temporal degradation sweeps.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use myotype::corpus::LabeledBlock;
use myotype::net::{cross_validate, ModelConfig, TrainConfig};
use myotype::signal::{downsample_spatial, roundtrip_degrade, ChannelLayout, Recording};

use crate::data::{blocks_from, load_sessions, Session};
use crate::profile::{ExperimentSpec, Sweep};
use crate::report::{emit_report, ResultRow, ResultTable};
use crate::transcripts::{write_tsv, TranscriptRow};

pub const BASELINE: &str = "baseline";

/// One trained-and-scored condition.
#[derive(Clone, Debug)]
pub struct ConditionRun {
    pub name: String,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub transcripts: Vec<TranscriptRow>,
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub table: ResultTable,
    pub runs: Vec<ConditionRun>,
}

/// Cross-validates one condition. Training-set transcripts are kept too so
/// the channel fit can use every prediction.
pub fn run_condition(name: &str, blocks: &[LabeledBlock], model: &ModelConfig, train: &TrainConfig, seed: u64) -> Result<(ResultTable, ConditionRun)> {
    log::info!("condition {name}: {} blocks, {} channels", blocks.len(), model.n_channels);
    let folds = cross_validate(blocks, model, train, true).with_context(|| format!("condition {name}"))?;
    let mut table = ResultTable::default();
    let mut transcripts = Vec::new();
    for f in &folds {
        table.rows.push(ResultRow {
            condition: name.to_string(),
            fold: f.fold,
            accuracy: f.accuracy,
            converged: f.converged,
            seed,
        });
        transcripts.extend(f.transcripts.iter().map(|t| TranscriptRow::from_transcript(t, f.fold)));
    }
    let run = ConditionRun { name: name.to_string(), model: model.clone(), train: train.clone(), transcripts };
    Ok((table, run))
}

fn condition_blocks(spec: &ExperimentSpec, sessions: &[Session], f: impl Fn(&Recording) -> myotype::Result<Recording>) -> Result<Vec<LabeledBlock>> {
    blocks_from(sessions, spec.block_seconds, spec.max_blocks, f)
}

fn push(out: &mut Outcome, (table, run): (ResultTable, ConditionRun)) {
    out.table.extend(table);
    out.runs.push(run);
}

pub fn run_baseline(spec: &ExperimentSpec) -> Result<Outcome> {
    spec.validate()?;
    let sessions = load_sessions(&spec.data)?;
    let blocks = condition_blocks(spec, &sessions, |r| Ok(r.clone()))?;
    let mut out = Outcome::default();
    push(&mut out, run_condition(BASELINE, &blocks, &spec.model, &spec.train, spec.seed)?);
    Ok(out)
}

/// Retrains from scratch at each spatial resolution. Only the input channel
/// count of the model changes between conditions.
pub fn sweep_spatial(spec: &ExperimentSpec, ks: &[usize]) -> Result<Outcome> {
    ExperimentSpec { sweep: Sweep::Spatial(ks.to_vec()), ..spec.clone() }.validate()?;
    let sessions = load_sessions(&spec.data)?;
    let layout = ChannelLayout::new(spec.per_arm)?;
    let mut out = Outcome::default();
    for &k in ks {
        let blocks = condition_blocks(spec, &sessions, |r| downsample_spatial(r, layout, k))?;
        let model = ModelConfig { n_channels: 2 * k, ..spec.model.clone() };
        push(&mut out, run_condition(&format!("k={k}"), &blocks, &model, &spec.train, spec.seed)?);
    }
    Ok(out)
}

/// Band-limits every session to each rate and back, then retrains with the
/// unchanged configuration.
pub fn sweep_temporal(spec: &ExperimentSpec, rates: &[u32]) -> Result<Outcome> {
    ExperimentSpec { sweep: Sweep::Temporal(rates.to_vec()), ..spec.clone() }.validate()?;
    let sessions = load_sessions(&spec.data)?;
    let mut out = Outcome::default();
    for &hz in rates {
        let blocks = condition_blocks(spec, &sessions, |r| roundtrip_degrade(r, hz))?;
        push(&mut out, run_condition(&format!("hz={hz}"), &blocks, &spec.model, &spec.train, spec.seed)?);
    }
    Ok(out)
}

pub fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    match &spec.sweep {
        Sweep::None => run_baseline(spec),
        Sweep::Spatial(ks) => sweep_spatial(spec, ks),
        Sweep::Temporal(hz) => sweep_temporal(spec, hz),
    }
}

/// Model and training settings of one condition as a TOML document.
pub fn condition_toml(run: &ConditionRun) -> String {
    format!("[model]\n{}\n[train]\n{}", run.model.to_toml(), run.train.to_toml())
}

/// Names of model fields that differ between two configurations.
pub fn config_diff(a: &ModelConfig, b: &ModelConfig) -> Vec<String> {
    let ta: toml::Table = toml::from_str(&a.to_toml()).expect("config is a table");
    let tb: toml::Table = toml::from_str(&b.to_toml()).expect("config is a table");
    let mut keys: Vec<&String> = ta.keys().chain(tb.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter().filter(|k| ta.get(*k) != tb.get(*k)).cloned().collect()
}

fn file_stem(condition: &str) -> String {
    condition.replace('=', "")
}

/// Writes the table, charts, per-condition transcripts and configs.
pub fn write_outcome(out: &Outcome, spec: &ExperimentSpec, dir: &Path) -> Result<()> {
    let (title, axis, line) = match &spec.sweep {
        Sweep::None => ("cross-validated accuracy", "condition", false),
        Sweep::Spatial(_) => ("accuracy vs spatial resolution", "electrodes per arm (k)", true),
        Sweep::Temporal(_) => ("accuracy vs sampling rate", "sampling rate (Hz)", true),
    };
    emit_report(&out.table, dir, title, axis, line)?;
    let configs = dir.join("configs");
    fs::create_dir_all(&configs)?;
    for run in &out.runs {
        let stem = file_stem(&run.name);
        let tsv = if out.runs.len() == 1 { "transcripts.tsv".to_string() } else { format!("transcripts_{stem}.tsv") };
        write_tsv(&dir.join(tsv), &run.transcripts)?;
        fs::write(configs.join(format!("{stem}.toml")), condition_toml(run))?;
    }
    Ok(())
}
