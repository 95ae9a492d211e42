//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use myotype::channel::corpus_accuracy;
use myotype::corpus::CharSet;
use myotype::net::{decode_prepared, prepare_blocks, train, TypingNet};
use myotype::nn::Checkpoint;

use crate::bench::{bench_inference, paper_net};
use crate::data::{blocks_from, load_sessions, write_synthetic};
use crate::errmodel;
use crate::experiment::{run, write_outcome};
use crate::profile::{synth_config, DataSource, ExperimentSpec, Profile, Sweep, DEFAULT_HZ};
use crate::report::{char_frequency_svg, emit_report, read_results};
use crate::transcripts::{read_tsv, write_tsv, TranscriptRow};

#[derive(Parser, Debug)]
#[command(name = "myotype", version, about = "sEMG keystroke transcription experiments")]
pub struct Cli {
    /// Seed for synthesis, initialization and shuffling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Profile::Desk)]
    pub profile: Profile,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; 1 gives the reference execution order.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Dataset manifest; without it a synthetic session is generated.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Use at most this many blocks.
    #[arg(long)]
    pub max_blocks: Option<usize>,
    #[arg(long)]
    pub block_seconds: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic session and manifest.
    Synth {
        /// Characters to type; defaults to enough for the profile's blocks.
        #[arg(long)]
        chars: Option<usize>,
        #[arg(long)]
        snr: Option<f64>,
    },
    /// Train one network on every block and save a checkpoint.
    Train(RunArgs),
    /// Decode a dataset with a checkpoint, rescore transcripts, or time inference.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Rescore a transcripts file instead of decoding.
        #[arg(long)]
        transcripts: Option<PathBuf>,
        /// Time single-block inference and report the real-time factor.
        #[arg(long)]
        bench: bool,
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
    /// k-fold cross-validation at native resolution.
    Xval(RunArgs),
    /// Cross-validate at several electrode counts per arm.
    SweepSpatial {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        k: Vec<usize>,
    },
    /// Cross-validate at several sampling rates.
    SweepTemporal {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        hz: Vec<u32>,
    },
    /// Fit the noisy-channel error model from transcripts.
    Errmodel {
        #[arg(long)]
        transcripts: PathBuf,
        /// Fit on holdout predictions only.
        #[arg(long)]
        holdout_only: bool,
    },
    /// Rebuild summary and charts from a results table.
    Report {
        #[arg(long)]
        results: PathBuf,
        /// Also plot key frequencies of this dataset.
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

/// Parses `argv` and runs it. Returns the process exit status.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(e.into()),
        },
        None => execute(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn spec_for(cli: &Cli, args: &RunArgs, sweep: Sweep) -> ExperimentSpec {
    let mut spec = ExperimentSpec::from_profile(cli.profile, cli.seed, cli.out.clone());
    if let Some(path) = &args.data {
        spec.data = DataSource::Manifest(path.clone());
    }
    if let Some(e) = args.epochs {
        spec.train.epochs = e;
    }
    if let Some(f) = args.folds {
        spec.train.folds = f;
    }
    if args.max_blocks.is_some() {
        spec.max_blocks = args.max_blocks;
    }
    if let Some(s) = args.block_seconds {
        spec.block_seconds = s;
    }
    spec.sweep = sweep;
    spec
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    Ok(&cli.out)
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth { chars, snr } => {
            let mut cfg = synth_config(cli.seed);
            if let Some(s) = snr {
                cfg.snr = *s;
            }
            let chars = chars.unwrap_or_else(|| cli.profile.synth_chars(&cfg));
            let manifest = write_synthetic(out_dir(cli)?, &cfg, chars, cli.profile.per_arm())?;
            println!("wrote {}", manifest.display());
        }
        Command::Train(args) => {
            let spec = spec_for(cli, args, Sweep::None);
            spec.validate()?;
            let blocks = blocks_from(&load_sessions(&spec.data)?, spec.block_seconds, spec.max_blocks, |r| Ok(r.clone()))?;
            let channels = blocks.first().map_or(spec.model.n_channels, |b| b.signal.n_channels());
            let model = myotype::net::ModelConfig { n_channels: channels, ..spec.model.clone() };
            let (net, hist) = train(&blocks, &model, &spec.train)?;
            let dir = out_dir(cli)?;
            net.to_checkpoint().save(&dir.join("model.ckpt"))?;
            fs::write(dir.join("history.csv"), hist.to_csv())?;
            println!("trained on {} blocks, final loss {:.4}", blocks.len(), hist.epochs.last().map_or(f64::NAN, |e| e.loss));
        }
        Command::Eval { run, checkpoint, transcripts, bench, reps } => {
            if *bench {
                let net = match checkpoint {
                    Some(p) => TypingNet::from_checkpoint(&Checkpoint::load(p)?)?,
                    None => paper_net(cli.seed)?,
                };
                let secs = run.block_seconds.unwrap_or(Profile::Paper.block_seconds());
                let b = bench_inference(&net, secs, *reps, cli.seed)?;
                println!(
                    "bench: {} channels x {} samples at {} Hz -> {} frames, {:.3} s per block, realtime factor {:.2}",
                    b.channels, b.samples, b.sample_rate, b.frames, b.seconds, b.realtime_factor
                );
                return Ok(());
            }
            if let Some(path) = transcripts {
                return rescore(cli, path);
            }
            let Some(ck) = checkpoint else { bail!("eval needs --checkpoint, --transcripts or --bench") };
            let net = TypingNet::<f32>::from_checkpoint(&Checkpoint::load(ck)?)?;
            let spec = spec_for(cli, run, Sweep::None);
            let blocks = blocks_from(&load_sessions(&spec.data)?, spec.block_seconds, spec.max_blocks, |r| Ok(r.clone()))?;
            let prepared = prepare_blocks(&net, &blocks)?;
            let refs: Vec<_> = prepared.iter().collect();
            let decoded = decode_prepared(&net, &refs, spec.train.beam_width, true)?;
            let pairs: Vec<_> = decoded.iter().map(|t| (t.predicted.clone(), t.recorded.clone())).collect();
            let acc = corpus_accuracy(&pairs);
            let dir = out_dir(cli)?;
            let rows: Vec<TranscriptRow> = decoded.iter().map(|t| TranscriptRow::from_transcript(t, 0)).collect();
            write_tsv(&dir.join("transcripts.tsv"), &rows)?;
            fs::write(dir.join("eval.csv"), format!("blocks,accuracy\n{},{}\n", blocks.len(), acc))?;
            println!("accuracy {acc:.4} over {} blocks", blocks.len());
        }
        Command::Xval(args) => experiment(cli, spec_for(cli, args, Sweep::None))?,
        Command::SweepSpatial { run, k } => {
            let ks = if k.is_empty() { cli.profile.default_ks() } else { k.clone() };
            experiment(cli, spec_for(cli, run, Sweep::Spatial(ks)))?
        }
        Command::SweepTemporal { run, hz } => {
            let rates = if hz.is_empty() { DEFAULT_HZ.to_vec() } else { hz.clone() };
            experiment(cli, spec_for(cli, run, Sweep::Temporal(rates)))?
        }
        Command::Errmodel { transcripts, holdout_only } => {
            let em = errmodel::fit(&read_tsv(transcripts)?, *holdout_only)?;
            errmodel::write(&em, out_dir(cli)?)?;
            println!(
                "fitted on {} pairs in {} iterations; adjacent substitution share {:.4}",
                em.pairs, em.iterations, em.adjacent_share
            );
        }
        Command::Report { results, data } => {
            let table = read_results(results)?;
            let dir = out_dir(cli)?;
            emit_report(&table, dir, "cross-validated accuracy", "condition", table.conditions().len() > 1)?;
            if let Some(m) = data {
                let sessions = load_sessions(&DataSource::Manifest(m.clone()))?;
                let blocks = blocks_from(&sessions, cli.profile.block_seconds(), None, |r| Ok(r.clone()))?;
                let labels: Vec<Vec<char>> = blocks.into_iter().map(|b| b.label).collect();
                fs::write(dir.join("char_frequency.svg"), char_frequency_svg(&labels, &CharSet::standard())?)?;
            }
            print_summary(&table);
        }
    }
    Ok(())
}

fn experiment(cli: &Cli, spec: ExperimentSpec) -> Result<()> {
    let out = run(&spec)?;
    write_outcome(&out, &spec, out_dir(cli)?)?;
    print_summary(&out.table);
    Ok(())
}

fn print_summary(table: &crate::report::ResultTable) {
    for s in table.summary() {
        println!(
            "{}: mean {:.4} std {:.4} min {:.4} max {:.4} ({}/{} folds converged)",
            s.condition, s.mean, s.std, s.min, s.max, s.converged_folds, s.folds
        );
    }
}

/// Per-fold holdout accuracy recomputed from a transcripts file.
fn rescore(cli: &Cli, path: &Path) -> Result<()> {
    let rows = read_tsv(path)?;
    let mut folds: Vec<usize> = rows.iter().filter(|r| r.holdout).map(|r| r.fold).collect();
    folds.sort();
    folds.dedup();
    if folds.is_empty() {
        bail!("no holdout transcripts in {}", path.display());
    }
    let mut csv = String::from("fold,accuracy\n");
    for f in folds {
        let pairs: Vec<_> = rows.iter().filter(|r| r.holdout && r.fold == f).map(|r| (r.predicted.clone(), r.recorded.clone())).collect();
        let acc = corpus_accuracy(&pairs);
        csv.push_str(&format!("{f},{acc}\n"));
        println!("fold {f}: accuracy {acc:.4}");
    }
    fs::write(out_dir(cli)?.join("eval.csv"), csv)?;
    Ok(())
}
