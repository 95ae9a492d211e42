use std::process::Command;

use myotype::net::ModelConfig;
use myotype_harness::experiment::{config_diff, run_baseline, sweep_spatial, sweep_temporal, Outcome};
use myotype_harness::profile::{ExperimentSpec, Profile, Sweep};
use myotype_harness::report::{accuracy_svg, char_frequency_svg, emit_report, read_results, results_csv, ResultRow, ResultTable};
use myotype_harness::transcripts::{escape, parse_tsv, to_tsv, unescape, TranscriptRow};
use myotype_harness::{errmodel, transcripts};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table(conditions: &[&str], folds: usize, seed: u64) -> ResultTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = ResultTable::default();
    for c in conditions {
        for fold in 0..folds {
            t.rows.push(ResultRow { condition: c.to_string(), fold, accuracy: rng.random_range(0.0..1.0), converged: rng.random_bool(0.8), seed });
        }
    }
    t
}

#[test]
fn results_csv_has_the_documented_schema() {
    let t = table(&["baseline"], 10, 1);
    let csv = results_csv(&t).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("condition,fold,accuracy,converged,seed"));
    assert_eq!(lines.count(), 10);
    assert_eq!(t.summary().len(), 1);
}

#[test]
fn report_round_trips_exact_values() {
    let dir = tempfile::tempdir().unwrap();
    let t = table(&["k=1", "k=2"], 5, 2);
    emit_report(&t, dir.path(), "sweep", "k", true).unwrap();
    assert_eq!(read_results(&dir.path().join("results.csv")).unwrap(), t);
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(emit_report(&ResultTable::default(), dir.path(), "x", "y", false).is_err());
}

#[test]
fn summary_matches_direct_recomputation() {
    let t = table(&["a", "b", "c"], 7, 3);
    for s in t.summary() {
        let acc = t.accuracies(&s.condition);
        let n = acc.len() as f64;
        let mean = acc.iter().sum::<f64>() / n;
        let var = acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((s.mean - mean).abs() < 1e-12);
        assert!((s.std - var.sqrt()).abs() < 1e-12);
        assert_eq!(s.min, acc.iter().copied().fold(f64::INFINITY, f64::min));
        assert_eq!(s.max, acc.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        assert_eq!(s.folds, 7);
    }
}

#[test]
fn charts_are_well_formed_xml() {
    let t = table(&["hz=100", "hz=200", "a<b&c"], 4, 4);
    for line in [true, false] {
        let svg = accuracy_svg(&t.summary(), "accuracy & \"rate\"", "Hz", line);
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
    }
    let cs = myotype::corpus::CharSet::standard();
    let labels = vec!["hello, world.\n".chars().collect::<Vec<_>>(), vec!['\u{8}', '\'', 'q']];
    roxmltree::Document::parse(&char_frequency_svg(&labels, &cs).unwrap()).unwrap();
    assert!(char_frequency_svg(&[], &cs).is_err());
}

#[test]
fn transcript_escapes() {
    let text: Vec<char> = "a\nb\u{8}c\td\\e".chars().collect();
    assert_eq!(escape(&text), "a\\nb\\bc\\td\\\\e");
    assert_eq!(unescape(&escape(&text)).unwrap(), text);
    assert!(unescape("bad\\q").is_err());
    assert!(parse_tsv("not a header\n").is_err());
}

proptest! {
    #[test]
    fn transcripts_round_trip(rows in prop::collection::vec(
        ("[a-z0-9#]{1,6}", prop::collection::vec(prop::sample::select(vec!['a', ' ', '\n', '\u{8}', '\t', '\\', '.', '\'']), 0..20),
         prop::collection::vec(prop::sample::select(vec!['z', ',', '\n', '\u{8}']), 0..20), 0usize..10, any::<bool>()), 0..8)) {
        let rows: Vec<TranscriptRow> = rows.into_iter().map(|(id, r, p, fold, holdout)| TranscriptRow { block_id: id, recorded: r, predicted: p, fold, holdout }).collect();
        prop_assert_eq!(parse_tsv(&to_tsv(&rows)).unwrap(), rows);
    }
}

#[test]
fn errmodel_on_perfect_transcripts_is_near_identity() {
    let text: Vec<char> = "the quick brown fox jumps over the lazy dog, again.".chars().collect();
    let rows: Vec<TranscriptRow> = (0..4)
        .map(|i| TranscriptRow { block_id: format!("s0#{i}"), recorded: text.clone(), predicted: text.clone(), fold: i, holdout: i % 2 == 0 })
        .collect();
    let em = errmodel::fit(&rows, false).unwrap();
    assert_eq!(em.pairs, 4);
    let o = em.model.index_of('o').unwrap();
    assert!(em.model.sub(o, o) > 0.99);
    assert_eq!(errmodel::fit(&rows, true).unwrap().pairs, 2);
    let dir = tempfile::tempdir().unwrap();
    errmodel::write(&em, dir.path()).unwrap();
    let back = myotype::channel::ChannelModel::load_csv(&dir.path().join("channel.csv")).unwrap();
    assert_eq!(back, em.model);
    assert!(errmodel::fit(&rows[..0], false).is_err());
}

#[test]
fn sweep_values_are_validated() {
    let mut spec = ExperimentSpec::from_profile(Profile::Desk, 0, "x".into());
    spec.sweep = Sweep::Spatial(vec![0]);
    assert!(spec.validate().is_err());
    spec.sweep = Sweep::Spatial(vec![5]);
    assert!(spec.validate().is_err());
    spec.sweep = Sweep::Temporal(vec![2001]);
    assert!(spec.validate().is_err());
    spec.sweep = Sweep::Temporal(vec![0]);
    assert!(spec.validate().is_err());
    spec.sweep = Sweep::Temporal(vec![100, 2000]);
    spec.validate().unwrap();
}

/// Desk profile cut down to 60 blocks, 3 folds and 12 epochs.
fn small_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec::from_profile(Profile::Desk, 11, "unused".into());
    spec.max_blocks = Some(60);
    if let myotype_harness::profile::DataSource::Synth { chars, .. } = &mut spec.data {
        *chars = 1600;
    }
    spec.train.epochs = 12;
    spec.train.folds = 3;
    spec
}

fn assert_same_rows(a: &Outcome, b: &Outcome) {
    let strip = |o: &Outcome| o.table.rows.iter().map(|r| (r.fold, r.accuracy.to_bits(), r.converged)).collect::<Vec<_>>();
    assert_eq!(strip(a), strip(b));
    assert_eq!(a.runs[0].transcripts, b.runs[0].transcripts);
}

#[test]
fn sweeps_match_baseline_at_full_resolution_and_follow_trends() {
    let spec = small_spec();
    let base = run_baseline(&spec).unwrap();
    assert_eq!(base.table.rows.len(), 3);

    let spatial = sweep_spatial(&spec, &[1, 4]).unwrap();
    let full = Outcome { table: ResultTable { rows: spatial.table.rows.iter().filter(|r| r.condition == "k=4").cloned().collect() }, runs: vec![spatial.runs[1].clone()] };
    assert_same_rows(&full, &base);
    // Only the channel count differs between conditions.
    assert_eq!(config_diff(&spatial.runs[0].model, &spatial.runs[1].model), vec!["n_channels".to_string()]);
    assert_eq!(spatial.runs[0].train, spatial.runs[1].train);
    let (k1, k4) = (spatial.table.mean("k=1").unwrap(), spatial.table.mean("k=4").unwrap());
    assert!(k4 >= k1, "k=4 {k4} < k=1 {k1}");

    let temporal = sweep_temporal(&spec, &[100, 2000]).unwrap();
    let native = Outcome { table: ResultTable { rows: temporal.table.rows.iter().filter(|r| r.condition == "hz=2000").cloned().collect() }, runs: vec![temporal.runs[1].clone()] };
    assert_same_rows(&native, &base);
    assert!(config_diff(&temporal.runs[0].model, &temporal.runs[1].model).is_empty());
    let (h100, h2000) = (temporal.table.mean("hz=100").unwrap(), temporal.table.mean("hz=2000").unwrap());
    assert!(h2000 >= h100, "2000 Hz {h2000} < 100 Hz {h100}");
    eprintln!("baseline {:.3}, k=1 {k1:.3}, k=4 {k4:.3}, 100 Hz {h100:.3}, 2000 Hz {h2000:.3}", base.table.mean("baseline").unwrap());
}

#[test]
fn config_diff_names_changed_fields() {
    let a = ModelConfig::desk();
    assert!(config_diff(&a, &a).is_empty());
    let b = ModelConfig { n_channels: 2, dropout: 0.3, ..a.clone() };
    assert_eq!(config_diff(&a, &b), vec!["dropout".to_string(), "n_channels".to_string()]);
}

fn myotype(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_myotype")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

#[test]
fn usage_errors_exit_with_status_two() {
    for args in [&["frobnicate"][..], &["xval", "--nope"], &["--profile", "huge", "xval"], &[]] {
        let out = myotype(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("Usage") || err.contains("error:"), "{err}");
    }
    assert_eq!(myotype(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_with_status_one() {
    let out = myotype(&["errmodel", "--transcripts", "/nonexistent/t.tsv", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = myotype(&["sweep-spatial", "--k", "9", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_is_bit_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(myotype(&["synth", "--chars", "2000", "--seed", "7", "--threads", "1", "--out", d.path().to_str().unwrap()]).status.success());
    }
    for f in ["s0.emgr", "s0.keylog.csv", "manifest.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn stored_transcripts_rescore_to_stored_accuracies() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    assert!(myotype(&["synth", "--chars", "700", "--seed", "2", "--out", &d("data")]).status.success());
    let manifest = format!("{}/manifest.csv", d("data"));
    let out = myotype(&["xval", "--seed", "2", "--data", &manifest, "--epochs", "2", "--folds", "3", "--max-blocks", "9", "--out", &d("xval")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = myotype(&["eval", "--transcripts", &format!("{}/transcripts.tsv", d("xval")), "--out", &d("eval")]);
    assert!(out.status.success());
    let stored = read_results(&dir.path().join("xval/results.csv")).unwrap();
    let rescored = std::fs::read_to_string(dir.path().join("eval/eval.csv")).unwrap();
    let accs: Vec<f64> = rescored.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(accs, stored.rows.iter().map(|r| r.accuracy).collect::<Vec<_>>());
    let rows = transcripts::read_tsv(&dir.path().join("xval/transcripts.tsv")).unwrap();
    assert_eq!(rows.iter().filter(|r| r.holdout).count(), 9);
    assert_eq!(rows.len(), 27);
}
