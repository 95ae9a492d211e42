mod common;

use common::*;
use myotype::net::*;
use myotype::nn::Tensor;
use myotype::signal::Recording;
use myotype::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny() -> ModelConfig {
    ModelConfig {
        n_channels: 2,
        conv_widths: vec![4, 6, 6],
        merge_fc: 16,
        lstm_hidden: vec![16, 16],
        head_fc: vec![16, 34],
        dropout: 0.0,
        seed: 3,
        ..ModelConfig::desk()
    }
}

fn noise(rng: &mut ChaCha8Rng, channels: usize, n: usize) -> Recording {
    let chans = (0..channels).map(|_| (0..n).map(|_| rng.random_range(-500.0..500.0)).collect()).collect();
    Recording::from_channels(2000, chans, "n").unwrap()
}

#[test]
fn paper_front_end_shape() {
    let cfg = ModelConfig::paper();
    assert_eq!(cfg.receptive_field(), 131);
    assert_eq!(cfg.output_len(30_000).unwrap(), 1111);
    assert_eq!(cfg.output_len(27_000).unwrap(), 1000);
    let net = TypingNet::<f32>::new(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let p = net.forward(&noise(&mut rng, 32, 30_000)).unwrap();
    assert_eq!(p.shape(), &[1111, 34]);
    for r in 0..p.rows() {
        let s: f64 = p.row(r).iter().map(|&v| v as f64).sum();
        assert!((s - 1.0).abs() < 1e-6, "row {r} sums to {s}");
    }
}

#[test]
fn oversized_receptive_field_is_rejected() {
    let cfg = ModelConfig { conv_kernels: vec![9, 9, 17], ..ModelConfig::paper() };
    assert!(matches!(TypingNet::<f32>::new(&cfg), Err(Error::LatencyBudget { rf: 203, .. })));
}

#[test]
fn input_shorter_than_receptive_field_is_an_error() {
    let net = TypingNet::<f32>::new(&tiny()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    assert!(net.forward(&noise(&mut rng, 2, 100)).is_err());
    assert!(net.forward(&noise(&mut rng, 3, 1000)).is_err());
}

#[test]
fn extractor_is_shared_across_channels() {
    let net = TypingNet::<f64>::new(&tiny()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let x: Vec<f64> = (0..600).map(|_| rng.random_range(-1.0..1.0)).collect();
    let t = Tensor::from_vec(&[600, 1], x).unwrap();
    let f = net.channel_features(&[t.clone(), t]).unwrap();
    assert_eq!(f[0], f[1]);
    assert_eq!(f[0].rows(), 600 / 27);
}

#[test]
fn zero_epochs_leave_parameters_unchanged() {
    let blocks = synthetic_blocks(1, 2, 2.0, 5);
    let t = TrainConfig { epochs: 0, ..TrainConfig::desk() };
    let (net, hist) = train(&blocks, &tiny(), &t).unwrap();
    assert!(hist.epochs.is_empty());
    let fresh = TypingNet::<f32>::new(&tiny()).unwrap();
    assert_eq!(net.to_checkpoint(), fresh.to_checkpoint());
}

#[test]
fn same_seed_trains_identical_parameters() {
    let blocks = synthetic_blocks(1, 3, 2.0, 6);
    let t = TrainConfig { epochs: 2, batch_size: 2, ..TrainConfig::desk() };
    let m = ModelConfig { dropout: 0.2, ..tiny() };
    let (a, ha) = train(&blocks, &m, &t).unwrap();
    let (b, hb) = train(&blocks, &m, &t).unwrap();
    assert_eq!(ha, hb);
    assert_eq!(a.to_checkpoint(), b.to_checkpoint());
    let (c, _) = train(&blocks, &m, &TrainConfig { seed: 99, ..t }).unwrap();
    assert_ne!(a.to_checkpoint(), c.to_checkpoint());
}

#[test]
fn single_block_is_overfit() {
    let blocks = synthetic_blocks(1, 1, 2.0, 7);
    let t = TrainConfig { epochs: 200, batch_size: 1, lr: 3e-3, ..TrainConfig::desk() };
    let (_, hist) = train(&blocks, &tiny(), &t).unwrap();
    let (first, last) = (hist.epochs[0].loss, hist.epochs[199].loss);
    assert!(last <= 0.1 * first, "loss {first} -> {last}");
    assert!(hist.converged());
}

#[test]
fn folds_partition_the_blocks() {
    for (n, k) in [(10, 5), (11, 5), (7, 2), (5, 5)] {
        let folds = fold_assignment(n, k, 3).unwrap();
        assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.len() >= n / k && f.len() <= n.div_ceil(k)));
    }
    assert!(fold_assignment(4, 5, 0).is_err());
    assert!(fold_assignment(4, 1, 0).is_err());
}

#[test]
fn cross_validation_needs_enough_blocks() {
    let blocks = synthetic_blocks(1, 3, 2.0, 8);
    let t = TrainConfig { epochs: 1, folds: 5, ..TrainConfig::desk() };
    assert!(cross_validate(&blocks, &tiny(), &t, false).is_err());
}

#[test]
fn checkpoint_restores_the_same_predictions() {
    let net = TypingNet::<f32>::new(&tiny()).unwrap();
    let mut buf = Vec::new();
    net.to_checkpoint().write(&mut buf).unwrap();
    let back = TypingNet::<f32>::from_checkpoint(&myotype::nn::Checkpoint::read(&mut &buf[..]).unwrap()).unwrap();
    assert_eq!(back.cfg, net.cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let rec = noise(&mut rng, 2, 2000);
    assert_eq!(back.forward(&rec).unwrap(), net.forward(&rec).unwrap());
}
