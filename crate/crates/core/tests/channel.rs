mod common;

use common::*;
use myotype::channel::*;
use myotype::corpus::{CharSet, Finger, FingerMap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_string<R: Rng>(rng: &mut R, max_len: usize, k: usize) -> Vec<usize> {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| rng.random_range(0..k)).collect()
}

#[test]
fn pair_likelihood_matches_history_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..300 {
        let k = rng.random_range(1..=3);
        let m = random_channel(&mut rng, k);
        let s = random_string(&mut rng, 4, k);
        let o = random_string(&mut rng, 4, k);
        let got = pair_log_likelihood(&m, &s, &o).unwrap();
        let want = brute_pair_likelihood(&m, &s, &o).ln();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn posterior_counts_match_history_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let k = rng.random_range(1..=3);
        let m = random_channel(&mut rng, k);
        let s = random_string(&mut rng, 3, k);
        let o = random_string(&mut rng, 3, k);
        let got = pair_counts(&m, &s, &o).unwrap();
        let want = brute_pair_counts(&m, &s, &o);
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9);
        assert!(close(&got.del, &want.del));
        assert!(close(&got.sub, &want.sub));
        assert!(close(&got.ins, &want.ins));
        assert!((got.exits - want.exits).abs() < 1e-9);
        assert!((got.exits - (s.len() + 1) as f64).abs() < 1e-9);
    }
}

#[test]
fn one_iteration_on_two_symbol_toy_set() {
    let m = ChannelModel::near_identity(vec!['a', 'b'], 0.8, 0.1, 0.2);
    let pairs = vec![(vec![0], vec![0]), (vec![0, 1], vec![1]), (vec![1], vec![0, 1])];
    let mut del = [0.0; 2];
    let mut sub = [0.0; 4];
    let mut ins = [0.0; 2];
    let mut exits = 0.0;
    for (s, o) in &pairs {
        let c = brute_pair_counts(&m, s, o);
        (0..2).for_each(|i| del[i] += c.del[i]);
        (0..4).for_each(|i| sub[i] += c.sub[i]);
        (0..2).for_each(|i| ins[i] += c.ins[i]);
        exits += c.exits;
    }
    let fit = em_fit(&pairs, &m, EmOptions { max_iters: 1, tol: 0.0, smoothing: 0.0 }).unwrap();
    let n = &fit.model;
    for x in 0..2 {
        let total = del[x] + sub[2 * x] + sub[2 * x + 1];
        assert!((n.p_del[x] - del[x] / total).abs() < 1e-12);
        for y in 0..2 {
            assert!((n.sub(x, y) - sub[2 * x + y] / total).abs() < 1e-12);
        }
    }
    let inserted = ins[0] + ins[1];
    assert!((n.p_ins[0] - ins[0] / inserted).abs() < 1e-12);
    assert!((n.insert_prob - inserted / (inserted + exits)).abs() < 1e-12);
}

#[test]
fn identical_pairs_drive_the_channel_to_identity() {
    let init = ChannelModel::em_init(vec!['a', 'b']);
    let pairs = vec![(vec![0], vec![0]); 50];
    let fit = em_fit(&pairs, &init, EmOptions { max_iters: 500, tol: 1e-12, smoothing: 1e-6 }).unwrap();
    assert!(fit.model.sub(0, 0) > 0.999, "{}", fit.model.sub(0, 0));
    assert!(fit.model.p_del[0] < 1e-3);
    assert!(fit.model.insert_prob < 1e-3);
}

#[test]
fn zero_support_pair_is_an_error() {
    let mut m = ChannelModel::near_identity(vec!['a', 'b'], 1.0, 0.0, 0.0);
    m.insert_prob = 0.0;
    assert!(em_fit(&[(vec![0], vec![1])], &m, EmOptions::default()).is_err());
}

#[test]
fn em_properties_hold_on_sampled_pairs() {
    let truth = planted();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let pairs: Vec<(Vec<usize>, Vec<usize>)> = (0..500)
        .map(|_| {
            let s: Vec<usize> = (0..rng.random_range(1..12)).map(|_| rng.random_range(0..3)).collect();
            let o = sample_channel(&truth, &s, &mut rng);
            (s, o)
        })
        .collect();
    let init = ChannelModel::em_init(truth.alphabet.clone());
    let mut worst: f64 = 0.0;
    let fit = em_fit_observed(&pairs, &init, EmOptions { max_iters: 60, tol: 0.0, smoothing: 0.0 }, |_, m, _| {
        for x in 0..m.k() {
            let row = m.p_del[x] + (0..m.k()).map(|y| m.sub(x, y)).sum::<f64>();
            worst = worst.max((row - 1.0).abs());
        }
        worst = worst.max((m.p_ins.iter().sum::<f64>() - 1.0).abs());
    })
    .unwrap();
    assert!(worst < 1e-12, "{worst}");
    for w in fit.log_likelihoods.windows(2) {
        assert!(w[1] >= w[0] - 1e-9, "{} then {}", w[0], w[1]);
    }
}

#[test]
fn edit_distance_examples() {
    let s = |t: &str| t.chars().collect::<Vec<_>>();
    assert_eq!(edit_distance(&s("abc"), &s("abc")).0, 0);
    assert_eq!(edit_distance(&s(""), &s("abc")).0, 3);
    assert_eq!(edit_distance(&s("kitten"), &s("sitting")).0, 3);
    assert_eq!(brute_edit(&s("kitten"), &s("sitting")), 3);
}

#[test]
fn edit_distance_matches_recursion_on_short_strings() {
    let all = all_strings(3, 4);
    for a in &all {
        for b in &all {
            let (d, ops) = edit_distance(a, b);
            assert_eq!(d, brute_edit(a, b));
            assert_eq!(&apply_alignment(&ops), b);
        }
    }
}

#[test]
fn accuracy_examples() {
    let t: Vec<char> = "abcdefghij".chars().collect();
    assert_eq!(char_accuracy(&t, &t), 1.0);
    assert_eq!(char_accuracy(&[], &t), 0.0);
    let mut one = t.clone();
    one[3] = 'x';
    assert!((char_accuracy(&one, &t) - 0.9).abs() < 1e-12);
    assert_eq!(char_accuracy::<char>(&[], &[]), 1.0);
    assert_eq!(char_accuracy(&['a'], &[]), 0.0);
    let pairs = vec![(one.clone(), t.clone()), (vec!['a'], vec!['a'; 10])];
    assert!((corpus_accuracy(&pairs) - (1.0 - 10.0 / 20.0)).abs() < 1e-12);
}

fn string_strategy() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..4, 0..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]
    #[test]
    fn edit_distance_is_a_metric(a in string_strategy(), b in string_strategy(), c in string_strategy()) {
        let d = |x: &[u8], y: &[u8]| edit_distance(x, y).0;
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a, &b) == 0, a == b);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
    }

    #[test]
    fn finger_rows_sum_to_one(seed in any::<u64>()) {
        let cs = CharSet::standard();
        let fm = FingerMap::standard(&cs);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = random_channel(&mut rng, cs.len());
        m.alphabet = cs.chars().to_vec();
        let fc = finger_confusion(&m, &fm, &cs).unwrap();
        for f in Finger::ALL {
            let row = fc.del(f) + Finger::ALL.iter().map(|&g| fc.sub(f, g)).sum::<f64>();
            prop_assert!((row - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn paper_style_fit_of_perfect_predictions_is_near_identity() {
    let cs = CharSet::standard();
    let text: Vec<char> = "the quick brown fox jumps over the lazy dog.".chars().collect();
    let fit = fit_paper_style(&[(text.clone(), text)], &cs).unwrap();
    let a = fit.model.index_of('o').unwrap();
    assert!(fit.model.sub(a, a) > 0.99);
}

#[test]
fn model_csv_round_trips_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let m = random_channel(&mut rng, 4);
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    assert_eq!(ChannelModel::read_csv(&buf[..]).unwrap(), m);
}

#[test]
fn planted_channel_is_recovered() {
    let truth = planted();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let pairs: Vec<(Vec<usize>, Vec<usize>)> = (0..10_000)
        .map(|_| {
            let s: Vec<usize> = (0..rng.random_range(20..40)).map(|_| rng.random_range(0..3)).collect();
            let o = sample_channel(&truth, &s, &mut rng);
            (s, o)
        })
        .collect();
    let init = ChannelModel::em_init(truth.alphabet.clone());
    let fit = em_fit(&pairs, &init, EmOptions { max_iters: 300, tol: 1e-3, smoothing: 1e-6 }).unwrap();
    let m = &fit.model;
    let mut worst: f64 = (m.insert_prob - truth.insert_prob).abs();
    for x in 0..3 {
        worst = worst.max((m.p_del[x] - truth.p_del[x]).abs());
        worst = worst.max((m.p_ins[x] - truth.p_ins[x]).abs());
        for y in 0..3 {
            worst = worst.max((m.sub(x, y) - truth.sub(x, y)).abs());
        }
    }
    assert!(worst < 0.02, "worst parameter error {worst}");
}
