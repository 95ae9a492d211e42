//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use myotype::channel::ChannelModel;
use myotype::nn::Tensor;
use rand::Rng;

pub fn random_probs<R: Rng>(rng: &mut R, t: usize, k: usize) -> Tensor<f64> {
    let mut p = Tensor::from_fn(&[t, k], |_| rng.random_range(0.05..1.0));
    for r in 0..t {
        let s: f64 = p.row(r).iter().sum();
        p.row_mut(r).iter_mut().for_each(|v| *v /= s);
    }
    p
}

pub fn random_label<R: Rng>(rng: &mut R, len: usize, k: usize, blank: usize) -> Vec<usize> {
    (0..len)
        .map(|_| loop {
            let c = rng.random_range(0..k);
            if c != blank {
                break c;
            }
        })
        .collect()
}

/// Merges repeats, then drops blanks.
pub fn squash(path: &[usize], blank: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &c in path {
        if Some(c) != prev && c != blank {
            out.push(c);
        }
        prev = Some(c);
    }
    out
}

/// Probability of every labeling, summed over all `K^T` frame paths.
pub fn labeling_masses(probs: &Tensor<f64>, blank: usize) -> BTreeMap<Vec<usize>, f64> {
    let (t, k) = (probs.rows(), probs.cols());
    let mut out = BTreeMap::new();
    let mut path = vec![0usize; t];
    loop {
        let p: f64 = path.iter().enumerate().map(|(i, &c)| probs.at(i, c)).product();
        *out.entry(squash(&path, blank)).or_insert(0.0) += p;
        let mut i = 0;
        loop {
            if i == t {
                return out;
            }
            path[i] += 1;
            if path[i] < k {
                break;
            }
            path[i] = 0;
            i += 1;
        }
    }
}

pub fn brute_ctc_nll(probs: &Tensor<f64>, label: &[usize], blank: usize) -> f64 {
    -labeling_masses(probs, blank).get(label).copied().unwrap_or(0.0).ln()
}

/// Most probable labeling; equal masses resolved toward the
/// lexicographically smaller labeling.
pub fn brute_best_labeling(probs: &Tensor<f64>, blank: usize) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for (l, p) in labeling_masses(probs, blank) {
        if best.as_ref().is_none_or(|b| p > b.1) {
            best = Some((l, p));
        }
    }
    best.unwrap()
}

pub fn log_of(probs: &Tensor<f64>) -> Tensor<f64> {
    Tensor::from_fn(probs.shape(), |i| probs.data()[i].ln())
}

/// A random well-formed channel model over `k` symbols.
pub fn random_channel<R: Rng>(rng: &mut R, k: usize) -> ChannelModel {
    let alphabet: Vec<char> = (0..k).map(|i| (b'a' + i as u8) as char).collect();
    let mut p_del = vec![0.0; k];
    let mut p_sub = vec![0.0; k * k];
    for x in 0..k {
        let w: Vec<f64> = (0..=k).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        p_del[x] = w[k] / s;
        for y in 0..k {
            p_sub[x * k + y] = w[y] / s;
        }
    }
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    ChannelModel {
        alphabet,
        p_del,
        insert_prob: rng.random_range(0.05..0.6),
        p_ins: w.iter().map(|v| v / s).collect(),
        p_sub,
    }
}

/// Sums the probability of every generation history explicitly: at each
/// insertion loop either insert the next observed symbol or exit, then
/// delete or substitute the next source symbol.
pub fn brute_pair_likelihood(m: &ChannelModel, src: &[usize], obs: &[usize]) -> f64 {
    fn at_loop(m: &ChannelModel, src: &[usize], obs: &[usize]) -> f64 {
        let k = m.k();
        let mut total = 0.0;
        if let Some((&y, rest)) = obs.split_first() {
            total += m.insert_prob * m.p_ins[y] * at_loop(m, src, rest);
        }
        let stop = 1.0 - m.insert_prob;
        match src.split_first() {
            None => {
                if obs.is_empty() {
                    total += stop;
                }
            }
            Some((&x, srest)) => {
                total += stop * m.p_del[x] * at_loop(m, srest, obs);
                if let Some((&y, orest)) = obs.split_first() {
                    total += stop * m.p_sub[x * k + y] * at_loop(m, srest, orest);
                }
            }
        }
        total
    }
    at_loop(m, src, obs)
}

/// Draws one observed string from the channel.
pub fn sample_channel<R: Rng>(m: &ChannelModel, src: &[usize], rng: &mut R) -> Vec<usize> {
    fn draw<R: Rng>(w: &[f64], rng: &mut R) -> usize {
        let u: f64 = rng.random_range(0.0..1.0);
        let mut acc = 0.0;
        for (i, &p) in w.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        w.len() - 1
    }
    let k = m.k();
    let mut out = Vec::new();
    let inserts = |out: &mut Vec<usize>, rng: &mut R| {
        while rng.random_range(0.0..1.0) < m.insert_prob {
            out.push(draw(&m.p_ins, rng));
        }
    };
    for &x in src {
        inserts(&mut out, rng);
        let mut w = m.p_sub[x * k..(x + 1) * k].to_vec();
        w.push(m.p_del[x]);
        let y = draw(&w, rng);
        if y < k {
            out.push(y);
        }
    }
    inserts(&mut out, rng);
    out
}

/// Levenshtein distance straight from its recursive definition over
/// prefixes, memoized on prefix lengths.
pub fn brute_edit<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    fn go<T: PartialEq>(a: &[T], b: &[T], memo: &mut [Option<usize>], w: usize) -> usize {
        let key = a.len() * w + b.len();
        if let Some(v) = memo[key] {
            return v;
        }
        let v = match (a.split_last(), b.split_last()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((x, ar)), Some((y, br))) => {
                let sub = go(ar, br, memo, w) + usize::from(x != y);
                sub.min(go(ar, b, memo, w) + 1).min(go(a, br, memo, w) + 1)
            }
        };
        memo[key] = Some(v);
        v
    }
    let w = b.len() + 1;
    go(a, b, &mut vec![None; (a.len() + 1) * w], w)
}

/// Every string of length `0..=max_len` over `0..symbols`.
pub fn all_strings(symbols: u8, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for c in 0..symbols {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Central-difference gradient of `f` at `x`.
pub fn numeric_grad(x: &[f64], eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut v = x.to_vec();
    (0..x.len())
        .map(|i| {
            v[i] = x[i] + eps;
            let up = f(&v);
            v[i] = x[i] - eps;
            let down = f(&v);
            v[i] = x[i];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Largest element-wise relative error, with `floor` guarding entries whose
/// analytic and numeric values are both near zero.
pub fn max_rel_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

pub fn random_tensor<R: Rng>(rng: &mut R, shape: &[usize]) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

pub fn weighted_sum(y: &Tensor<f64>, w: &Tensor<f64>) -> f64 {
    y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

/// Expected operation counts for one pair, by enumerating every history.
#[derive(Debug, Default)]
pub struct BruteCounts {
    pub prob: f64,
    pub del: Vec<f64>,
    pub sub: Vec<f64>,
    pub ins: Vec<f64>,
    pub exits: f64,
}

pub fn brute_pair_counts(m: &ChannelModel, src: &[usize], obs: &[usize]) -> BruteCounts {
    #[derive(Clone, Copy)]
    enum Op {
        Ins(usize),
        Exit,
        Del(usize),
        Sub(usize, usize),
    }
    fn walk(m: &ChannelModel, src: &[usize], obs: &[usize], p: f64, ops: &mut Vec<Op>, acc: &mut BruteCounts) {
        let k = m.k();
        if let Some((&y, rest)) = obs.split_first() {
            ops.push(Op::Ins(y));
            walk(m, src, rest, p * m.insert_prob * m.p_ins[y], ops, acc);
            ops.pop();
        }
        let stop = p * (1.0 - m.insert_prob);
        ops.push(Op::Exit);
        match src.split_first() {
            None => {
                if obs.is_empty() {
                    acc.prob += stop;
                    for op in ops.iter() {
                        match *op {
                            Op::Ins(y) => acc.ins[y] += stop,
                            Op::Exit => acc.exits += stop,
                            Op::Del(x) => acc.del[x] += stop,
                            Op::Sub(x, y) => acc.sub[x * k + y] += stop,
                        }
                    }
                }
            }
            Some((&x, srest)) => {
                ops.push(Op::Del(x));
                walk(m, srest, obs, stop * m.p_del[x], ops, acc);
                ops.pop();
                if let Some((&y, orest)) = obs.split_first() {
                    ops.push(Op::Sub(x, y));
                    walk(m, srest, orest, stop * m.p_sub[x * k + y], ops, acc);
                    ops.pop();
                }
            }
        }
        ops.pop();
    }
    let k = m.k();
    let mut acc = BruteCounts {
        del: vec![0.0; k],
        sub: vec![0.0; k * k],
        ins: vec![0.0; k],
        ..Default::default()
    };
    walk(m, src, obs, 1.0, &mut Vec::new(), &mut acc);
    let p = acc.prob;
    for v in acc.del.iter_mut().chain(acc.sub.iter_mut()).chain(acc.ins.iter_mut()) {
        *v /= p;
    }
    acc.exits /= p;
    acc
}

/// Finite-difference step used by the layer gradient checks.
pub const GRAD_EPS: f64 = 1e-3;
/// Entries below this magnitude in both routes are compared absolutely.
pub const GRAD_FLOOR: f64 = 1e-6;
/// Fraction of a tensor's largest gradient below which entries are compared
/// absolutely.
pub const GRAD_SCALE_FLOOR: f64 = 1e-2;

fn check(analytic: &[f64], numeric: &[f64]) -> f64 {
    // Entries far below the largest gradient in the tensor are compared
    // against that scale, since truncation error there is set by it.
    let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    max_rel_error(analytic, numeric, GRAD_FLOOR.max(GRAD_SCALE_FLOOR * scale))
}

/// Input, kernel and bias gradients of one random convolution.
pub fn conv_grad_error<R: Rng>(rng: &mut R) -> f64 {
    use myotype::nn::{conv1d, conv1d_backward};
    let k = rng.random_range(1..=4);
    let (cin, cout) = (rng.random_range(1..=3), rng.random_range(1..=3));
    let t = rng.random_range(k..k + 8);
    let pad = if rng.random_bool(0.5) { k - 1 } else { 0 };
    let x = random_tensor(rng, &[t, cin]);
    let w = random_tensor(rng, &[k, cin, cout]);
    let b = random_tensor(rng, &[cout]);
    let y = conv1d(&x, &w, b.data(), pad).unwrap();
    let r = random_tensor(rng, y.shape());
    let mut dw = vec![0.0; w.len()];
    let mut db = vec![0.0; cout];
    let dx = conv1d_backward(&x, &w, pad, &r, &mut dw, &mut db, true).unwrap();
    let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &[f64]| weighted_sum(&conv1d(x, w, b, pad).unwrap(), &r);
    let nx = numeric_grad(x.data(), GRAD_EPS, |v| loss(&Tensor::from_vec(x.shape(), v.to_vec()).unwrap(), &w, b.data()));
    let nw = numeric_grad(w.data(), GRAD_EPS, |v| loss(&x, &Tensor::from_vec(w.shape(), v.to_vec()).unwrap(), b.data()));
    let nb = numeric_grad(b.data(), GRAD_EPS, |v| loss(&x, &w, v));
    check(dx.data(), &nx).max(check(&dw, &nw)).max(check(&db, &nb))
}

pub fn fc_grad_error<R: Rng>(rng: &mut R) -> f64 {
    use myotype::nn::{fully_connected, fully_connected_backward};
    let (n, din, dout) = (rng.random_range(1..=5), rng.random_range(1..=6), rng.random_range(1..=6));
    let x = random_tensor(rng, &[n, din]);
    let w = random_tensor(rng, &[din, dout]);
    let b = random_tensor(rng, &[dout]);
    let r = random_tensor(rng, &[n, dout]);
    let mut dw = vec![0.0; w.len()];
    let mut db = vec![0.0; dout];
    let dx = fully_connected_backward(&x, &w, &r, &mut dw, &mut db, true).unwrap();
    let loss = |x: &Tensor<f64>, w: &Tensor<f64>, b: &[f64]| weighted_sum(&fully_connected(x, w, b).unwrap(), &r);
    let nx = numeric_grad(x.data(), GRAD_EPS, |v| loss(&Tensor::from_vec(x.shape(), v.to_vec()).unwrap(), &w, b.data()));
    let nw = numeric_grad(w.data(), GRAD_EPS, |v| loss(&x, &Tensor::from_vec(w.shape(), v.to_vec()).unwrap(), b.data()));
    let nb = numeric_grad(b.data(), GRAD_EPS, |v| loss(&x, &w, v));
    check(dx.data(), &nx).max(check(&dw, &nw)).max(check(&db, &nb))
}

/// Training-mode batch norm over a batch of 1 to 3 items.
pub fn bn_grad_error<R: Rng>(rng: &mut R) -> f64 {
    use myotype::nn::{BatchNorm, Mode};
    let c = rng.random_range(1..=4);
    let items = rng.random_range(1..=3);
    let rows: Vec<usize> = (0..items).map(|_| rng.random_range(4..=8)).collect();
    let xs: Vec<Tensor<f64>> = rows.iter().map(|&t| random_tensor(rng, &[t, c])).collect();
    let rs: Vec<Tensor<f64>> = rows.iter().map(|&t| random_tensor(rng, &[t, c])).collect();
    let mut bn = BatchNorm::<f64>::new("bn", c);
    for v in bn.gamma.value.data_mut() {
        *v = rng.random_range(0.5..1.5);
    }
    for v in bn.beta.value.data_mut() {
        *v = rng.random_range(-0.5..0.5);
    }
    let (_, cache) = bn.forward(&xs, Mode::Train).unwrap();
    let dxs = bn.backward(&cache, &rs);
    let flat: Vec<f64> = xs.iter().flat_map(|x| x.data().iter().copied()).collect();
    let unflat = |v: &[f64]| -> Vec<Tensor<f64>> {
        let mut off = 0;
        rows.iter()
            .map(|&t| {
                let x = Tensor::from_vec(&[t, c], v[off..off + t * c].to_vec()).unwrap();
                off += t * c;
                x
            })
            .collect()
    };
    let loss = |bn: &mut BatchNorm<f64>, xs: &[Tensor<f64>]| -> f64 {
        let (ys, _) = bn.forward(xs, Mode::Train).unwrap();
        ys.iter().zip(&rs).map(|(y, r)| weighted_sum(y, r)).sum()
    };
    let mut probe = bn.clone();
    let nx = numeric_grad(&flat, GRAD_EPS, |v| loss(&mut probe, &unflat(v)));
    let gamma = bn.gamma.value.data().to_vec();
    let beta = bn.beta.value.data().to_vec();
    let ng = numeric_grad(&gamma, GRAD_EPS, |v| {
        probe.gamma.value.data_mut().copy_from_slice(v);
        let l = loss(&mut probe, &xs);
        probe.gamma.value.data_mut().copy_from_slice(&gamma);
        l
    });
    let nb = numeric_grad(&beta, GRAD_EPS, |v| {
        probe.beta.value.data_mut().copy_from_slice(v);
        let l = loss(&mut probe, &xs);
        probe.beta.value.data_mut().copy_from_slice(&beta);
        l
    });
    let dx: Vec<f64> = dxs.iter().flat_map(|x| x.data().iter().copied()).collect();
    check(&dx, &nx).max(check(bn.gamma.grad.data(), &ng)).max(check(bn.beta.grad.data(), &nb))
}

/// Input, initial-state and weight gradients of one random LSTM run.
pub fn lstm_grad_error<R: Rng>(rng: &mut R) -> f64 {
    use myotype::nn::Lstm;
    let (t, d, h) = (rng.random_range(1..=5), rng.random_range(1..=3), rng.random_range(1..=3));
    let mut l = Lstm::<f64>::new("l", d, h, rng);
    for p in [&mut l.wx, &mut l.wh, &mut l.bias] {
        for v in p.value.data_mut() {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    let x = random_tensor(rng, &[t, d]);
    let h0: Vec<f64> = (0..h).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c0: Vec<f64> = (0..h).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (y, cache) = l.forward(&x, Some(&h0), Some(&c0)).unwrap();
    let r = random_tensor(rng, y.shape());
    let (mut dwx, mut dwh, mut db) = (vec![0.0; l.wx.len()], vec![0.0; l.wh.len()], vec![0.0; l.bias.len()]);
    let g = l.backward(&cache, &r, &mut dwx, &mut dwh, &mut db);
    let run = |l: &Lstm<f64>, x: &Tensor<f64>, h0: &[f64], c0: &[f64]| weighted_sum(&l.forward(x, Some(h0), Some(c0)).unwrap().0, &r);
    let nx = numeric_grad(x.data(), GRAD_EPS, |v| run(&l, &Tensor::from_vec(x.shape(), v.to_vec()).unwrap(), &h0, &c0));
    let nh = numeric_grad(&h0, GRAD_EPS, |v| run(&l, &x, v, &c0));
    let nc = numeric_grad(&c0, GRAD_EPS, |v| run(&l, &x, &h0, v));
    let mut err = check(g.dx.data(), &nx).max(check(&g.dh0, &nh)).max(check(&g.dc0, &nc));
    for (which, analytic) in [(0, &dwx), (1, &dwh), (2, &db)] {
        let base: Vec<f64> = match which {
            0 => l.wx.value.data().to_vec(),
            1 => l.wh.value.data().to_vec(),
            _ => l.bias.value.data().to_vec(),
        };
        let mut probe = l.clone();
        let num = numeric_grad(&base, GRAD_EPS, |v| {
            let p = match which {
                0 => &mut probe.wx,
                1 => &mut probe.wh,
                _ => &mut probe.bias,
            };
            p.value.data_mut().copy_from_slice(v);
            run(&probe, &x, &h0, &c0)
        });
        err = err.max(check(analytic, &num));
    }
    err
}

/// CTC loss gradient with respect to logits.
pub fn ctc_grad_error<R: Rng>(rng: &mut R) -> f64 {
    use myotype::ctc::{ctc_loss, ctc_loss_logits};
    use myotype::nn::log_softmax;
    let (t, k) = (rng.random_range(3..=8), rng.random_range(2..=5));
    let blank = rng.random_range(0..k);
    let len = rng.random_range(1..=(t / 2).min(3));
    let label = random_label(rng, len, k, blank);
    let logits = random_tensor(rng, &[t, k]);
    let (_, g) = ctc_loss_logits(&logits, &label, blank).unwrap();
    let num = numeric_grad(logits.data(), GRAD_EPS, |v| {
        ctc_loss(&log_softmax(&Tensor::from_vec(&[t, k], v.to_vec()).unwrap()), &label, blank).unwrap().0
    });
    check(g.data(), &num)
}

pub fn sine(freq: f64, rate: f64, n: usize, phase: f64) -> Vec<f64> {
    (0..n).map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / rate + phase).sin()).collect()
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Worst relative error of resampling random recordings to their own rate.
pub fn resample_identity_error<R: Rng>(rng: &mut R, trials: usize) -> f64 {
    use myotype::signal::{resample_temporal, Recording};
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = rng.random_range(2..600);
        let chans: Vec<Vec<f64>> = (0..rng.random_range(1..4)).map(|_| (0..n).map(|_| rng.random_range(-1e3..1e3)).collect()).collect();
        let rate = [100u32, 1000, 2000][rng.random_range(0..3)];
        let rec = Recording::from_channels(rate, chans, "r").unwrap();
        let out = resample_temporal(&rec, rate).unwrap();
        for c in 0..rec.n_channels() {
            let (a, b) = (rec.channel(c), out.channel(c));
            let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            worst = worst.max(rms(&diff) / rms(&a));
        }
    }
    worst
}

/// Correlation between a non-periodic sub-Nyquist sine and its round trip
/// through `low` Hz, ignoring a tenth of the signal at each end.
pub fn sub_nyquist_roundtrip_correlation(freq: f64, low: u32) -> f64 {
    use myotype::signal::{roundtrip_degrade, Recording};
    let n = 4001;
    let x = sine(freq, 2000.0, n, 0.3);
    let rec = Recording::from_channels(2000, vec![x.clone()], "s").unwrap();
    let y = roundtrip_degrade(&rec, low).unwrap().channel(0);
    let edge = n / 10;
    correlation(&x[edge..n - edge], &y[edge..n - edge])
}

/// Relative RMS left after a round trip of an integer-cycle sine above the
/// low rate's Nyquist frequency.
pub fn super_nyquist_residual(freq: f64, low: u32) -> f64 {
    use myotype::signal::{roundtrip_degrade, Recording};
    let x = sine(freq, 2000.0, 4000, 0.3);
    let rec = Recording::from_channels(2000, vec![x.clone()], "s").unwrap();
    let y = roundtrip_degrade(&rec, low).unwrap().channel(0);
    rms(&y) / rms(&x)
}

/// `n` labelled synthetic blocks of `seconds` each from one session typed on
/// `per_arm` channels per arm.
pub fn synthetic_blocks(per_arm: usize, n: usize, seconds: f64, seed: u64) -> Vec<myotype::corpus::LabeledBlock> {
    use myotype::corpus::{generate_synthetic, sample_text, segment_blocks, CharSet, FingerMap, SynthConfig};
    use myotype::signal::ChannelLayout;
    let cs = CharSet::standard();
    let fm = FingerMap::standard(&cs);
    let cfg = SynthConfig { seed, ..SynthConfig::default() };
    let chars = (n as f64 * seconds * cfg.chars_per_second * 1.02) as usize + 20;
    let text = sample_text(&cs, chars, seed.wrapping_add(1));
    let layout = ChannelLayout::new(per_arm).unwrap();
    let (rec, log) = generate_synthetic(&cfg, &text, &cs, &fm, layout, "s0").unwrap();
    let blocks: Vec<_> = segment_blocks(&rec, &log, seconds).unwrap().blocks.into_iter().take(n).collect();
    assert_eq!(blocks.len(), n, "synthetic session too short");
    blocks
}

/// A three-symbol planted channel.
pub fn planted() -> ChannelModel {
    ChannelModel {
        alphabet: vec!['a', 'b', 'c'],
        p_del: vec![0.05, 0.03, 0.08],
        insert_prob: 0.0136,
        p_ins: vec![0.5, 0.3, 0.2],
        p_sub: vec![0.85, 0.10, 0.00, 0.02, 0.90, 0.05, 0.04, 0.06, 0.82],
    }
}

/// `n` source strings with lengths in `len` and their observations under `m`.
pub fn sample_pairs<R: Rng>(m: &ChannelModel, n: usize, len: std::ops::Range<usize>, rng: &mut R) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..n)
        .map(|_| {
            let s: Vec<usize> = (0..rng.random_range(len.clone())).map(|_| rng.random_range(0..m.k())).collect();
            let o = sample_channel(m, &s, rng);
            (s, o)
        })
        .collect()
}

/// Largest absolute parameter difference between two channels.
pub fn max_param_error(a: &ChannelModel, b: &ChannelModel) -> f64 {
    let mut worst = (a.insert_prob - b.insert_prob).abs();
    for (x, y) in a.p_del.iter().zip(&b.p_del).chain(a.p_ins.iter().zip(&b.p_ins)).chain(a.p_sub.iter().zip(&b.p_sub)) {
        worst = worst.max((x - y).abs());
    }
    worst
}

/// Worst violation of the per-symbol and insertion normalizations.
pub fn normalization_error(m: &ChannelModel) -> f64 {
    let mut worst: f64 = (m.p_ins.iter().sum::<f64>() - 1.0).abs();
    for x in 0..m.k() {
        let row = m.p_del[x] + (0..m.k()).map(|y| m.sub(x, y)).sum::<f64>();
        worst = worst.max((row - 1.0).abs());
    }
    worst
}
