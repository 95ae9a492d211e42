//! Fused per-channel extractor stages over channel-major `[C, T]` data:
//! convolution, then batch norm + ReLU + max-pool in one pass, then dropout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::mix_seed;
use crate::error::Result;
use crate::nn::{conv1d_cm, conv1d_cm_backward, dropout, BatchNorm, Conv1d, Mode, Scalar, Tensor};

/// A channel-major sequence: `data` is `[channels, len]`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Seq<F> {
    pub data: Vec<F>,
    pub len: usize,
}

impl<F: Scalar> Seq<F> {
    pub fn channels(&self) -> usize {
        self.data.len() / self.len.max(1)
    }

    pub fn channel(&self, c: usize) -> &[F] {
        &self.data[c * self.len..(c + 1) * self.len]
    }

    /// `[len, channels]` view as a tensor.
    pub fn to_time_major(&self) -> Tensor<F> {
        let c = self.channels();
        Tensor::from_vec(&[self.len, c], crate::nn::tensor::transpose(&self.data, c, self.len)).unwrap()
    }
}

pub(crate) struct StageCache<F> {
    input: Vec<Seq<F>>,
    conv_out: Vec<Seq<F>>,
    /// Pooled activations before dropout.
    pooled: Vec<Seq<F>>,
    argmax: Vec<Vec<u32>>,
    masks: Vec<Option<Vec<F>>>,
    mean: Vec<F>,
    inv_std: Vec<F>,
}

/// `ReLU(x·scale + shift)` max-pooled per channel; ties go to the lowest
/// index. Returns pooled values and absolute argmax positions.
fn norm_relu_pool<F: Scalar>(x: &Seq<F>, scale: &[F], shift: &[F], width: usize, stride: usize) -> (Seq<F>, Vec<u32>) {
    let c = x.channels();
    let t_out = (x.len - width) / stride + 1;
    let mut out = vec![F::zero(); c * t_out];
    let mut arg = vec![0u32; c * t_out];
    for j in 0..c {
        let src = x.channel(j);
        let (a, b) = (scale[j], shift[j]);
        let o = &mut out[j * t_out..(j + 1) * t_out];
        let g = &mut arg[j * t_out..(j + 1) * t_out];
        for t in 0..t_out {
            let base = t * stride;
            let mut best = base;
            let mut bv = (src[base] * a + b).max(F::zero());
            for (r, &v) in src[base + 1..base + width].iter().enumerate() {
                let v = (v * a + b).max(F::zero());
                if v > bv {
                    bv = v;
                    best = base + 1 + r;
                }
            }
            o[t] = bv;
            g[t] = best as u32;
        }
    }
    (Seq { data: out, len: t_out }, arg)
}

fn conv_seq<F: Scalar>(conv: &Conv1d<F>, x: &Seq<F>) -> Result<Seq<F>> {
    let (data, len) = conv1d_cm(&x.data, x.len, &conv.weight.value, conv.bias.value.data(), conv.pad)?;
    Ok(Seq { data, len })
}

pub(crate) fn stage_infer<F: Scalar>(
    conv: &Conv1d<F>,
    bn: &BatchNorm<F>,
    seqs: &[Seq<F>],
    width: usize,
    stride: usize,
) -> Result<Vec<Seq<F>>> {
    let (scale, shift) = bn.frozen_affine();
    seqs.par_iter()
        .map(|x| {
            let y = conv_seq(conv, x)?;
            if y.len < width {
                return Err(crate::Error::TooShort { len: y.len, needed: width });
            }
            Ok(norm_relu_pool(&y, &scale, &shift, width, stride).0)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn stage_train<F: Scalar>(
    conv: &Conv1d<F>,
    bn: &mut BatchNorm<F>,
    seqs: Vec<Seq<F>>,
    width: usize,
    stride: usize,
    rate: f64,
    seed: u64,
    step: u64,
    layer: u64,
) -> Result<(Vec<Seq<F>>, StageCache<F>)> {
    let conv_out: Vec<Seq<F>> = seqs.par_iter().map(|x| conv_seq(conv, x)).collect::<Result<_>>()?;
    if let Some(y) = conv_out.iter().find(|y| y.len < width) {
        return Err(crate::Error::TooShort { len: y.len, needed: width });
    }
    let c = bn.features();
    let partial: Vec<(Vec<f64>, Vec<f64>)> = conv_out
        .par_iter()
        .map(|y| {
            let mut s = vec![0.0; c];
            let mut q = vec![0.0; c];
            for j in 0..c {
                for &v in y.channel(j) {
                    let v = v.f64();
                    s[j] += v;
                    q[j] += v * v;
                }
            }
            (s, q)
        })
        .collect();
    let mut sum = vec![0.0; c];
    let mut sq = vec![0.0; c];
    for (s, q) in &partial {
        for j in 0..c {
            sum[j] += s[j];
            sq[j] += q[j];
        }
    }
    let rows: usize = conv_out.iter().map(|y| y.len).sum();
    let (mean, inv_std) = bn.absorb_batch_stats(&sum, &sq, rows);
    let gamma = bn.gamma.value.data();
    let beta = bn.beta.value.data();
    let scale: Vec<F> = (0..c).map(|j| gamma[j] * inv_std[j]).collect();
    let shift: Vec<F> = (0..c).map(|j| beta[j] - mean[j] * scale[j]).collect();
    let pooled: Vec<(Seq<F>, Vec<u32>)> =
        conv_out.par_iter().map(|y| norm_relu_pool(y, &scale, &shift, width, stride)).collect();
    let (pooled, argmax): (Vec<Seq<F>>, Vec<Vec<u32>>) = pooled.into_iter().unzip();
    let out: Vec<(Seq<F>, Option<Vec<F>>)> = pooled
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[step, layer, i as u64]));
            let t = Tensor::from_vec(&[p.data.len()], p.data.clone()).unwrap();
            let (y, mask) = dropout(&t, rate, Mode::Train, &mut rng);
            (Seq { data: y.into_data(), len: p.len }, mask)
        })
        .collect();
    let (next, masks): (Vec<Seq<F>>, Vec<Option<Vec<F>>>) = out.into_iter().unzip();
    Ok((
        next,
        StageCache {
            input: seqs,
            conv_out,
            pooled,
            argmax,
            masks,
            mean,
            inv_std,
        },
    ))
}

/// Backpropagates pooled-space gradients through one stage, accumulating
/// conv and batch-norm parameter gradients. Returns input gradients when
/// `want_dx`.
pub(crate) fn stage_backward<F: Scalar>(
    conv: &mut Conv1d<F>,
    bn: &mut BatchNorm<F>,
    cache: &StageCache<F>,
    mut dnext: Vec<Seq<F>>,
    want_dx: bool,
) -> Vec<Seq<F>> {
    let c = bn.features();
    let (mean, inv_std) = (&cache.mean, &cache.inv_std);
    // Dropout and ReLU masks in pooled space, then per-channel sums of the
    // batch-norm output gradient (nonzero only at window winners).
    let partial: Vec<(Vec<f64>, Vec<f64>)> = dnext
        .par_iter_mut()
        .enumerate()
        .map(|(i, g)| {
            if let Some(m) = &cache.masks[i] {
                for (v, &k) in g.data.iter_mut().zip(m) {
                    *v *= k;
                }
            }
            for (v, &p) in g.data.iter_mut().zip(&cache.pooled[i].data) {
                if p <= F::zero() {
                    *v = F::zero();
                }
            }
            let y = &cache.conv_out[i];
            let arg = &cache.argmax[i];
            let mut s1 = vec![0.0; c];
            let mut s2 = vec![0.0; c];
            for j in 0..c {
                let src = y.channel(j);
                for t in 0..g.len {
                    let gv = g.data[j * g.len + t];
                    if gv == F::zero() {
                        continue;
                    }
                    let xh = (src[arg[j * g.len + t] as usize] - mean[j]) * inv_std[j];
                    s1[j] += gv.f64();
                    s2[j] += (gv * xh).f64();
                }
            }
            (s1, s2)
        })
        .collect();
    let mut s1 = vec![0.0; c];
    let mut s2 = vec![0.0; c];
    for (a, b) in &partial {
        for j in 0..c {
            s1[j] += a[j];
            s2[j] += b[j];
        }
    }
    for j in 0..c {
        bn.beta.grad.data_mut()[j] += F::of(s1[j]);
        bn.gamma.grad.data_mut()[j] += F::of(s2[j]);
    }
    let rows: usize = cache.conv_out.iter().map(|y| y.len).sum::<usize>().max(1);
    let m1: Vec<F> = s1.iter().map(|&v| F::of(v / rows as f64)).collect();
    let m2: Vec<F> = s2.iter().map(|&v| F::of(v / rows as f64)).collect();
    let gamma = bn.gamma.value.data();
    let scale: Vec<F> = (0..c).map(|j| gamma[j] * inv_std[j]).collect();
    let convr = &*conv;
    let (nw, nb) = (convr.weight.len(), convr.bias.len());
    let parts: Vec<(Vec<F>, Vec<F>, Option<Vec<F>>)> = dnext
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let y = &cache.conv_out[i];
            let arg = &cache.argmax[i];
            let mut dy = vec![F::zero(); c * y.len];
            for j in 0..c {
                let dst = &mut dy[j * y.len..(j + 1) * y.len];
                for t in 0..g.len {
                    dst[arg[j * g.len + t] as usize] += g.data[j * g.len + t];
                }
                let src = y.channel(j);
                for (d, &v) in dst.iter_mut().zip(src) {
                    let xh = (v - mean[j]) * inv_std[j];
                    *d = scale[j] * (*d - m1[j] - xh * m2[j]);
                }
            }
            let x = &cache.input[i];
            let mut dw = vec![F::zero(); nw];
            let mut db = vec![F::zero(); nb];
            let dx = conv1d_cm_backward(&x.data, x.len, &convr.weight.value, convr.pad, &dy, y.len, &mut dw, &mut db, want_dx);
            (dw, db, dx)
        })
        .collect();
    let mut out = Vec::with_capacity(parts.len());
    for (i, (dw, db, dx)) in parts.into_iter().enumerate() {
        conv.weight.add_grad(&dw);
        conv.bias.add_grad(&db);
        if let Some(dx) = dx {
            out.push(Seq {
                data: dx,
                len: cache.input[i].len,
            });
        }
    }
    out
}
