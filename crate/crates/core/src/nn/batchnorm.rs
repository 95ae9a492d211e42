//! Batch normalization over the feature (last) axis, pooling statistics
//! across every row of every tensor in the batch.

use rayon::prelude::*;

use super::param::Param;
use super::tensor::{Scalar, Tensor};
use super::Mode;
use crate::error::{Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm<F> {
    pub gamma: Param<F>,
    pub beta: Param<F>,
    pub running_mean: Vec<F>,
    pub running_var: Vec<F>,
}

#[derive(Clone, Debug)]
pub struct BnCache<F> {
    xhat: Vec<Tensor<F>>,
    inv_std: Vec<F>,
    mode: Mode,
}

impl<F: Scalar> BatchNorm<F> {
    pub fn new(name: &str, features: usize) -> Self {
        BatchNorm {
            gamma: Param::filled(format!("{name}.gamma"), &[features], F::one()),
            beta: Param::zeros(format!("{name}.beta"), &[features]),
            running_mean: vec![F::zero(); features],
            running_var: vec![F::one(); features],
        }
    }

    pub fn features(&self) -> usize {
        self.gamma.len()
    }

    /// Train mode normalizes with batch statistics and folds them into the
    /// running estimates (`r ← 0.9 r + 0.1 batch`, unbiased variance);
    /// infer mode uses the running estimates.
    pub fn forward(&mut self, xs: &[Tensor<F>], mode: Mode) -> Result<(Vec<Tensor<F>>, BnCache<F>)> {
        let c = self.features();
        if xs.iter().any(|x| x.cols() != c) {
            return Err(Error::Shape(format!("batch_norm expects {c} features")));
        }
        let (mean, inv_std): (Vec<F>, Vec<F>) = match mode {
            Mode::Train => {
                let rows: usize = xs.iter().map(|x| x.rows()).sum();
                if rows == 0 {
                    return Err(Error::invalid("batch_norm", "zero batch in train mode"));
                }
                // Per-item partial sums in f64, reduced in item order.
                let partial: Vec<(Vec<f64>, Vec<f64>)> = xs
                    .par_iter()
                    .map(|x| {
                        let mut s = vec![0.0f64; c];
                        let mut q = vec![0.0f64; c];
                        for row in x.data().chunks_exact(c) {
                            for j in 0..c {
                                let v = row[j].f64();
                                s[j] += v;
                                q[j] += v * v;
                            }
                        }
                        (s, q)
                    })
                    .collect();
                let mut sum = vec![0.0f64; c];
                let mut sq = vec![0.0f64; c];
                for (s, q) in &partial {
                    for j in 0..c {
                        sum[j] += s[j];
                        sq[j] += q[j];
                    }
                }
                self.absorb_batch_stats(&sum, &sq, rows)
            }
            Mode::Infer => (
                self.running_mean.clone(),
                self.running_var
                    .iter()
                    .map(|v| F::of(1.0 / (v.f64() + BN_EPS).sqrt()))
                    .collect(),
            ),
        };
        let gamma = self.gamma.value.data();
        let beta = self.beta.value.data();
        let (ys, xhat): (Vec<Tensor<F>>, Vec<Tensor<F>>) = xs
            .par_iter()
            .map(|x| {
                let mut xh = x.clone();
                let mut y = x.clone();
                for (h, o) in xh.data_mut().chunks_exact_mut(c).zip(y.data_mut().chunks_exact_mut(c)) {
                    for j in 0..c {
                        let v = (h[j] - mean[j]) * inv_std[j];
                        h[j] = v;
                        o[j] = v * gamma[j] + beta[j];
                    }
                }
                (y, xh)
            })
            .unzip();
        Ok((ys, BnCache { xhat, inv_std, mode }))
    }

    /// Turns per-feature sums and sums of squares over `rows` values into
    /// `(mean, 1/√(var + ε))`, folding them into the running estimates.
    pub fn absorb_batch_stats(&mut self, sum: &[f64], sq: &[f64], rows: usize) -> (Vec<F>, Vec<F>) {
        let n = rows as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let var: Vec<f64> = sq.iter().zip(&mean).map(|(q, m)| (q / n - m * m).max(0.0)).collect();
        let unbias = if rows > 1 { n / (n - 1.0) } else { 1.0 };
        for j in 0..self.features() {
            let rm = self.running_mean[j].f64();
            let rv = self.running_var[j].f64();
            self.running_mean[j] = F::of(BN_MOMENTUM * rm + (1.0 - BN_MOMENTUM) * mean[j]);
            self.running_var[j] = F::of(BN_MOMENTUM * rv + (1.0 - BN_MOMENTUM) * var[j] * unbias);
        }
        (
            mean.iter().map(|&m| F::of(m)).collect(),
            var.iter().map(|&v| F::of(1.0 / (v + BN_EPS).sqrt())).collect(),
        )
    }

    /// Per-feature `(scale, shift)` of the frozen affine map.
    pub fn frozen_affine(&self) -> (Vec<F>, Vec<F>) {
        let c = self.features();
        let eps = F::of(BN_EPS);
        let gamma = self.gamma.value.data();
        let beta = self.beta.value.data();
        let scale: Vec<F> = (0..c).map(|j| gamma[j] / (self.running_var[j] + eps).sqrt()).collect();
        let shift: Vec<F> = (0..c).map(|j| beta[j] - self.running_mean[j] * scale[j]).collect();
        (scale, shift)
    }

    /// Normalizes one tensor in place with the running statistics.
    pub fn apply_frozen(&self, x: &mut Tensor<F>) {
        let c = self.features();
        let (scale, shift) = self.frozen_affine();
        for row in x.data_mut().chunks_exact_mut(c) {
            for j in 0..c {
                row[j] = row[j] * scale[j] + shift[j];
            }
        }
    }

    /// Accumulates γ/β gradients and returns input gradients.
    pub fn backward(&mut self, cache: &BnCache<F>, dys: &[Tensor<F>]) -> Vec<Tensor<F>> {
        let c = self.features();
        let partial: Vec<(Vec<f64>, Vec<f64>, usize)> = dys
            .par_iter()
            .zip(cache.xhat.par_iter())
            .map(|(dy, xh)| {
                let mut s = vec![0.0f64; c];
                let mut q = vec![0.0f64; c];
                for (g, h) in dy.data().chunks_exact(c).zip(xh.data().chunks_exact(c)) {
                    for j in 0..c {
                        let gj = g[j].f64();
                        s[j] += gj;
                        q[j] += gj * h[j].f64();
                    }
                }
                (s, q, dy.rows())
            })
            .collect();
        let mut sum_dy = vec![0.0f64; c];
        let mut sum_dy_xhat = vec![0.0f64; c];
        let mut rows = 0usize;
        for (s, q, r) in &partial {
            rows += r;
            for j in 0..c {
                sum_dy[j] += s[j];
                sum_dy_xhat[j] += q[j];
            }
        }
        for j in 0..c {
            self.beta.grad.data_mut()[j] += F::of(sum_dy[j]);
            self.gamma.grad.data_mut()[j] += F::of(sum_dy_xhat[j]);
        }
        let gamma = self.gamma.value.data();
        let inv_std = &cache.inv_std;
        let n = rows.max(1) as f64;
        let mean_dy: Vec<F> = sum_dy.iter().map(|&s| F::of(s / n)).collect();
        let mean_dy_xhat: Vec<F> = sum_dy_xhat.iter().map(|&s| F::of(s / n)).collect();
        let train = cache.mode == Mode::Train;
        dys.par_iter()
            .zip(cache.xhat.par_iter())
            .map(|(dy, xh)| {
                let mut dx = dy.clone();
                for (g, h) in dx.data_mut().chunks_exact_mut(c).zip(xh.data().chunks_exact(c)) {
                    for j in 0..c {
                        let scale = gamma[j] * inv_std[j];
                        g[j] = if train {
                            scale * (g[j] - mean_dy[j] - h[j] * mean_dy_xhat[j])
                        } else {
                            scale * g[j]
                        };
                    }
                }
                dx
            })
            .collect()
    }
}
