use rand::Rng;

use super::tensor::{Scalar, Tensor};
use super::Mode;

pub fn relu_inplace<F: Scalar>(x: &mut Tensor<F>) {
    for v in x.data_mut() {
        if *v < F::zero() {
            *v = F::zero();
        }
    }
}

/// Masks `dy` where the ReLU output `y` was clamped.
pub fn relu_backward_inplace<F: Scalar>(y: &Tensor<F>, dy: &mut Tensor<F>) {
    for (g, &v) in dy.data_mut().iter_mut().zip(y.data()) {
        if v <= F::zero() {
            *g = F::zero();
        }
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    let mut y = x.clone();
    let c = x.cols();
    for row in y.data_mut().chunks_exact_mut(c) {
        let m = row.iter().copied().fold(F::neg_infinity(), F::max);
        let mut s = F::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v = *v / s;
        }
    }
    y
}

/// Row-wise log-softmax.
pub fn log_softmax<F: Scalar>(x: &Tensor<F>) -> Tensor<F> {
    let mut y = x.clone();
    let c = x.cols();
    for row in y.data_mut().chunks_exact_mut(c) {
        let m = row.iter().copied().fold(F::neg_infinity(), F::max);
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<F>().ln();
        for v in row.iter_mut() {
            *v = *v - lse;
        }
    }
    y
}

/// Inverted dropout. Returns the output and, in train mode, the per-element
/// multiplier (0 or 1 / (1 - rate)) needed for the backward pass.
pub fn dropout<F: Scalar, R: Rng>(x: &Tensor<F>, rate: f64, mode: Mode, rng: &mut R) -> (Tensor<F>, Option<Vec<F>>) {
    if mode == Mode::Infer || rate <= 0.0 {
        return (x.clone(), None);
    }
    let keep = F::of(1.0 / (1.0 - rate));
    // Drop when a uniform 32-bit draw falls below rate · 2³².
    let cut = (rate * 4294967296.0).round().min(u32::MAX as f64) as u32;
    let mask: Vec<F> = (0..x.len())
        .map(|_| if rng.next_u32() < cut { F::zero() } else { keep })
        .collect();
    let mut y = x.clone();
    for (v, &m) in y.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    (y, Some(mask))
}

pub fn dropout_backward_inplace<F: Scalar>(mask: Option<&[F]>, dy: &mut Tensor<F>) {
    if let Some(mask) = mask {
        for (g, &m) in dy.data_mut().iter_mut().zip(mask) {
            *g *= m;
        }
    }
}
