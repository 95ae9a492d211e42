//! Stride-1 1-D convolution over `[T, C_in]` sequences.

use rand::Rng;

use super::param::Param;
use super::tensor::{axpy, dot, transpose, Scalar, Tensor};
use crate::error::{Error, Result};

/// `out[t, o] = b[o] + Σ_{i<k, c} x[t + i - pad, c] · w[i, c, o]`, with rows
/// before the start (`pad` of them) read as zero. `pad = 0` is a valid
/// convolution (`T' = T - k + 1`); `pad = k - 1` is causal and keeps `T`.
pub fn conv1d<F: Scalar>(x: &Tensor<F>, w: &Tensor<F>, b: &[F], pad: usize) -> Result<Tensor<F>> {
    let (t_in, cin) = x.expect_2d("conv1d input")?;
    let xc = transpose(x.data(), t_in, cin);
    let (outc, t_out) = conv1d_cm(&xc, t_in, w, b, pad)?;
    let cout = b.len();
    Tensor::from_vec(&[t_out, cout], transpose(&outc, cout, t_out))
}

/// Range of output steps `t` for which `t + shift` indexes the input.
#[inline]
fn tap_range(shift: isize, t_out: usize, t_in: usize) -> (usize, usize) {
    let lo = (-shift).max(0) as usize;
    let hi = (t_in as isize - shift).clamp(0, t_out as isize) as usize;
    (lo, hi.max(lo))
}

/// [`conv1d`] on channel-major data: `x` is `[C_in, T]`, the result is
/// `[C_out, T']` together with `T'`.
pub fn conv1d_cm<F: Scalar>(x: &[F], t_in: usize, w: &Tensor<F>, b: &[F], pad: usize) -> Result<(Vec<F>, usize)> {
    let (k, cin, cout) = kernel_dims(w)?;
    if t_in == 0 || x.len() != cin * t_in || b.len() != cout {
        return Err(Error::Shape(format!(
            "conv1d: input of {} values over {t_in} steps, kernel {:?}, bias {}",
            x.len(),
            w.shape(),
            b.len()
        )));
    }
    if k > t_in + pad {
        return Err(Error::TooShort { len: t_in + pad, needed: k });
    }
    let t_out = t_in + pad - k + 1;
    let ws = w.data();
    let mut out = vec![F::zero(); cout * t_out];
    for o in 0..cout {
        let dst = &mut out[o * t_out..(o + 1) * t_out];
        dst.fill(b[o]);
        for c in 0..cin {
            let src = &x[c * t_in..(c + 1) * t_in];
            for i in 0..k {
                let shift = i as isize - pad as isize;
                let (lo, hi) = tap_range(shift, t_out, t_in);
                let s0 = (lo as isize + shift) as usize;
                axpy(&mut dst[lo..hi], ws[(i * cin + c) * cout + o], &src[s0..s0 + (hi - lo)]);
            }
        }
    }
    Ok((out, t_out))
}

/// Backward pass of [`conv1d_cm`]: accumulates `dw`, `db` and, when
/// requested, returns `dx` as `[C_in, T]`.
#[allow(clippy::too_many_arguments)]
pub fn conv1d_cm_backward<F: Scalar>(
    x: &[F],
    t_in: usize,
    w: &Tensor<F>,
    pad: usize,
    dy: &[F],
    t_out: usize,
    dw: &mut [F],
    db: &mut [F],
    want_dx: bool,
) -> Option<Vec<F>> {
    let k = w.shape()[0];
    let cin = w.shape()[1];
    let cout = w.shape()[2];
    let ws = w.data();
    for o in 0..cout {
        let g = &dy[o * t_out..(o + 1) * t_out];
        db[o] += g.iter().copied().sum::<F>();
        for c in 0..cin {
            let src = &x[c * t_in..(c + 1) * t_in];
            for i in 0..k {
                let shift = i as isize - pad as isize;
                let (lo, hi) = tap_range(shift, t_out, t_in);
                let s0 = (lo as isize + shift) as usize;
                dw[(i * cin + c) * cout + o] += dot(&src[s0..s0 + (hi - lo)], &g[lo..hi]);
            }
        }
    }
    if !want_dx {
        return None;
    }
    let mut dx = vec![F::zero(); cin * t_in];
    for c in 0..cin {
        let dst = &mut dx[c * t_in..(c + 1) * t_in];
        for o in 0..cout {
            let g = &dy[o * t_out..(o + 1) * t_out];
            for i in 0..k {
                let shift = i as isize - pad as isize;
                let (lo, hi) = tap_range(shift, t_out, t_in);
                let s0 = (lo as isize + shift) as usize;
                axpy(&mut dst[s0..s0 + (hi - lo)], ws[(i * cin + c) * cout + o], &g[lo..hi]);
            }
        }
    }
    Some(dx)
}

/// Accumulates `dw`, `db` and (when requested) returns `dx` for [`conv1d`].
pub fn conv1d_backward<F: Scalar>(
    x: &Tensor<F>,
    w: &Tensor<F>,
    pad: usize,
    dy: &Tensor<F>,
    dw: &mut [F],
    db: &mut [F],
    want_dx: bool,
) -> Option<Tensor<F>> {
    let (t_in, cin) = (x.rows(), x.cols());
    let (t_out, cout) = (dy.rows(), dy.cols());
    let xc = transpose(x.data(), t_in, cin);
    let dyc = transpose(dy.data(), t_out, cout);
    let dxc = conv1d_cm_backward(&xc, t_in, w, pad, &dyc, t_out, dw, db, want_dx)?;
    Some(Tensor::from_vec(&[t_in, cin], transpose(&dxc, cin, t_in)).unwrap())
}

fn kernel_dims<F: Scalar>(w: &Tensor<F>) -> Result<(usize, usize, usize)> {
    match *w.shape() {
        [k, cin, cout] => Ok((k, cin, cout)),
        ref s => Err(Error::Shape(format!("conv kernel must be [k, C_in, C_out], got {s:?}"))),
    }
}

/// Convolution layer with causal left padding.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d<F> {
    pub weight: Param<F>,
    pub bias: Param<F>,
    pub pad: usize,
}

impl<F: Scalar> Conv1d<F> {
    pub fn new<R: Rng>(name: &str, k: usize, cin: usize, cout: usize, causal: bool, rng: &mut R) -> Self {
        Conv1d {
            weight: Param::he_uniform(format!("{name}.weight"), &[k, cin, cout], k * cin, rng),
            bias: Param::zeros(format!("{name}.bias"), &[cout]),
            pad: if causal { k - 1 } else { 0 },
        }
    }

    pub fn kernel(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        conv1d(x, &self.weight.value, self.bias.value.data(), self.pad)
    }
}
