use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Max pooling along time. Output length `floor((T - width) / stride) + 1`
/// (`floor(T / 3)` for width = stride = 3); the trailing remainder is
/// dropped. Also returns the winning input row per output cell, lowest
/// index on ties.
pub fn max_pool1d<F: Scalar>(x: &Tensor<F>, width: usize, stride: usize) -> Result<(Tensor<F>, Vec<u32>)> {
    let (t_in, c) = x.expect_2d("max_pool1d input")?;
    if width == 0 || stride == 0 {
        return Err(Error::invalid("pool", "width and stride must be positive"));
    }
    if t_in < width {
        return Err(Error::TooShort { len: t_in, needed: width });
    }
    let t_out = (t_in - width) / stride + 1;
    let xs = x.data();
    let mut out = vec![F::zero(); t_out * c];
    let mut arg = vec![0u32; t_out * c];
    for t in 0..t_out {
        let base = t * stride;
        let o = &mut out[t * c..(t + 1) * c];
        let a = &mut arg[t * c..(t + 1) * c];
        o.copy_from_slice(&xs[base * c..(base + 1) * c]);
        a.fill(base as u32);
        for r in base + 1..base + width {
            for ((ov, av), &v) in o.iter_mut().zip(a.iter_mut()).zip(&xs[r * c..(r + 1) * c]) {
                if v > *ov {
                    *ov = v;
                    *av = r as u32;
                }
            }
        }
    }
    Ok((Tensor::from_vec(&[t_out, c], out)?, arg))
}

/// Routes each output gradient to its window's argmax row.
pub fn max_pool1d_backward<F: Scalar>(dy: &Tensor<F>, argmax: &[u32], t_in: usize) -> Tensor<F> {
    let c = dy.cols();
    let mut dx = Tensor::zeros(&[t_in, c]);
    let d = dx.data_mut();
    for (i, (&g, &r)) in dy.data().iter().zip(argmax).enumerate() {
        d[r as usize * c + i % c] += g;
    }
    dx
}
