use rand::Rng;

use super::param::Param;
use super::tensor::{matmul, matmul_nt, matmul_tn_acc, Scalar, Tensor};
use crate::error::{Error, Result};

/// Affine map applied independently to every row: `y = x · W + b`.
pub fn fully_connected<F: Scalar>(x: &Tensor<F>, w: &Tensor<F>, b: &[F]) -> Result<Tensor<F>> {
    let (n, din) = x.expect_2d("fully_connected input")?;
    let (wdin, dout) = w.expect_2d("fully_connected weight")?;
    if wdin != din || b.len() != dout {
        return Err(Error::Shape(format!(
            "fully_connected: input width {din}, weight {:?}, bias {}",
            w.shape(),
            b.len()
        )));
    }
    let mut y = matmul(x.data(), w.data(), n, din, dout);
    for row in y.chunks_exact_mut(dout) {
        for (v, &bv) in row.iter_mut().zip(b) {
            *v += bv;
        }
    }
    Tensor::from_vec(&[n, dout], y)
}

/// Accumulates `dw`, `db`; returns `dx` when requested.
pub fn fully_connected_backward<F: Scalar>(
    x: &Tensor<F>,
    w: &Tensor<F>,
    dy: &Tensor<F>,
    dw: &mut [F],
    db: &mut [F],
    want_dx: bool,
) -> Option<Tensor<F>> {
    let (n, din) = (x.rows(), x.cols());
    let dout = dy.cols();
    matmul_tn_acc(x.data(), dy.data(), n, din, dout, dw);
    for row in dy.data().chunks_exact(dout) {
        for (d, &g) in db.iter_mut().zip(row) {
            *d += g;
        }
    }
    want_dx.then(|| Tensor::from_vec(&[n, din], matmul_nt(dy.data(), w.data(), n, dout, din)).unwrap())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Linear<F> {
    pub weight: Param<F>,
    pub bias: Param<F>,
}

impl<F: Scalar> Linear<F> {
    /// He-uniform weights; `relu_follows = false` uses the narrower
    /// √(1 / fan_in) bound for layers feeding a sigmoid/softmax.
    pub fn new<R: Rng>(name: &str, din: usize, dout: usize, relu_follows: bool, rng: &mut R) -> Self {
        let weight = if relu_follows {
            Param::he_uniform(format!("{name}.weight"), &[din, dout], din, rng)
        } else {
            Param::uniform(format!("{name}.weight"), &[din, dout], (1.0 / din as f64).sqrt(), rng)
        };
        Linear {
            weight,
            bias: Param::zeros(format!("{name}.bias"), &[dout]),
        }
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        fully_connected(x, &self.weight.value, self.bias.value.data())
    }
}
