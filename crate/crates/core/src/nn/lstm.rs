//! Unidirectional LSTM layer with forget gate, trained by full BPTT.
//!
//! Gate layout along the `4H` axis is `[i | f | g | o]`.

use rand::Rng;

use super::param::Param;
use super::tensor::{matmul, matmul_nt, matmul_tn_acc, Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Lstm<F> {
    /// `[D_in, 4H]`
    pub wx: Param<F>,
    /// `[H, 4H]`
    pub wh: Param<F>,
    /// `[4H]`
    pub bias: Param<F>,
}

#[derive(Clone, Debug)]
pub struct LstmCache<F> {
    x: Tensor<F>,
    /// Activated gates per step, `[T, 4H]`.
    gates: Vec<F>,
    /// Cell states per step, `[T, H]`.
    c: Vec<F>,
    h: Vec<F>,
    h0: Vec<F>,
    c0: Vec<F>,
}

/// Gradients with respect to the layer inputs.
#[derive(Clone, Debug)]
pub struct LstmInputGrads<F> {
    pub dx: Tensor<F>,
    pub dh0: Vec<F>,
    pub dc0: Vec<F>,
}

fn sigmoid<F: Scalar>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

impl<F: Scalar> Lstm<F> {
    /// Uniform init with bound `√(1/D_in)`; forget-gate bias starts at 1.
    pub fn new<R: Rng>(name: &str, din: usize, hidden: usize, rng: &mut R) -> Self {
        let bx = (1.0 / din as f64).sqrt();
        let bh = (1.0 / hidden as f64).sqrt();
        let mut bias = Param::zeros(format!("{name}.bias"), &[4 * hidden]);
        bias.value.data_mut()[hidden..2 * hidden].fill(F::one());
        Lstm {
            wx: Param::uniform(format!("{name}.wx"), &[din, 4 * hidden], bx, rng),
            wh: Param::uniform(format!("{name}.wh"), &[hidden, 4 * hidden], bh, rng),
            bias,
        }
    }

    pub fn hidden(&self) -> usize {
        self.wh.value.shape()[0]
    }

    pub fn input_dim(&self) -> usize {
        self.wx.value.shape()[0]
    }

    /// Runs the sequence from `(h0, c0)` (zeros when `None`) and returns the
    /// hidden states `[T, H]`.
    pub fn forward(&self, x: &Tensor<F>, h0: Option<&[F]>, c0: Option<&[F]>) -> Result<(Tensor<F>, LstmCache<F>)> {
        let (t_len, din) = x.expect_2d("lstm input")?;
        let h = self.hidden();
        if din != self.input_dim() {
            return Err(Error::Shape(format!("lstm expects {} inputs, got {din}", self.input_dim())));
        }
        let h0 = h0.map(<[F]>::to_vec).unwrap_or_else(|| vec![F::zero(); h]);
        let c0 = c0.map(<[F]>::to_vec).unwrap_or_else(|| vec![F::zero(); h]);
        if h0.len() != h || c0.len() != h {
            return Err(Error::Shape(format!("lstm initial state must have {h} entries")));
        }
        let g4 = 4 * h;
        let mut gates = matmul(x.data(), self.wx.value.data(), t_len, din, g4);
        let b = self.bias.value.data();
        let wh = self.wh.value.data();
        let mut cs = vec![F::zero(); t_len * h];
        let mut hs = vec![F::zero(); t_len * h];
        let mut h_prev = h0.clone();
        let mut c_prev = c0.clone();
        for t in 0..t_len {
            let z = &mut gates[t * g4..(t + 1) * g4];
            for (zv, &bv) in z.iter_mut().zip(b) {
                *zv += bv;
            }
            for (j, &hv) in h_prev.iter().enumerate() {
                if hv == F::zero() {
                    continue;
                }
                for (zv, &wv) in z.iter_mut().zip(&wh[j * g4..(j + 1) * g4]) {
                    *zv += hv * wv;
                }
            }
            for j in 0..h {
                z[j] = sigmoid(z[j]);
                z[h + j] = sigmoid(z[h + j]);
                z[2 * h + j] = z[2 * h + j].tanh();
                z[3 * h + j] = sigmoid(z[3 * h + j]);
                let c = z[h + j] * c_prev[j] + z[j] * z[2 * h + j];
                cs[t * h + j] = c;
                hs[t * h + j] = z[3 * h + j] * c.tanh();
            }
            h_prev.copy_from_slice(&hs[t * h..(t + 1) * h]);
            c_prev.copy_from_slice(&cs[t * h..(t + 1) * h]);
        }
        let out = Tensor::from_vec(&[t_len, h], hs.clone())?;
        Ok((
            out,
            LstmCache {
                x: x.clone(),
                gates,
                c: cs,
                h: hs,
                h0,
                c0,
            },
        ))
    }

    /// Backpropagates `dy` (`[T, H]`) through time, accumulating weight
    /// gradients into `dwx`, `dwh`, `db`.
    pub fn backward(
        &self,
        cache: &LstmCache<F>,
        dy: &Tensor<F>,
        dwx: &mut [F],
        dwh: &mut [F],
        db: &mut [F],
    ) -> LstmInputGrads<F> {
        let h = self.hidden();
        let g4 = 4 * h;
        let t_len = dy.rows();
        let din = self.input_dim();
        let wh = self.wh.value.data();
        let mut dz = vec![F::zero(); t_len * g4];
        let mut dh_next = vec![F::zero(); h];
        let mut dc_next = vec![F::zero(); h];
        for t in (0..t_len).rev() {
            let gt = &cache.gates[t * g4..(t + 1) * g4];
            let c_prev = if t == 0 { &cache.c0[..] } else { &cache.c[(t - 1) * h..t * h] };
            let z = &mut dz[t * g4..(t + 1) * g4];
            let dyt = dy.row(t);
            for j in 0..h {
                let (i, f, g, o) = (gt[j], gt[h + j], gt[2 * h + j], gt[3 * h + j]);
                let tc = cache.c[t * h + j].tanh();
                let dh = dyt[j] + dh_next[j];
                let dc = dh * o * (F::one() - tc * tc) + dc_next[j];
                z[j] = dc * g * i * (F::one() - i);
                z[h + j] = dc * c_prev[j] * f * (F::one() - f);
                z[2 * h + j] = dc * i * (F::one() - g * g);
                z[3 * h + j] = dh * tc * o * (F::one() - o);
                dc_next[j] = dc * f;
            }
            let h_prev = if t == 0 { &cache.h0[..] } else { &cache.h[(t - 1) * h..t * h] };
            matmul_tn_acc(h_prev, z, 1, h, g4, dwh);
            for (j, d) in dh_next.iter_mut().enumerate() {
                *d = super::tensor::dot(&wh[j * g4..(j + 1) * g4], z);
            }
            for (d, &v) in db.iter_mut().zip(z.iter()) {
                *d += v;
            }
        }
        matmul_tn_acc(cache.x.data(), &dz, t_len, din, g4, dwx);
        let dx = matmul_nt(&dz, self.wx.value.data(), t_len, g4, din);
        LstmInputGrads {
            dx: Tensor::from_vec(&[t_len, din], dx).unwrap(),
            dh0: dh_next,
            dc0: dc_next,
        }
    }
}
