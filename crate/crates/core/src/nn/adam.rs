use super::param::Param;
use super::tensor::Scalar;

/// Adam with bias-corrected moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
}

impl Default for Adam {
    fn default() -> Self {
        Adam::new(1e-3)
    }
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
        }
    }

    /// Applies one update to every parameter from its accumulated gradient.
    pub fn step<'a, F: Scalar>(&mut self, params: impl IntoIterator<Item = &'a mut Param<F>>) {
        self.t += 1;
        let b1 = F::of(self.beta1);
        let b2 = F::of(self.beta2);
        let c1 = F::of(1.0 - self.beta1.powi(self.t as i32));
        let c2 = F::of(1.0 - self.beta2.powi(self.t as i32));
        let lr = F::of(self.lr);
        let eps = F::of(self.eps);
        for p in params {
            let Param { value, grad, m, v, .. } = p;
            for (((w, &g), m), v) in value.data_mut().iter_mut().zip(grad.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (F::one() - b1) * g;
                *v = b2 * *v + (F::one() - b2) * g * g;
                let mh = *m / c1;
                let vh = *v / c2;
                *w -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::tensor::Tensor;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = Param::new("w", Tensor::from_vec(&[2], vec![1.0f64, -3.0]).unwrap());
        let before = p.value.clone();
        Adam::default().step([&mut p]);
        assert_eq!(p.value, before);
    }

    #[test]
    fn first_step_on_square() {
        // f(w) = w², w = 1: g = 2, m̂ = 2, v̂ = 4, step = lr·2/(2 + eps).
        let mut p = Param::new("w", Tensor::from_vec(&[1], vec![1.0f64]).unwrap());
        p.grad.data_mut()[0] = 2.0;
        Adam::default().step([&mut p]);
        let expected = 1.0 - 1e-3 * 2.0 / (2.0 + 1e-8);
        assert!((p.value.data()[0] - expected).abs() < 1e-15);
    }
}
