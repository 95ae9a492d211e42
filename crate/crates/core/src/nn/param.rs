use rand::Rng;

use super::tensor::{Scalar, Tensor};

/// A trainable tensor with its gradient accumulator and Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Param<F> {
    pub name: String,
    pub value: Tensor<F>,
    pub grad: Tensor<F>,
    pub m: Vec<F>,
    pub v: Vec<F>,
}

impl<F: Scalar> Param<F> {
    pub fn new(name: impl Into<String>, value: Tensor<F>) -> Self {
        let n = value.len();
        Param {
            name: name.into(),
            grad: Tensor::zeros(value.shape()),
            value,
            m: vec![F::zero(); n],
            v: vec![F::zero(); n],
        }
    }

    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        Param::new(name, Tensor::zeros(shape))
    }

    pub fn filled(name: impl Into<String>, shape: &[usize], v: F) -> Self {
        let mut t = Tensor::zeros(shape);
        t.fill(v);
        Param::new(name, t)
    }

    /// Uniform in `[-bound, bound]`.
    pub fn uniform<R: Rng>(name: impl Into<String>, shape: &[usize], bound: f64, rng: &mut R) -> Self {
        let t = Tensor::from_fn(shape, |_| F::of(rng.random_range(-bound..=bound)));
        Param::new(name, t)
    }

    /// Fan-in-scaled uniform for layers followed by ReLU: bound √(6 / fan_in).
    pub fn he_uniform<R: Rng>(name: impl Into<String>, shape: &[usize], fan_in: usize, rng: &mut R) -> Self {
        Param::uniform(name, shape, (6.0 / fan_in as f64).sqrt(), rng)
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(F::zero());
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn add_grad(&mut self, g: &[F]) {
        for (a, &b) in self.grad.data_mut().iter_mut().zip(g) {
            *a += b;
        }
    }
}
