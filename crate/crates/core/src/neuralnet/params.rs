use rand::RngExt;

use super::tensor::Tensor;
use crate::scalar::Scalar;

/// Named parameter tensors. `decay[i]` marks weight matrices subject to L2.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore<T> {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor<T>>,
    pub decay: Vec<bool>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        Self { names: Vec::new(), tensors: Vec::new(), decay: Vec::new() }
    }

    pub fn add(&mut self, name: &str, t: Tensor<T>, decay: bool) -> usize {
        self.names.push(name.to_string());
        self.tensors.push(t);
        self.decay.push(decay);
        self.tensors.len() - 1
    }

    /// Uniform Glorot initialisation for a `rows × cols` weight matrix.
    pub fn add_glorot(&mut self, name: &str, rows: usize, cols: usize, rng: &mut impl RngExt) -> usize {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let data = (0..rows * cols).map(|_| T::of(rng.random_range(-bound..bound))).collect();
        self.add(name, Tensor::matrix(rows, cols, data), true)
    }

    pub fn add_bias(&mut self, name: &str, cols: usize) -> usize {
        self.add(name, Tensor::zeros(&[1, cols]), false)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn zero_grads(&self) -> Gradients<T> {
        Gradients { tensors: self.tensors.iter().map(|t| Tensor::zeros(&t.shape)).collect() }
    }

    /// Σ‖W‖² over decayed tensors.
    pub fn l2_norm_sq(&self) -> T {
        self.tensors.iter().zip(&self.decay).filter(|(_, d)| **d).map(|(t, _)| t.sum_squares()).sum()
    }

    pub fn round_to_f32(&mut self) {
        for t in &mut self.tensors {
            for v in &mut t.data {
                *v = v.round_to_f32();
            }
        }
    }

    pub fn fill(&mut self, v: T) {
        for t in &mut self.tensors {
            t.data.iter_mut().for_each(|e| *e = v);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: T) {
        for t in &mut self.tensors {
            t.scale(s);
        }
    }

    pub fn zero(&mut self) {
        for t in &mut self.tensors {
            t.data.iter_mut().for_each(|e| *e = T::zero());
        }
    }

    /// Add the gradient of `l2 · Σ‖W‖²`.
    pub fn add_l2(&mut self, params: &ParamStore<T>, l2: T) {
        if l2 == T::zero() {
            return;
        }
        let two = T::of(2.0);
        for ((g, p), &d) in self.tensors.iter_mut().zip(&params.tensors).zip(&params.decay) {
            if d {
                for (gv, &pv) in g.data.iter_mut().zip(&p.data) {
                    *gv += two * l2 * pv;
                }
            }
        }
    }
}
