use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::params::{Gradients, ParamStore};
use super::tensor::Tensor;
use super::NnError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    RmsProp,
}

impl FromStr for OptimizerKind {
    type Err = NnError;
    fn from_str(s: &str) -> Result<Self, NnError> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(Self::Adam),
            "rmsprop" => Ok(Self::RmsProp),
            other => Err(NnError::InvalidConfig(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// Adam (β₁ 0.9, β₂ 0.999, ε 1e-8) or RMSprop (ρ 0.99, ε 1e-8).
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    pub kind: OptimizerKind,
    pub lr: T,
    step: i32,
    first: Vec<Tensor<T>>,
    second: Vec<Tensor<T>>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, lr: f64, params: &ParamStore<T>) -> Self {
        let zeros = || params.tensors.iter().map(|t| Tensor::zeros(&t.shape)).collect();
        Self { kind, lr: T::of(lr), step: 0, first: zeros(), second: zeros() }
    }

    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &Gradients<T>) {
        self.step += 1;
        let eps = T::of(1e-8);
        let one = T::one();
        match self.kind {
            OptimizerKind::Adam => {
                let (b1, b2) = (T::of(0.9), T::of(0.999));
                let c1 = one - b1.powi(self.step);
                let c2 = one - b2.powi(self.step);
                for (i, p) in params.tensors.iter_mut().enumerate() {
                    let g = &grads.tensors[i].data;
                    let m = &mut self.first[i].data;
                    let v = &mut self.second[i].data;
                    for k in 0..p.data.len() {
                        m[k] = b1 * m[k] + (one - b1) * g[k];
                        v[k] = b2 * v[k] + (one - b2) * g[k] * g[k];
                        let mh = m[k] / c1;
                        let vh = v[k] / c2;
                        p.data[k] -= self.lr * mh / (vh.sqrt() + eps);
                    }
                }
            }
            OptimizerKind::RmsProp => {
                let rho = T::of(0.99);
                for (i, p) in params.tensors.iter_mut().enumerate() {
                    let g = &grads.tensors[i].data;
                    let s = &mut self.second[i].data;
                    for k in 0..p.data.len() {
                        s[k] = rho * s[k] + (one - rho) * g[k] * g[k];
                        p.data[k] -= self.lr * g[k] / (s[k].sqrt() + eps);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_descent(kind: OptimizerKind) -> f64 {
        let mut p = ParamStore::<f64>::new();
        p.add("x", Tensor::row(vec![3.0, -2.0]), true);
        let mut opt = Optimizer::new(kind, 0.05, &p);
        for _ in 0..400 {
            let g = Gradients { tensors: vec![p.tensors[0].map(|x| 2.0 * x)] };
            opt.step(&mut p, &g);
        }
        p.tensors[0].max_abs()
    }

    #[test]
    fn both_minimise_a_quadratic() {
        assert!(quadratic_descent(OptimizerKind::Adam) < 0.05);
        assert!(quadratic_descent(OptimizerKind::RmsProp) < 0.05);
    }

    #[test]
    fn first_adam_step_is_lr_times_sign() {
        let mut p = ParamStore::<f64>::new();
        p.add("x", Tensor::row(vec![1.0, 1.0]), true);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.1, &p);
        opt.step(&mut p, &Gradients { tensors: vec![Tensor::row(vec![4.0, -0.5])] });
        assert!((p.tensors[0].data[0] - 0.9).abs() < 1e-8);
        assert!((p.tensors[0].data[1] - 1.1).abs() < 1e-8);
    }
}
