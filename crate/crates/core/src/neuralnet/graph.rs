//! Reverse-mode automatic differentiation over rank-2 tensors.
//!
//! A [`Graph`] records operations eagerly (values are computed as nodes are
//! added). Parameters are read by reference from a [`ParamStore`]; calling
//! [`Graph::backward`] accumulates their gradients into a [`Gradients`].

use super::params::{Gradients, ParamStore};
use super::tensor::Tensor;
use crate::scalar::Scalar;

/// Clamp applied inside logarithms of the cross-entropy loss.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op<T> {
    Leaf,
    Param(usize),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    SoftmaxRows(Var),
    RowSums(Var),
    Transpose(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    Unfold(Var, usize),
    MaxPoolRows(Var, Vec<usize>),
    Mask(Var, Tensor<T>),
    Flatten(Var),
    SigmoidBce(Var, Vec<T>),
}

struct Node<T> {
    op: Op<T>,
    value: Option<Tensor<T>>,
}

pub struct Graph<'p, T: Scalar> {
    params: &'p ParamStore<T>,
    nodes: Vec<Node<T>>,
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Self { params, nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op<T>, value: Tensor<T>) -> Var {
        self.nodes.push(Node { op, value: Some(value) });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        let node = &self.nodes[v.0];
        match node.op {
            Op::Param(id) => &self.params.tensors[id],
            _ => node.value.as_ref().expect("non-parameter nodes hold values"),
        }
    }

    pub fn input(&mut self, t: Tensor<T>) -> Var {
        self.push(Op::Leaf, t)
    }

    pub fn param(&mut self, id: usize) -> Var {
        self.nodes.push(Node { op: Op::Param(id), value: None });
        Var(self.nodes.len() - 1)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(Op::MatMul(a, b), v)
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul_t(self.value(b));
        self.push(Op::MatMulT(a, b), v)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(Op::Add(a, b), v)
    }

    /// Add a `1 × m` row to every row of an `n × m` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let (x, r) = (self.value(a), self.value(row));
        let m = x.cols();
        assert_eq!(r.len(), m, "row broadcast width");
        let mut v = x.clone();
        for (i, e) in v.data.iter_mut().enumerate() {
            *e += r.data[i % m];
        }
        self.push(Op::AddRow(a, row), v)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(Op::Mul(a, b), v)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        self.push(Op::Sigmoid(a), v)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(T::tanh);
        self.push(Op::Tanh(a), v)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(T::zero()));
        self.push(Op::Relu(a), v)
    }

    /// Softmax along each row.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let c = x.cols();
        let mut v = x.clone();
        for row in v.data.chunks_mut(c) {
            let max = row.iter().fold(T::neg_infinity(), |m, &e| m.max(e));
            let mut sum = T::zero();
            for e in row.iter_mut() {
                *e = (*e - max).exp();
                sum += *e;
            }
            for e in row.iter_mut() {
                *e /= sum;
            }
        }
        self.push(Op::SoftmaxRows(a), v)
    }

    /// `n × m` → `n × 1` sums over each row.
    pub fn row_sums(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let c = x.cols();
        let v = Tensor::matrix(x.rows(), 1, x.data.chunks(c).map(|r| r.iter().copied().sum()).collect());
        self.push(Op::RowSums(a), v)
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        self.push(Op::Transpose(a), v)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows();
        let widths: Vec<usize> = parts.iter().map(|&p| self.value(p).cols()).collect();
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                let t = self.value(p);
                assert_eq!(t.rows(), rows, "concat_cols row count");
                data.extend_from_slice(t.row_slice(r));
            }
        }
        self.push(Op::ConcatCols(parts.to_vec()), Tensor::matrix(rows, total, data))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let cols = self.value(parts[0]).cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let t = self.value(p);
            assert_eq!(t.cols(), cols, "concat_rows width");
            data.extend_from_slice(&t.data);
            rows += t.rows();
        }
        self.push(Op::ConcatRows(parts.to_vec()), Tensor::matrix(rows, cols, data))
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, len: usize) -> Var {
        let x = self.value(a);
        let c = x.cols();
        let v = Tensor::matrix(len, c, x.data[start * c..(start + len) * c].to_vec());
        self.push(Op::SliceRows(a, start), v)
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let x = self.value(a);
        let mut data = Vec::with_capacity(x.rows() * len);
        for r in 0..x.rows() {
            data.extend_from_slice(&x.row_slice(r)[start..start + len]);
        }
        let v = Tensor::matrix(x.rows(), len, data);
        self.push(Op::SliceCols(a, start), v)
    }

    /// Windows of `k` consecutive rows laid side by side:
    /// `N × C` → `(N − k + 1) × kC`. A valid, stride-1 convolution is then a matmul.
    pub fn unfold(&mut self, a: Var, k: usize) -> Var {
        let x = self.value(a);
        let (n, c) = (x.rows(), x.cols());
        assert!(n >= k, "unfold needs at least {k} rows, got {n}");
        let out_rows = n - k + 1;
        let mut data = Vec::with_capacity(out_rows * k * c);
        for i in 0..out_rows {
            data.extend_from_slice(&x.data[i * c..(i + k) * c]);
        }
        self.push(Op::Unfold(a, k), Tensor::matrix(out_rows, k * c, data))
    }

    /// Max over windows of `kernel` rows moved by `stride`, per column.
    /// Ties resolve to the first row of the window.
    pub fn max_pool_rows(&mut self, a: Var, kernel: usize, stride: usize) -> Var {
        let x = self.value(a);
        let (n, c) = (x.rows(), x.cols());
        assert!(n >= kernel && stride >= 1, "pooling window larger than input");
        let out_rows = (n - kernel) / stride + 1;
        let mut data = Vec::with_capacity(out_rows * c);
        let mut argmax = Vec::with_capacity(out_rows * c);
        for o in 0..out_rows {
            for j in 0..c {
                let mut best = (o * stride) * c + j;
                for r in o * stride + 1..o * stride + kernel {
                    if x.data[r * c + j] > x.data[best] {
                        best = r * c + j;
                    }
                }
                data.push(x.data[best]);
                argmax.push(best);
            }
        }
        self.push(Op::MaxPoolRows(a, argmax), Tensor::matrix(out_rows, c, data))
    }

    /// Element-wise product with a constant mask (dropout).
    pub fn mask(&mut self, a: Var, mask: Tensor<T>) -> Var {
        let v = self.value(a).zip_map(&mask, |x, m| x * m);
        self.push(Op::Mask(a, mask), v)
    }

    /// Reshape to a single row.
    pub fn flatten(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let v = Tensor::row(x.data.clone());
        self.push(Op::Flatten(a), v)
    }

    /// Summed binary cross-entropy of `sigmoid(logits)` against `targets`, as a `1 × 1` tensor.
    pub fn sigmoid_bce(&mut self, logits: Var, targets: &[T]) -> Var {
        let z = self.value(logits);
        assert_eq!(z.len(), targets.len(), "logit / target length");
        let clamp = T::of(LOG_CLAMP);
        let loss: T = z
            .data
            .iter()
            .zip(targets)
            .map(|(&z, &y)| {
                let p = sigmoid(z);
                -(y * p.max(clamp).ln() + (T::one() - y) * (T::one() - p).max(clamp).ln())
            })
            .sum();
        self.push(Op::SigmoidBce(logits, targets.to_vec()), Tensor::matrix(1, 1, vec![loss]))
    }

    /// Backpropagate from the scalar node `loss`, adding parameter gradients into `grads`.
    pub fn backward(&self, loss: Var, grads: &mut Gradients<T>) {
        self.backward_seeded(loss, Tensor::filled(&self.value(loss).shape, T::one()), grads);
    }

    /// Backpropagate an explicit output gradient.
    pub fn backward_seeded(&self, out: Var, seed: Tensor<T>, grads: &mut Gradients<T>) {
        let mut g: Vec<Option<Tensor<T>>> = (0..=out.0).map(|_| None).collect();
        g[out.0] = Some(seed);
        for i in (0..=out.0).rev() {
            let Some(gi) = g[i].take() else { continue };
            let y = self.nodes[i].value.as_ref();
            match &self.nodes[i].op {
                Op::Leaf => {}
                Op::Param(id) => grads.tensors[*id].add_assign(&gi),
                Op::MatMul(a, b) => {
                    let da = gi.matmul_t(self.value(*b));
                    let db = self.value(*a).t_matmul(&gi);
                    acc(&mut g, *a, da);
                    acc(&mut g, *b, db);
                }
                Op::MatMulT(a, b) => {
                    let da = gi.matmul(self.value(*b));
                    let db = gi.t_matmul(self.value(*a));
                    acc(&mut g, *a, da);
                    acc(&mut g, *b, db);
                }
                Op::Add(a, b) => {
                    acc(&mut g, *b, gi.clone());
                    acc(&mut g, *a, gi);
                }
                Op::AddRow(a, row) => {
                    let m = gi.cols();
                    let mut dr = vec![T::zero(); m];
                    for (k, &v) in gi.data.iter().enumerate() {
                        dr[k % m] += v;
                    }
                    let shape = self.value(*row).shape.clone();
                    acc(&mut g, *row, Tensor::from_vec(&shape, dr));
                    acc(&mut g, *a, gi);
                }
                Op::Mul(a, b) => {
                    let da = gi.zip_map(self.value(*b), |g, y| g * y);
                    let db = gi.zip_map(self.value(*a), |g, x| g * x);
                    acc(&mut g, *a, da);
                    acc(&mut g, *b, db);
                }
                Op::Sigmoid(a) => {
                    let d = gi.zip_map(y.unwrap(), |g, s| g * s * (T::one() - s));
                    acc(&mut g, *a, d);
                }
                Op::Tanh(a) => {
                    let d = gi.zip_map(y.unwrap(), |g, t| g * (T::one() - t * t));
                    acc(&mut g, *a, d);
                }
                Op::Relu(a) => {
                    let d = gi.zip_map(self.value(*a), |g, x| if x > T::zero() { g } else { T::zero() });
                    acc(&mut g, *a, d);
                }
                Op::SoftmaxRows(a) => {
                    let s = y.unwrap();
                    let c = s.cols();
                    let mut d = gi.clone();
                    for (drow, srow) in d.data.chunks_mut(c).zip(s.data.chunks(c)) {
                        let dot: T = drow.iter().zip(srow).map(|(&g, &p)| g * p).sum();
                        for (dv, &p) in drow.iter_mut().zip(srow) {
                            *dv = p * (*dv - dot);
                        }
                    }
                    acc(&mut g, *a, d);
                }
                Op::RowSums(a) => {
                    let x = self.value(*a);
                    let c = x.cols();
                    let data = (0..x.len()).map(|k| gi.data[k / c]).collect();
                    acc(&mut g, *a, Tensor::from_vec(&x.shape, data));
                }
                Op::Transpose(a) => acc(&mut g, *a, gi.transpose()),
                Op::ConcatCols(parts) => {
                    let rows = gi.rows();
                    let mut offset = 0;
                    for &p in parts {
                        let w = self.value(p).cols();
                        let mut data = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            data.extend_from_slice(&gi.row_slice(r)[offset..offset + w]);
                        }
                        offset += w;
                        acc(&mut g, p, Tensor::matrix(rows, w, data));
                    }
                }
                Op::ConcatRows(parts) => {
                    let c = gi.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let n = self.value(p).rows();
                        let t = Tensor::matrix(n, c, gi.data[offset * c..(offset + n) * c].to_vec());
                        offset += n;
                        acc(&mut g, p, t);
                    }
                }
                Op::SliceRows(a, start) => {
                    let x = self.value(*a);
                    let c = x.cols();
                    let mut d = Tensor::zeros(&[x.rows(), c]);
                    d.data[start * c..start * c + gi.len()].copy_from_slice(&gi.data);
                    acc(&mut g, *a, d);
                }
                Op::SliceCols(a, start) => {
                    let x = self.value(*a);
                    let (rows, c, w) = (x.rows(), x.cols(), gi.cols());
                    let mut d = Tensor::zeros(&[rows, c]);
                    for r in 0..rows {
                        d.data[r * c + start..r * c + start + w].copy_from_slice(gi.row_slice(r));
                    }
                    acc(&mut g, *a, d);
                }
                Op::Unfold(a, k) => {
                    let x = self.value(*a);
                    let c = x.cols();
                    let mut d = Tensor::zeros(&[x.rows(), c]);
                    for i in 0..gi.rows() {
                        for (dv, &gv) in d.data[i * c..(i + k) * c].iter_mut().zip(gi.row_slice(i)) {
                            *dv += gv;
                        }
                    }
                    acc(&mut g, *a, d);
                }
                Op::MaxPoolRows(a, argmax) => {
                    let x = self.value(*a);
                    let mut d = Tensor::zeros(&x.shape);
                    for (&src, &gv) in argmax.iter().zip(&gi.data) {
                        d.data[src] += gv;
                    }
                    acc(&mut g, *a, d);
                }
                Op::Mask(a, m) => acc(&mut g, *a, gi.zip_map(m, |g, m| g * m)),
                Op::Flatten(a) => {
                    let shape = self.value(*a).shape.clone();
                    acc(&mut g, *a, Tensor::from_vec(&shape, gi.data));
                }
                Op::SigmoidBce(logits, targets) => {
                    let z = self.value(*logits);
                    let up = gi.data[0];
                    let data = z.data.iter().zip(targets).map(|(&z, &y)| up * (sigmoid(z) - y)).collect();
                    acc(&mut g, *logits, Tensor::from_vec(&z.shape, data));
                }
            }
        }
    }
}

fn acc<T: Scalar>(g: &mut [Option<Tensor<T>>], v: Var, d: Tensor<T>) {
    match &mut g[v.0] {
        Some(existing) => existing.add_assign(&d),
        slot @ None => *slot = Some(d),
    }
}

pub fn sigmoid_scalar<T: Scalar>(x: T) -> T {
    sigmoid(x)
}
