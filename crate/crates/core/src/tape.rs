//! Reverse-mode automatic differentiation over an append-only tape.
//!
//! Every operation pushes a node holding its forward value. A node requires a
//! gradient iff one of its inputs does; `backward` walks the tape in reverse
//! and accumulates vector-Jacobian products into those nodes only.
//!
//! Subgradient conventions: `relu'(0) = 0`, `abs'(0) = 0`, the clipped hinge
//! has derivative `-1` strictly inside `(0, 1)` and `0` elsewhere, and
//! `max_over_axis` routes the adjoint to the lowest maximizing index.

use crate::error::{invalid, Result};
use crate::losses::{phi, phi_derivative};
use crate::tensor::{self, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    AddBias(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    Abs(Var),
    ClippedHinge(Var),
    Sum(Var),
    Mean(Var),
    /// Inner product with constant coefficients.
    WeightedSum(Var, Vec<f64>),
    MaxOverAxis(Var, Vec<usize>),
    LogSumExp(Var),
    Gather(Var, Vec<usize>),
    /// Contiguous window of a flat input, reshaped.
    Slice(Var, usize),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Single-owner recording of a computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Adjoint of `v`; zeros when `v` does not influence the root.
    pub fn wrt(&self, v: Var) -> Tensor {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[v.0]),
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        if cfg!(debug_assertions) && !value.is_finite() {
            log::warn!("non-finite value produced by {op:?} at node {}", self.nodes.len());
        }
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Trainable input.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Input that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = tensor::matmul(self.value(a), self.value(b))?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let value = tensor::add_bias(self.value(x), self.value(bias))?;
        let rg = self.rg(x) || self.rg(bias);
        Ok(self.push(value, Op::AddBias(x, bias), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let value = self.value(x).map(|v| v * factor);
        let rg = self.rg(x);
        self.push(value, Op::Scale(x, factor), rg)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let value = tensor::relu(self.value(x));
        let rg = self.rg(x);
        self.push(value, Op::Relu(x), rg)
    }

    pub fn abs(&mut self, x: Var) -> Var {
        let value = self.value(x).map(f64::abs);
        let rg = self.rg(x);
        self.push(value, Op::Abs(x), rg)
    }

    /// Elementwise clipped hinge `phi`.
    pub fn clipped_hinge(&mut self, x: Var) -> Var {
        let value = self.value(x).map(phi);
        let rg = self.rg(x);
        self.push(value, Op::ClippedHinge(x), rg)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let value = Tensor::scalar(self.value(x).data().iter().sum());
        let rg = self.rg(x);
        self.push(value, Op::Sum(x), rg)
    }

    pub fn mean(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x);
        if t.is_empty() {
            return invalid("mean of an empty tensor");
        }
        let value = Tensor::scalar(t.data().iter().sum::<f64>() / t.len() as f64);
        let rg = self.rg(x);
        Ok(self.push(value, Op::Mean(x), rg))
    }

    /// `sum_k coeffs[k] * x[k]` over the flattened input.
    pub fn weighted_sum(&mut self, x: Var, coeffs: Vec<f64>) -> Result<Var> {
        let t = self.value(x);
        if coeffs.len() != t.len() {
            return invalid(format!(
                "weighted_sum: {} coefficients for shape {:?}",
                coeffs.len(),
                t.shape()
            ));
        }
        let value = Tensor::scalar(t.data().iter().zip(&coeffs).map(|(a, b)| a * b).sum());
        let rg = self.rg(x);
        Ok(self.push(value, Op::WeightedSum(x, coeffs), rg))
    }

    /// Row-wise max over the last axis.
    pub fn max_over_axis(&mut self, x: Var) -> Result<Var> {
        let (value, arg) = tensor::max_over_axis(self.value(x), None)?;
        let rg = self.rg(x);
        Ok(self.push(value, Op::MaxOverAxis(x, arg), rg))
    }

    /// Row-wise max skipping column `exclude[i]` in row `i`.
    pub fn max_over_axis_excluding(&mut self, x: Var, exclude: &[usize]) -> Result<Var> {
        let (value, arg) = tensor::max_over_axis(self.value(x), Some(exclude))?;
        let rg = self.rg(x);
        Ok(self.push(value, Op::MaxOverAxis(x, arg), rg))
    }

    pub fn logsumexp(&mut self, x: Var) -> Result<Var> {
        let value = tensor::logsumexp(self.value(x))?;
        let rg = self.rg(x);
        Ok(self.push(value, Op::LogSumExp(x), rg))
    }

    pub fn gather(&mut self, x: Var, index: &[usize]) -> Result<Var> {
        let value = tensor::gather(self.value(x), index)?;
        let rg = self.rg(x);
        Ok(self.push(value, Op::Gather(x, index.to_vec()), rg))
    }

    /// Window `[offset, offset + prod(shape))` of the flattened input.
    pub fn slice(&mut self, x: Var, offset: usize, shape: &[usize]) -> Result<Var> {
        let t = self.value(x);
        let n: usize = shape.iter().product();
        if offset + n > t.len() {
            return invalid(format!(
                "slice [{offset}, {}) out of range for {} elements",
                offset + n,
                t.len()
            ));
        }
        let value = Tensor::new(shape.to_vec(), t.data()[offset..offset + n].to_vec())?;
        let rg = self.rg(x);
        Ok(self.push(value, Op::Slice(x, offset), rg))
    }

    /// Back-propagates from a scalar root.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let root_value = self.value(root);
        if !root_value.is_scalar() {
            return invalid(format!(
                "backward root must be scalar, got shape {:?}",
                root_value.shape()
            ));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::new(root_value.shape().to_vec(), vec![1.0])?);

        for idx in (0..=root.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        grads.resize(self.nodes.len(), None);
        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        Ok(Gradients { grads, shapes })
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let mut acc = |v: Var, contrib: Tensor| {
            if !self.nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => {
                    for (e, c) in existing.data_mut().iter_mut().zip(contrib.data()) {
                        *e += c;
                    }
                }
                slot @ None => *slot = Some(contrib),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                if self.rg(*a) {
                    acc(*a, tensor::matmul_nt(g, bv));
                }
                if self.rg(*b) {
                    acc(*b, tensor::matmul_tn(av, g));
                }
            }
            Op::AddBias(x, b) => {
                acc(*x, g.clone());
                if self.rg(*b) {
                    let n = g.cols();
                    let mut db = vec![0.0; n];
                    for row in g.data().chunks(n) {
                        for (d, v) in db.iter_mut().zip(row) {
                            *d += v;
                        }
                    }
                    acc(*b, Tensor::vector(db));
                }
            }
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.map(|v| -v));
            }
            Op::Scale(x, f) => acc(*x, g.map(|v| v * f)),
            Op::Relu(x) => {
                let d = g
                    .zip_map(self.value(*x), |gv, xv| if xv > 0.0 { gv } else { 0.0 })
                    .expect("shapes recorded together");
                acc(*x, d);
            }
            Op::Abs(x) => {
                let d = g
                    .zip_map(self.value(*x), |gv, xv| {
                        if xv > 0.0 {
                            gv
                        } else if xv < 0.0 {
                            -gv
                        } else {
                            0.0
                        }
                    })
                    .expect("shapes recorded together");
                acc(*x, d);
            }
            Op::ClippedHinge(x) => {
                let d = g
                    .zip_map(self.value(*x), |gv, xv| gv * phi_derivative(xv))
                    .expect("shapes recorded together");
                acc(*x, d);
            }
            Op::Sum(x) => {
                let shape = self.value(*x).shape().to_vec();
                let n = self.value(*x).len();
                acc(*x, Tensor::new(shape, vec![g.item(); n]).expect("shape"));
            }
            Op::Mean(x) => {
                let shape = self.value(*x).shape().to_vec();
                let n = self.value(*x).len();
                let v = g.item() / n as f64;
                acc(*x, Tensor::new(shape, vec![v; n]).expect("shape"));
            }
            Op::WeightedSum(x, coeffs) => {
                let shape = self.value(*x).shape().to_vec();
                let gv = g.item();
                let data = coeffs.iter().map(|c| c * gv).collect();
                acc(*x, Tensor::new(shape, data).expect("shape"));
            }
            Op::MaxOverAxis(x, arg) => {
                let xv = self.value(*x);
                let c = xv.cols();
                let mut d = Tensor::zeros(xv.shape());
                for (i, &j) in arg.iter().enumerate() {
                    d.data_mut()[i * c + j] = g.data()[i];
                }
                acc(*x, d);
            }
            Op::LogSumExp(x) => {
                let xv = self.value(*x);
                let c = xv.cols();
                let mut d = Tensor::zeros(xv.shape());
                for i in 0..xv.rows() {
                    let row = xv.row(i);
                    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let out = &mut d.data_mut()[i * c..(i + 1) * c];
                    let mut z = 0.0;
                    for (o, &v) in out.iter_mut().zip(row) {
                        *o = (v - m).exp();
                        z += *o;
                    }
                    let gi = g.data()[i] / z;
                    out.iter_mut().for_each(|o| *o *= gi);
                }
                acc(*x, d);
            }
            Op::Gather(x, index) => {
                let xv = self.value(*x);
                let c = xv.cols();
                let mut d = Tensor::zeros(xv.shape());
                for (i, &j) in index.iter().enumerate() {
                    d.data_mut()[i * c + j] = g.data()[i];
                }
                acc(*x, d);
            }
            Op::Slice(x, offset) => {
                let xv = self.value(*x);
                let mut d = Tensor::zeros(xv.shape());
                d.data_mut()[*offset..*offset + g.len()].copy_from_slice(g.data());
                acc(*x, d);
            }
        }
    }
}
