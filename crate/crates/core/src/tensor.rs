//! Dense row-major `f64` tensors and the eager kernels shared by the tape.

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return invalid(format!(
                "shape {shape:?} needs {expected} elements, got {}",
                data.len()
            ));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1 && self.shape.iter().all(|&d| d == 1)
    }

    /// The single value of a scalar (or 1-element) tensor.
    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    pub fn rows(&self) -> usize {
        match self.shape.len() {
            2 => self.shape[0],
            _ => 1,
        }
    }

    pub fn cols(&self) -> usize {
        self.shape.last().copied().unwrap_or(1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
        same_shape("elementwise", self, other)?;
        Ok(Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return invalid(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            ));
        }
        self.shape = shape;
        Ok(self)
    }

    /// Selects whole rows of a matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Tensor {
        let c = self.cols();
        let mut data = Vec::with_capacity(indices.len() * c);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Tensor {
            shape: vec![indices.len(), c],
            data,
        }
    }

    /// Stacks matrices with equal column counts.
    pub fn vstack(parts: &[Tensor]) -> Result<Tensor> {
        let Some(first) = parts.first() else {
            return invalid("vstack of zero tensors");
        };
        let c = first.cols();
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.shape.len() != 2 || p.cols() != c {
                return invalid(format!(
                    "vstack shape mismatch: {:?} vs {:?}",
                    first.shape, p.shape
                ));
            }
            rows += p.rows();
            data.extend_from_slice(&p.data);
        }
        Tensor::matrix(rows, c, data)
    }
}

pub(crate) fn same_shape(op: &str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape != b.shape {
        return invalid(format!("{op}: shape mismatch {:?} vs {:?}", a.shape, b.shape));
    }
    Ok(())
}

fn require_matrix(op: &str, t: &Tensor) -> Result<(usize, usize)> {
    if t.shape.len() != 2 {
        return invalid(format!("{op}: expected a matrix, got shape {:?}", t.shape));
    }
    Ok((t.shape[0], t.shape[1]))
}

/// Shape of a last-axis reduction: matrix rows for 2-D input, scalar for 1-D.
fn reduced_shape(op: &str, t: &Tensor) -> Result<Vec<usize>> {
    match t.shape.len() {
        1 if t.shape[0] > 0 => Ok(Vec::new()),
        2 if t.shape[1] > 0 => Ok(vec![t.shape[0]]),
        _ => invalid(format!("{op}: expected a nonempty vector or matrix, got {:?}", t.shape)),
    }
}

pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = require_matrix("matmul", a)?;
    let (k2, n) = require_matrix("matmul", b)?;
    if k != k2 {
        return invalid(format!("matmul: shape mismatch {:?} x {:?}", a.shape, b.shape));
    }
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let a_row = &a.data[i * k..(i + 1) * k];
        let o_row = &mut out[i * n..(i + 1) * n];
        for (p, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let b_row = &b.data[p * n..(p + 1) * n];
            for (o, &bv) in o_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
    Tensor::matrix(m, n, out)
}

/// `a^T * b` without materializing the transpose.
pub(crate) fn matmul_tn(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = (a.shape[0], a.shape[1]);
    let n = b.shape[1];
    let mut out = vec![0.0; k * n];
    for i in 0..m {
        let b_row = &b.data[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a.data[i * k + p];
            if av == 0.0 {
                continue;
            }
            let o_row = &mut out[p * n..(p + 1) * n];
            for (o, &bv) in o_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
    Tensor {
        shape: vec![k, n],
        data: out,
    }
}

/// `a * b^T` without materializing the transpose.
pub(crate) fn matmul_nt(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, n) = (a.shape[0], a.shape[1]);
    let k = b.shape[0];
    let mut out = vec![0.0; m * k];
    for i in 0..m {
        let a_row = &a.data[i * n..(i + 1) * n];
        for p in 0..k {
            let b_row = &b.data[p * n..(p + 1) * n];
            out[i * k + p] = a_row.iter().zip(b_row).map(|(x, y)| x * y).sum();
        }
    }
    Tensor {
        shape: vec![m, k],
        data: out,
    }
}

/// Adds a length-`n` bias to every row of a `B x n` matrix.
pub fn add_bias(x: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (_, n) = require_matrix("add_bias", x)?;
    if bias.shape != [n] {
        return invalid(format!(
            "add_bias: shape mismatch {:?} vs bias {:?}",
            x.shape, bias.shape
        ));
    }
    let mut out = x.clone();
    for row in out.data.chunks_mut(n) {
        for (o, &b) in row.iter_mut().zip(&bias.data) {
            *o += b;
        }
    }
    Ok(out)
}

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Row-wise maximum over the last axis, skipping `exclude[row]` when given.
/// Ties resolve to the lowest index. Returns values and argmax positions.
pub fn max_over_axis(x: &Tensor, exclude: Option<&[usize]>) -> Result<(Tensor, Vec<usize>)> {
    let shape = reduced_shape("max_over_axis", x)?;
    let rows = x.rows();
    let c = x.cols();
    if let Some(ex) = exclude {
        if ex.len() != rows {
            return invalid(format!(
                "max_over_axis: {} exclusions for {rows} rows",
                ex.len()
            ));
        }
        if c < 2 {
            return invalid("max_over_axis: exclusion needs at least two columns");
        }
        if let Some(&bad) = ex.iter().find(|&&e| e >= c) {
            return invalid(format!("max_over_axis: excluded index {bad} out of range for {c} columns"));
        }
    }
    let mut values = Vec::with_capacity(rows);
    let mut arg = Vec::with_capacity(rows);
    for i in 0..rows {
        let row = x.row(i);
        let skip = exclude.map(|e| e[i]);
        let mut best: Option<usize> = None;
        for (j, &v) in row.iter().enumerate() {
            if Some(j) == skip {
                continue;
            }
            match best {
                Some(b) if row[b] >= v => {}
                _ => best = Some(j),
            }
        }
        let b = best.expect("row has a candidate");
        values.push(row[b]);
        arg.push(b);
    }
    Ok((Tensor::new(shape, values)?, arg))
}

/// Row-wise argmax with lowest-index tie breaking.
pub fn argmax_rows(x: &Tensor) -> Vec<usize> {
    (0..x.rows())
        .map(|i| {
            let row = x.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Shift-by-max `ln sum exp` of a slice.
pub fn logsumexp_slice(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// Row-wise logsumexp over the last axis.
pub fn logsumexp(x: &Tensor) -> Result<Tensor> {
    let shape = reduced_shape("logsumexp", x)?;
    let values = (0..x.rows()).map(|i| logsumexp_slice(x.row(i))).collect();
    Tensor::new(shape, values)
}

/// Picks `x[i, index[i]]` from every row of a matrix.
pub fn gather(x: &Tensor, index: &[usize]) -> Result<Tensor> {
    let (rows, c) = require_matrix("gather", x)?;
    if index.len() != rows {
        return invalid(format!("gather: {} indices for {rows} rows", index.len()));
    }
    if let Some(&bad) = index.iter().find(|&&j| j >= c) {
        return invalid(format!("gather: index {bad} out of range for {c} columns"));
    }
    Ok(Tensor::vector(
        index.iter().enumerate().map(|(i, &j)| x.data[i * c + j]).collect(),
    ))
}

/// `log(1 + sum_j exp(v_j))`, the softmax log-denominator relative to a zero logit.
pub fn logsumexp1p(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(0.0f64, f64::max);
    let tail: f64 = v.iter().map(|&x| (x - m).exp()).sum();
    m + ((-m).exp() + tail).ln()
}
