use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variance floor used by [`layer_norm`].
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::shape("Matrix::new", (rows, cols), (data.len(), 1)));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::shape("Matrix::from_rows", (1, cols), (1, r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn row_vector(values: Vec<f64>) -> Self {
        Matrix {
            rows: 1,
            cols: values.len(),
            data: values,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn ensure_same_shape(&self, other: &Matrix, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(op, self.shape(), other.shape()));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        self.ensure_same_shape(other, "zip_map")?;
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add_assign(&mut self, other: &Matrix) -> Result<()> {
        self.ensure_same_shape(other, "add_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Matrix {
        self.map(|v| v * s)
    }

    /// Adds a `1 × cols` row to every row.
    pub fn add_row(&self, row: &Matrix) -> Result<Matrix> {
        if row.rows != 1 || row.cols != self.cols {
            return Err(Error::shape("add_row", self.shape(), row.shape()));
        }
        let mut out = self.clone();
        for i in 0..out.rows {
            for (v, b) in out.row_mut(i).iter_mut().zip(&row.data) {
                *v += b;
            }
        }
        Ok(out)
    }

    /// Multiplies every row elementwise by a `1 × cols` row.
    pub fn mul_row(&self, row: &Matrix) -> Result<Matrix> {
        if row.rows != 1 || row.cols != self.cols {
            return Err(Error::shape("mul_row", self.shape(), row.shape()));
        }
        let mut out = self.clone();
        for i in 0..out.rows {
            for (v, b) in out.row_mut(i).iter_mut().zip(&row.data) {
                *v *= b;
            }
        }
        Ok(out)
    }

    /// Column sums as a `1 × cols` row.
    pub fn col_sums(&self) -> Matrix {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        Matrix::row_vector(out)
    }

    pub fn col_means(&self) -> Matrix {
        let n = self.rows.max(1) as f64;
        self.col_sums().map(|v| v / n)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::shape("hcat", self.shape(), other.shape()));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// Splits columns into `[.., at)` and `[at, ..)`.
    pub fn hsplit(&self, at: usize) -> (Matrix, Matrix) {
        assert!(at <= self.cols);
        let left = Matrix::from_fn(self.rows, at, |i, j| self.get(i, j));
        let right = Matrix::from_fn(self.rows, self.cols - at, |i, j| self.get(i, at + j));
        (left, right)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn matmul_tn(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::shape("matmul_tn", self.shape(), other.shape()));
        }
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out.row_mut(i).iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · otherᵀ` without materializing the transpose.
    pub fn matmul_nt(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::shape("matmul_nt", self.shape(), other.shape()));
        }
        Ok(Matrix::from_fn(self.rows, other.rows, |i, j| {
            self.row(i).iter().zip(other.row(j)).map(|(a, b)| a * b).sum()
        }))
    }
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::shape("matmul", a.shape(), b.shape()));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let a_row = a.row(i);
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            for (o, &bv) in out_row.iter_mut().zip(b.row(k)) {
                *o += av * bv;
            }
        }
    }
    Ok(out)
}

pub fn hadamard(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.zip_map(b, |x, y| x * y)
        .map_err(|_| Error::shape("hadamard", a.shape(), b.shape()))
}

pub fn transpose(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.cols, a.rows, |i, j| a.get(j, i))
}

pub fn sigmoid(a: &Matrix) -> Matrix {
    a.map(sigmoid_scalar)
}

/// Intermediates of a row-wise layer normalization, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LayerNormCache {
    /// Rows normalized to zero mean and (near) unit variance, before gain/bias.
    pub normalized: Matrix,
    /// `1 / sqrt(var + eps)` per row.
    pub inv_std: Vec<f64>,
}

/// Row-wise layer normalization followed by per-column `gain` and `bias` (`1 × cols` each).
pub fn layer_norm(a: &Matrix, gain: &Matrix, bias: &Matrix) -> Result<Matrix> {
    layer_norm_with_cache(a, gain, bias).map(|(out, _)| out)
}

pub fn layer_norm_with_cache(a: &Matrix, gain: &Matrix, bias: &Matrix) -> Result<(Matrix, LayerNormCache)> {
    if gain.shape() != (1, a.cols) {
        return Err(Error::shape("layer_norm gain", a.shape(), gain.shape()));
    }
    if bias.shape() != (1, a.cols) {
        return Err(Error::shape("layer_norm bias", a.shape(), bias.shape()));
    }
    let n = a.cols as f64;
    let mut normalized = a.clone();
    let mut inv_std = Vec::with_capacity(a.rows);
    for i in 0..a.rows {
        let row = normalized.row_mut(i);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let s = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        for v in row.iter_mut() {
            *v = (*v - mean) * s;
        }
        inv_std.push(s);
    }
    let out = normalized.mul_row(gain)?.add_row(bias)?;
    Ok((out, LayerNormCache { normalized, inv_std }))
}

/// Gradients of [`layer_norm`] given the upstream gradient on its output.
/// Returns `(d_input, d_gain, d_bias)`.
pub fn layer_norm_backward(
    upstream: &Matrix,
    gain: &Matrix,
    cache: &LayerNormCache,
) -> Result<(Matrix, Matrix, Matrix)> {
    let xhat = &cache.normalized;
    if upstream.shape() != xhat.shape() {
        return Err(Error::shape(
            "layer_norm_backward",
            upstream.shape(),
            xhat.shape(),
        ));
    }
    let d_gain = hadamard(upstream, xhat)?.col_sums();
    let d_bias = upstream.col_sums();
    let d_xhat = upstream.mul_row(gain)?;
    let n = xhat.cols as f64;
    let mut d_input = Matrix::zeros(xhat.rows, xhat.cols);
    for i in 0..xhat.rows {
        let g = d_xhat.row(i);
        let h = xhat.row(i);
        let mean_g = g.iter().sum::<f64>() / n;
        let mean_gh = g.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() / n;
        let s = cache.inv_std[i];
        for (j, d) in d_input.row_mut(i).iter_mut().enumerate() {
            *d = s * (g[j] - mean_g - h[j] * mean_gh);
        }
    }
    Ok((d_input, d_gain, d_bias))
}
