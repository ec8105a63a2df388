//! Dense row-major `f64` tensors with explicit backward passes for the
//! handful of layers the autoencoder and the search controllers need.

mod batchnorm;
mod checkpoint;
mod lstm;
mod ops;
mod params;

pub use batchnorm::{batchnorm, batchnorm_backward, BatchNormCache, BatchNormState, Mode, BN_EPS, BN_MOMENTUM};
pub use checkpoint::{parse_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use lstm::{lstm_step, lstm_step_backward, LstmCache, LstmGrads, LstmParams};
pub use ops::{
    linear, linear_backward, relu, relu_backward, row_softmax, row_softmax_backward, sigmoid, sigmoid_backward,
    sigmoid_scalar, uniform_init, Activation,
};
pub use params::{finite_diff_check, AdamConfig, FiniteDiff, ParamStore};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("batch of {0} rows is too small for training-mode batch normalisation")]
    DegenerateBatch(usize),
    #[error("parameter {0} has no gradient")]
    MissingGradient(String),
    #[error("unknown parameter {0}")]
    UnknownParam(String),
    #[error("parameter {0} registered twice")]
    DuplicateParam(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

/// `A·B` for an `m×k` and a `k×n` operand given as (row, column) strides.
fn gemm(m: usize, k: usize, n: usize, a: &[f64], sa: (usize, usize), b: &[f64], sb: (usize, usize)) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    // SAFETY: the strides describe matrices lying inside `a` and `b`, and
    // `out` holds exactly `m·n` contiguous row-major elements.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            sa.0 as isize,
            sa.1 as isize,
            b.as_ptr(),
            sb.0 as isize,
            sb.1 as isize,
            0.0,
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    out
}

fn mismatch(msg: impl Into<String>) -> TensorError {
    TensorError::ShapeMismatch(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(mismatch(format!("shape {shape:?} needs {n} values, got {}", data.len())));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        Self { shape: shape.to_vec(), data: vec![value; shape.iter().product()] }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        Self::new(vec![rows, cols], data)
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Self { shape: vec![data.len()], data }
    }

    pub fn eye(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
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

    /// Leading dimension (rows of a matrix, length of a vector).
    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    /// Trailing dimension of a matrix; 1 for vectors.
    pub fn cols(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[1..].iter().product()
        } else {
            1
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let c = self.cols();
        self.data[i * c + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self, TensorError> {
        if shape.iter().product::<usize>() != self.data.len() {
            return Err(mismatch(format!("cannot reshape {:?} to {shape:?}", self.shape)));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    fn zip(&self, other: &Self, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<Self, TensorError> {
        if self.shape != other.shape {
            return Err(mismatch(format!("{what}: {:?} vs {:?}", self.shape, other.shape)));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        self.zip(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TensorError> {
        self.zip(other, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self, TensorError> {
        self.zip(other, "hadamard", |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<(), TensorError> {
        if self.shape != other.shape {
            return Err(mismatch(format!("add_assign: {:?} vs {:?}", self.shape, other.shape)));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    fn require_matrix(&self, what: &str) -> Result<(usize, usize), TensorError> {
        if self.shape.len() != 2 {
            return Err(mismatch(format!("{what} needs a matrix, got {:?}", self.shape)));
        }
        Ok((self.shape[0], self.shape[1]))
    }

    pub fn transpose(&self) -> Result<Self, TensorError> {
        let (r, c) = self.require_matrix("transpose")?;
        let mut out = Self::zeros(&[c, r]);
        for i in 0..r {
            for j in 0..c {
                out.data[j * r + i] = self.data[i * c + j];
            }
        }
        Ok(out)
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self, TensorError> {
        let (m, k) = self.require_matrix("matmul")?;
        let (k2, n) = other.require_matrix("matmul")?;
        if k != k2 {
            return Err(mismatch(format!("matmul: {:?} x {:?}", self.shape, other.shape)));
        }
        Ok(Self { shape: vec![m, n], data: gemm(m, k, n, &self.data, (k, 1), &other.data, (n, 1)) })
    }

    /// `selfᵀ · other`.
    pub fn matmul_tn(&self, other: &Self) -> Result<Self, TensorError> {
        let (k, m) = self.require_matrix("matmul_tn")?;
        let (k2, n) = other.require_matrix("matmul_tn")?;
        if k != k2 {
            return Err(mismatch(format!("matmul_tn: {:?}ᵀ x {:?}", self.shape, other.shape)));
        }
        Ok(Self { shape: vec![m, n], data: gemm(m, k, n, &self.data, (1, m), &other.data, (n, 1)) })
    }

    /// `self · otherᵀ`.
    pub fn matmul_nt(&self, other: &Self) -> Result<Self, TensorError> {
        let (m, k) = self.require_matrix("matmul_nt")?;
        let (n, k2) = other.require_matrix("matmul_nt")?;
        if k != k2 {
            return Err(mismatch(format!("matmul_nt: {:?} x {:?}ᵀ", self.shape, other.shape)));
        }
        Ok(Self { shape: vec![m, n], data: gemm(m, k, n, &self.data, (k, 1), &other.data, (1, k)) })
    }

    /// Column sums of a matrix as a vector.
    pub fn sum_rows(&self) -> Result<Self, TensorError> {
        let (r, c) = self.require_matrix("sum_rows")?;
        let mut out = vec![0.0; c];
        for i in 0..r {
            for (o, v) in out.iter_mut().zip(&self.data[i * c..(i + 1) * c]) {
                *o += v;
            }
        }
        Ok(Self::vector(out))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_length() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert_eq!(Tensor::zeros(&[2, 3]).len(), 6);
    }

    #[test]
    fn matmul_variants_agree() {
        let a = Tensor::matrix(2, 3, vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let b = Tensor::matrix(3, 2, vec![7., 8., 9., 10., 11., 12.]).unwrap();
        let ab = a.matmul(&b).unwrap();
        assert_eq!(ab.data(), &[58., 64., 139., 154.]);
        assert_eq!(a.transpose().unwrap().matmul_tn(&b).unwrap(), ab);
        assert_eq!(a.matmul_nt(&b.transpose().unwrap()).unwrap(), ab);
        assert!(a.matmul(&a).is_err());
    }

    #[test]
    fn column_sums() {
        let a = Tensor::matrix(2, 2, vec![1., 2., 3., 4.]).unwrap();
        assert_eq!(a.sum_rows().unwrap().data(), &[4., 6.]);
    }
}
