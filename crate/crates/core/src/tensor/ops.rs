use super::{mismatch, Tensor, TensorError};

/// `y = x·W + b` for `x: B×I`, `W: I×O`, `b: O`.
pub fn linear(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    if b.len() != w.cols() || w.shape().len() != 2 {
        return Err(mismatch(format!("linear: W {:?}, b {:?}", w.shape(), b.shape())));
    }
    let mut y = x.matmul(w)?;
    let o = w.cols();
    for i in 0..y.rows() {
        for (v, bias) in y.row_mut(i).iter_mut().zip(b.data()) {
            *v += bias;
        }
    }
    debug_assert_eq!(y.cols(), o);
    Ok(y)
}

/// Returns `(grad_x, grad_W, grad_b)`.
pub fn linear_backward(x: &Tensor, w: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Tensor, Tensor), TensorError> {
    let gx = grad_out.matmul_nt(w)?;
    let gw = x.matmul_tn(grad_out)?;
    let gb = grad_out.sum_rows()?;
    Ok((gx, gw, gb))
}

/// PyTorch-style default init: uniform in `±1/√fan_in`.
pub fn uniform_init(rng: &mut crate::rng::Rng, shape: &[usize], fan_in: usize) -> Tensor {
    use rand::Rng;
    let bound = 1.0 / (fan_in as f64).sqrt();
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-bound..bound)).collect()).expect("shape")
}

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

/// Gradient through ReLU given its input; the kink at 0 takes slope 0.
pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Result<Tensor, TensorError> {
    x.zip(grad_out, "relu_backward", |v, g| if v > 0.0 { g } else { 0.0 })
}

pub fn sigmoid_scalar(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    x.map(sigmoid_scalar)
}

/// Gradient through the sigmoid given its output.
pub fn sigmoid_backward(y: &Tensor, grad_out: &Tensor) -> Result<Tensor, TensorError> {
    y.zip(grad_out, "sigmoid_backward", |s, g| g * s * (1.0 - s))
}

pub fn row_softmax(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    for i in 0..y.rows() {
        let row = y.row_mut(i);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    y
}

/// Gradient through the row softmax given its output.
pub fn row_softmax_backward(y: &Tensor, grad_out: &Tensor) -> Result<Tensor, TensorError> {
    if y.shape() != grad_out.shape() {
        return Err(mismatch("row_softmax_backward"));
    }
    let mut gx = Tensor::zeros(y.shape());
    for i in 0..y.rows() {
        let (yr, gr) = (y.row(i), grad_out.row(i));
        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
        for (o, (&yv, &gv)) in gx.row_mut(i).iter_mut().zip(yr.iter().zip(gr)) {
            *o = yv * (gv - dot);
        }
    }
    Ok(gx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    RowSoftmax,
}

impl Activation {
    pub fn forward(self, x: &Tensor) -> Tensor {
        match self {
            Activation::Relu => relu(x),
            Activation::Sigmoid => sigmoid(x),
            Activation::RowSoftmax => row_softmax(x),
        }
    }

    /// `x` is the forward input, `y` the forward output.
    pub fn backward(self, x: &Tensor, y: &Tensor, grad_out: &Tensor) -> Result<Tensor, TensorError> {
        match self {
            Activation::Relu => relu_backward(x, grad_out),
            Activation::Sigmoid => sigmoid_backward(y, grad_out),
            Activation::RowSoftmax => row_softmax_backward(y, grad_out),
        }
    }
}
