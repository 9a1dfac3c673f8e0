use super::Tensor;
use crate::error::{Error, Result};

/// Largest `f64` strictly below 1.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function in the two-branch form that only ever exponentiates a
/// non-positive number. Saturates at the representable values nearest 0 and 1
/// so the result always lies strictly inside the open unit interval.
pub fn sigmoid_scalar(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    map(x, sigmoid_scalar)
}

/// Gradient through the sigmoid given its forward *output*.
pub fn sigmoid_backward(output: &Tensor, grad: &Tensor) -> Result<Tensor> {
    zip(output, grad, "sigmoid", |s, g| g * s * (1.0 - s))
}

pub fn relu(x: &Tensor) -> Tensor {
    map(x, |v| v.max(0.0))
}

/// Gradient through ReLU given its forward *input*; zero at the kink.
pub fn relu_backward(input: &Tensor, grad: &Tensor) -> Result<Tensor> {
    zip(input, grad, "relu", |x, g| if x > 0.0 { g } else { 0.0 })
}

fn map(x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    let mut out = x.clone();
    out.data_mut().iter_mut().for_each(|v| *v = f(*v));
    out
}

fn zip(a: &Tensor, grad: &Tensor, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
    if a.shape() != grad.shape() {
        return Err(Error::dim(format!(
            "{what} gradient shape {:?} does not match {:?}",
            grad.shape(),
            a.shape()
        )));
    }
    let mut out = grad.clone();
    out.data_mut()
        .iter_mut()
        .zip(a.data())
        .for_each(|(g, &x)| *g = f(x, *g));
    Ok(out)
}
