use crate::error::{Error, Result};
use crate::label::KernelLabel;
use crate::tensor::Tensor;

/// Probabilities are clipped to `[ε, 1−ε]` before taking logarithms.
pub const BCE_EPSILON: f64 = 1e-7;

/// Mean binary cross-entropy and its gradient with respect to the probabilities.
///
/// The gradient is evaluated at the clipped probability, so a saturated but
/// wrong prediction still receives a (large) corrective signal.
pub fn bce_loss(probabilities: &Tensor, targets: &Tensor) -> Result<(f64, Tensor)> {
    if probabilities.ndim() != 1 || probabilities.shape() != targets.shape() {
        return Err(Error::dim(format!(
            "loss needs matching rank-1 probabilities and targets, got {:?} and {:?}",
            probabilities.shape(),
            targets.shape()
        )));
    }
    for &y in targets.data() {
        KernelLabel::decode(y)?;
    }
    let n = probabilities.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(probabilities.len());
    for (&p, &y) in probabilities.data().iter().zip(targets.data()) {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        let pc = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
        loss -= y * pc.ln() + (1.0 - y) * (1.0 - pc).ln();
        grad.push(-(y / pc - (1.0 - y) / (1.0 - pc)) / n);
    }
    Ok((
        (loss / n).max(0.0),
        Tensor::new(probabilities.shape(), grad)?,
    ))
}
