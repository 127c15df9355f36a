use super::tensor::Tensor;
use crate::{Error, Result};

/// Mean absolute error and its subgradient `sign(pred - target) / n`, with `sign(0) = 0`.
pub fn l1_loss(prediction: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if prediction.shape != target.shape {
        return Err(Error::shape(
            format!("{:?}", target.shape),
            format!("{:?}", prediction.shape),
        ));
    }
    let n = prediction.len();
    if n == 0 {
        return Err(Error::Empty("loss input"));
    }
    let inv = 1.0 / n as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(n);
    for (p, t) in prediction.values.iter().zip(&target.values) {
        let diff = p - t;
        loss += diff.abs();
        let sign = if diff > 0.0 {
            1.0
        } else if diff < 0.0 {
            -1.0
        } else {
            0.0
        };
        grad.push(sign * inv);
    }
    Ok((loss * inv, Tensor::new(prediction.shape.clone(), grad)?))
}
