//! Smooth-L1 (Huber) regression loss with transition point 1.

use crate::error::{Error, Result};
use crate::num::Real;

/// Mean smooth-L1 loss: per element, `0.5 e^2` for `|e| < 1` and
/// `|e| - 0.5` otherwise, with `e = pred - target`.
pub fn smooth_l1<T: Real>(pred: &[T], target: &[T]) -> Result<T> {
    Ok(smooth_l1_with_grad(pred, target)?.0)
}

/// Loss value plus its gradient with respect to `pred`.
pub fn smooth_l1_with_grad<T: Real>(pred: &[T], target: &[T]) -> Result<(T, Vec<T>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "smooth_l1 needs equal nonempty lengths, got {} and {}",
            pred.len(),
            target.len()
        )));
    }
    let n = T::cast(pred.len() as f64);
    let half = T::cast(0.5);
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(pred.len());
    for (p, t) in pred.iter().zip(target.iter()) {
        let e = *p - *t;
        if e.abs() < T::one() {
            loss += half * e * e;
            grad.push(e / n);
        } else {
            loss += e.abs() - half;
            grad.push(e.signum() / n);
        }
    }
    Ok((loss / n, grad))
}
