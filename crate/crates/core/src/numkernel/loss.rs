use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean of squared differences.
pub fn mse_loss<T: Scalar>(pred: &[T], target: &[T]) -> Result<T> {
    if pred.len() != target.len() {
        return Err(Error::dim(
            "mse_loss",
            format!("{} predictions vs {} targets", pred.len(), target.len()),
        ));
    }
    if pred.is_empty() {
        return Err(Error::Empty("mse_loss".into()));
    }
    let sum: T = pred.iter().zip(target).map(|(&p, &t)| (p - t) * (p - t)).sum();
    Ok(sum / T::from_usize_exact(pred.len()))
}

/// d mse / d pred.
pub fn mse_grad<T: Scalar>(pred: &[T], target: &[T]) -> Result<Vec<T>> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::dim("mse_grad", "lengths differ or empty"));
    }
    let scale = T::of(2.0) / T::from_usize_exact(pred.len());
    Ok(pred.iter().zip(target).map(|(&p, &t)| scale * (p - t)).collect())
}
