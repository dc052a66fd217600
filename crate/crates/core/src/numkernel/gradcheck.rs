//! Central finite differences, the reference every backward pass is checked
//! against.

use crate::error::{Error, Result};
use crate::numkernel::tensor::Tensor;
use crate::scalar::Scalar;

pub const DEFAULT_STEP: f64 = 1e-5;

/// `(f(p + h e_i) - f(p - h e_i)) / 2h` for every element of `param`.
pub fn finite_diff_grad<T: Scalar>(
    mut f: impl FnMut(&Tensor<T>) -> T,
    param: &Tensor<T>,
    h: T,
) -> Result<Tensor<T>> {
    let mut probe = param.clone();
    let mut grad = Tensor::zeros(param.shape());
    for i in 0..param.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe);
        probe.data_mut()[i] = orig - h;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!("objective at element {i}")));
        }
        grad.data_mut()[i] = (up - down) / (h + h);
    }
    Ok(grad)
}

/// `||a - b|| / max(||a||, ||b||)`, or the absolute difference when both
/// gradients are (near) zero.
pub fn relative_error<T: Scalar>(analytic: &[T], numeric: &[T]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let norm = |v: &[T]| v.iter().map(|x| x.as_f64().powi(2)).sum::<f64>().sqrt();
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a.as_f64() - b.as_f64()).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = norm(analytic).max(norm(numeric));
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}
