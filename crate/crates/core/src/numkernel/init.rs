use rand::Rng;

use crate::error::{Error, Result};
use crate::numkernel::tensor::Tensor;
use crate::rng::rng_from_seed;
use crate::scalar::Scalar;

/// (fan_in, fan_out) for a weight of shape (out, in, ...receptive field).
pub fn fans(shape: &[usize]) -> Result<(usize, usize)> {
    if shape.len() < 2 {
        return Err(Error::Contract(format!(
            "xavier init needs rank >= 2, got shape {shape:?}"
        )));
    }
    let receptive: usize = shape[2..].iter().product();
    Ok((shape[1] * receptive, shape[0] * receptive))
}

pub fn xavier_bound(shape: &[usize]) -> Result<f64> {
    let (fan_in, fan_out) = fans(shape)?;
    Ok((6.0 / (fan_in + fan_out) as f64).sqrt())
}

/// Samples uniformly in ±sqrt(6 / (fan_in + fan_out)).
pub fn xavier_uniform_init<T: Scalar, R: Rng + ?Sized>(shape: &[usize], rng: &mut R) -> Result<Tensor<T>> {
    let a = xavier_bound(shape)?;
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::of(rng.gen_range(-a..=a))).collect();
    Tensor::new(shape.to_vec(), data)
}

pub fn xavier_uniform_seeded<T: Scalar>(shape: &[usize], seed: u64) -> Result<Tensor<T>> {
    xavier_uniform_init(shape, &mut rng_from_seed(seed))
}
