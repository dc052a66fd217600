//! Adam with decoupled (AdamW-style) weight decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 1e-4,
        }
    }
}

/// Per-parameter optimizer state.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub first_moment: Tensor<T>,
    pub second_moment: Tensor<T>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(shape: &[usize], config: AdamConfig) -> Result<Self> {
        if !(config.learning_rate > 0.0)
            || !(0.0..1.0).contains(&config.beta1)
            || !(0.0..1.0).contains(&config.beta2)
            || config.beta1 == 0.0
            || config.beta2 == 0.0
            || !(config.epsilon > 0.0)
            || !(config.weight_decay >= 0.0)
        {
            return Err(Error::Contract(format!("invalid Adam hyperparameters {config:?}")));
        }
        Ok(Self {
            config,
            first_moment: Tensor::zeros(shape),
            second_moment: Tensor::zeros(shape),
            step: 0,
        })
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step<T: Scalar>(param: &mut Tensor<T>, grad: &Tensor<T>, state: &mut AdamState<T>) -> Result<()> {
    if param.shape() != grad.shape() || param.shape() != state.first_moment.shape() {
        return Err(Error::dim(
            "adam_step",
            format!(
                "param {:?}, grad {:?}, state {:?}",
                param.shape(),
                grad.shape(),
                state.first_moment.shape()
            ),
        ));
    }
    grad.ensure_finite("adam_step gradient")?;
    state.step += 1;
    let c = &state.config;
    let (b1, b2) = (T::of(c.beta1), T::of(c.beta2));
    let lr = T::of(c.learning_rate);
    let eps = T::of(c.epsilon);
    let wd = T::of(c.weight_decay);
    let t = state.step as i32;
    let bc1 = T::one() - b1.powi(t);
    let bc2 = T::one() - b2.powi(t);

    let m = state.first_moment.data_mut();
    let v = state.second_moment.data_mut();
    for (((p, &g), m), v) in param.data_mut().iter_mut().zip(grad.data()).zip(m).zip(v) {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * (m_hat / (v_hat.sqrt() + eps) + wd * *p);
    }
    Ok(())
}
