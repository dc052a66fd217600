use crate::error::{Error, Result};
use crate::numkernel::adam::{adam_step, AdamConfig, AdamState};
use crate::numkernel::tensor::Tensor;
use crate::scalar::Scalar;

/// A fixed, ordered collection of trainable tensors. Gradients use the same
/// type, so parameters and their gradients line up index by index.
pub trait ParamGroup<T: Scalar> {
    fn tensors(&self) -> Vec<&Tensor<T>>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>>;

    fn zeros_like(&self) -> Self
    where
        Self: Clone,
    {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(T::zero());
        }
        z
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
    }

    fn scale(&mut self, k: T) {
        for t in self.tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v *= k);
        }
    }

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data().iter().all(|v| v.is_finite()))
    }
}

/// One [`AdamState`] per tensor of a [`ParamGroup`].
#[derive(Debug, Clone)]
pub struct AdamGroup<T> {
    states: Vec<AdamState<T>>,
}

impl<T: Scalar> AdamGroup<T> {
    pub fn new<P: ParamGroup<T>>(params: &P, config: AdamConfig) -> Result<Self> {
        let states = params
            .tensors()
            .iter()
            .map(|t| AdamState::new(t.shape(), config))
            .collect::<Result<_>>()?;
        Ok(Self { states })
    }

    pub fn step<P: ParamGroup<T>>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let grads = grads.tensors();
        let params = params.tensors_mut();
        if params.len() != self.states.len() || grads.len() != self.states.len() {
            return Err(Error::dim("AdamGroup::step", "parameter group layout changed"));
        }
        for ((p, g), s) in params.into_iter().zip(grads).zip(self.states.iter_mut()) {
            adam_step(p, g, s)?;
        }
        Ok(())
    }
}
