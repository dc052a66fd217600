use crate::numkernel::tensor::Tensor;
use crate::scalar::Scalar;

pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| v.max(T::zero()))
}

pub fn relu_inplace<T: Scalar>(t: &mut Tensor<T>) {
    t.data_mut().iter_mut().for_each(|v| *v = v.max(T::zero()));
}

pub fn relu_vec<T: Scalar>(v: &[T]) -> Vec<T> {
    v.iter().map(|x| x.max(T::zero())).collect()
}

/// Routes `grad` through ReLU given the layer's *output*; zero where the
/// output was clamped.
pub fn relu_backward<T: Scalar>(output: &[T], grad: &mut [T]) {
    for (g, &o) in grad.iter_mut().zip(output) {
        if o <= T::zero() {
            *g = T::zero();
        }
    }
}
