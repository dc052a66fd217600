use crate::error::{Error, Result};
use crate::numkernel::tensor::Tensor;
use crate::scalar::Scalar;

/// Max pooling output plus the flat input index chosen for every output cell.
#[derive(Debug, Clone)]
pub struct MaxPoolOutput<T> {
    pub output: Tensor<T>,
    pub argmax: Vec<usize>,
}

pub fn maxpool2d<T: Scalar>(input: &Tensor<T>, window: usize, stride: usize) -> Result<Tensor<T>> {
    maxpool2d_indexed(input, window, stride).map(|p| p.output)
}

pub fn maxpool2d_indexed<T: Scalar>(
    input: &Tensor<T>,
    window: usize,
    stride: usize,
) -> Result<MaxPoolOutput<T>> {
    let (n, c, h, w) = input.dims4("maxpool2d")?;
    if window == 0 || stride == 0 {
        return Err(Error::Contract("maxpool2d window and stride must be positive".into()));
    }
    if window > h || window > w {
        return Err(Error::dim(
            "maxpool2d",
            format!("window {window} larger than input {h}x{w}"),
        ));
    }
    let (oh, ow) = ((h - window) / stride + 1, (w - window) / stride + 1);
    let src = input.data();
    let mut out = Tensor::zeros(&[n, c, oh, ow]);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    let dst = out.data_mut();
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + oy * stride * w + ox * stride;
                for ky in 0..window {
                    for kx in 0..window {
                        let idx = base + (oy * stride + ky) * w + ox * stride + kx;
                        if src[idx] > src[best] {
                            best = idx;
                        }
                    }
                }
                dst[(plane * oh + oy) * ow + ox] = src[best];
                argmax.push(best);
            }
        }
    }
    Ok(MaxPoolOutput { output: out, argmax })
}

/// Scatters `grad_out` back to the winning input positions.
pub fn maxpool2d_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    argmax: &[usize],
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    if grad_out.len() != argmax.len() {
        return Err(Error::dim("maxpool2d_backward", "gradient and index lengths differ"));
    }
    let mut grad_in = Tensor::zeros(input_shape);
    let gi = grad_in.data_mut();
    for (&g, &idx) in grad_out.data().iter().zip(argmax) {
        gi[idx] += g;
    }
    Ok(grad_in)
}

/// Reduces every (h, w) plane to its mean: output shape (n, c, 1, 1).
pub fn adaptive_avg_pool_1x1<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, c, h, w) = input.dims4("adaptive_avg_pool_1x1")?;
    let area = h * w;
    let inv = T::one() / T::from_usize_exact(area);
    let data = input
        .data()
        .chunks_exact(area)
        .map(|plane| plane.iter().copied().sum::<T>() * inv)
        .collect();
    Tensor::new(vec![n, c, 1, 1], data)
}

pub fn adaptive_avg_pool_1x1_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    input_shape: &[usize],
) -> Result<Tensor<T>> {
    let [n, c, h, w] = *input_shape else {
        return Err(Error::dim("adaptive_avg_pool_1x1_backward", "input shape must be rank 4"));
    };
    if grad_out.len() != n * c {
        return Err(Error::dim("adaptive_avg_pool_1x1_backward", "gradient length != n*c"));
    }
    let inv = T::one() / T::from_usize_exact(h * w);
    let mut grad_in = Tensor::zeros(input_shape);
    for (plane, &g) in grad_in.data_mut().chunks_exact_mut(h * w).zip(grad_out.data()) {
        plane.iter_mut().for_each(|v| *v = g * inv);
    }
    Ok(grad_in)
}
