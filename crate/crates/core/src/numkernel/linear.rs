use crate::error::{Error, Result};
use crate::numkernel::tensor::Tensor;
use crate::scalar::Scalar;

/// `weight · input + bias` with `weight` of shape (d_out, d_in).
pub fn linear<T: Scalar>(input: &[T], weight: &Tensor<T>, bias: &[T]) -> Result<Vec<T>> {
    let (d_out, d_in) = weight.dims2("linear")?;
    if input.len() != d_in || bias.len() != d_out {
        return Err(Error::dim(
            "linear",
            format!(
                "weight {d_out}x{d_in}, input {}, bias {}",
                input.len(),
                bias.len()
            ),
        ));
    }
    Ok(weight
        .data()
        .chunks_exact(d_in)
        .zip(bias)
        .map(|(row, &b)| row.iter().zip(input).map(|(&w, &x)| w * x).sum::<T>() + b)
        .collect())
}

#[derive(Debug, Clone)]
pub struct LinearGrads<T> {
    pub input: Vec<T>,
    pub weight: Tensor<T>,
    pub bias: Vec<T>,
}

pub fn linear_backward<T: Scalar>(input: &[T], weight: &Tensor<T>, grad_out: &[T]) -> Result<LinearGrads<T>> {
    let (d_out, d_in) = weight.dims2("linear_backward")?;
    if input.len() != d_in || grad_out.len() != d_out {
        return Err(Error::dim("linear_backward", "input/gradient lengths disagree with weight"));
    }
    let mut g_in = vec![T::zero(); d_in];
    let mut g_w = Tensor::zeros(&[d_out, d_in]);
    for (o, (row, grow)) in weight
        .data()
        .chunks_exact(d_in)
        .zip(g_w.data_mut().chunks_exact_mut(d_in))
        .enumerate()
    {
        let go = grad_out[o];
        for i in 0..d_in {
            grow[i] = go * input[i];
            g_in[i] += go * row[i];
        }
    }
    Ok(LinearGrads {
        input: g_in,
        weight: g_w,
        bias: grad_out.to_vec(),
    })
}
