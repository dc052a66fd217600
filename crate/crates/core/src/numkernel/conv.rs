//! 2-D convolution via im2col.
//!
//! Forward, ReLU-fused forward and the hand-derived backward pass. The column
//! buffer layout is `[(c, ky, kx), (oy, ox)]`, so both the forward product and
//! the weight gradient run over contiguous output positions.

use crate::error::{Error, Result};
use crate::numkernel::activation::relu_inplace;
use crate::numkernel::tensor::Tensor;
use crate::scalar::Scalar;

/// Geometry of one convolution call, validated once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub batch: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub k_h: usize,
    pub k_w: usize,
    pub stride: usize,
    pub padding: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    pub fn new<T: Scalar>(
        input: &Tensor<T>,
        kernels: &Tensor<T>,
        bias_len: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Self> {
        let (batch, in_ch, in_h, in_w) = input.dims4("conv2d input")?;
        let (out_ch, k_in, k_h, k_w) = kernels.dims4("conv2d kernels")?;
        if stride == 0 {
            return Err(Error::Contract("conv2d stride must be positive".into()));
        }
        if k_in != in_ch {
            return Err(Error::dim(
                "conv2d",
                format!("input has {in_ch} channels but kernels expect {k_in}"),
            ));
        }
        if bias_len != out_ch {
            return Err(Error::dim(
                "conv2d",
                format!("bias length {bias_len} != out channels {out_ch}"),
            ));
        }
        let (ph, pw) = (in_h + 2 * padding, in_w + 2 * padding);
        if k_h > ph || k_w > pw {
            return Err(Error::dim(
                "conv2d",
                format!("kernel {k_h}x{k_w} exceeds padded input {ph}x{pw}"),
            ));
        }
        Ok(Self {
            batch,
            in_ch,
            out_ch,
            in_h,
            in_w,
            k_h,
            k_w,
            stride,
            padding,
            out_h: (ph - k_h) / stride + 1,
            out_w: (pw - k_w) / stride + 1,
        })
    }

    fn col_rows(&self) -> usize {
        self.in_ch * self.k_h * self.k_w
    }

    fn col_cols(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Input coordinate for output position `o` and kernel offset `k`, if it
    /// falls inside the unpadded image.
    #[inline]
    fn source(&self, o: usize, k: usize, extent: usize) -> Option<usize> {
        let pos = (o * self.stride + k) as isize - self.padding as isize;
        (pos >= 0 && (pos as usize) < extent).then_some(pos as usize)
    }

    /// For every kernel offset `(ky, kx)` and output position, the source
    /// pixel index within one input plane, or `usize::MAX` for padding.
    fn gather_table(&self) -> Vec<usize> {
        let p = self.col_cols();
        let mut table = vec![usize::MAX; self.k_h * self.k_w * p];
        for ky in 0..self.k_h {
            for kx in 0..self.k_w {
                let t = &mut table[(ky * self.k_w + kx) * p..(ky * self.k_w + kx + 1) * p];
                for oy in 0..self.out_h {
                    let Some(y) = self.source(oy, ky, self.in_h) else { continue };
                    for ox in 0..self.out_w {
                        if let Some(x) = self.source(ox, kx, self.in_w) {
                            t[oy * self.out_w + ox] = y * self.in_w + x;
                        }
                    }
                }
            }
        }
        table
    }

    /// Writes one image's columns into `cols` at column offset `off`, with
    /// `ld` columns per row. `cols` must be zeroed at padding positions.
    fn im2col<T: Scalar>(&self, table: &[usize], image: &[T], cols: &mut [T], ld: usize, off: usize) {
        let (p, taps, plane) = (self.col_cols(), self.k_h * self.k_w, self.in_h * self.in_w);
        for c in 0..self.in_ch {
            let src = &image[c * plane..(c + 1) * plane];
            for k in 0..taps {
                let row = c * taps + k;
                let dst = &mut cols[row * ld + off..row * ld + off + p];
                for (d, &i) in dst.iter_mut().zip(&table[k * p..(k + 1) * p]) {
                    if i != usize::MAX {
                        *d = src[i];
                    }
                }
            }
        }
    }

    fn col2im<T: Scalar>(&self, table: &[usize], cols: &[T], ld: usize, off: usize, image: &mut [T]) {
        let (p, taps, plane) = (self.col_cols(), self.k_h * self.k_w, self.in_h * self.in_w);
        for c in 0..self.in_ch {
            let dst = &mut image[c * plane..(c + 1) * plane];
            for k in 0..taps {
                let row = c * taps + k;
                let src = &cols[row * ld + off..row * ld + off + p];
                for (&v, &i) in src.iter().zip(&table[k * p..(k + 1) * p]) {
                    if i != usize::MAX {
                        dst[i] += v;
                    }
                }
            }
        }
    }

    /// Column matrix of the whole batch: `col_rows` rows of `batch * col_cols`.
    fn batch_columns<T: Scalar>(&self, input: &[T]) -> Vec<T> {
        let (p, ld) = (self.col_cols(), self.batch * self.col_cols());
        let in_plane = self.in_ch * self.in_h * self.in_w;
        let table = self.gather_table();
        let mut cols = vec![T::zero(); self.col_rows() * ld];
        for n in 0..self.batch {
            self.im2col(&table, &input[n * in_plane..(n + 1) * in_plane], &mut cols, ld, n * p);
        }
        cols
    }
}

#[inline]
fn axpy<T: Scalar>(k: T, x: &[T], y: &mut [T]) {
    for (d, &s) in y.iter_mut().zip(x) {
        *d += k * s;
    }
}

/// Dot product with eight partial sums, so the loop vectorizes.
#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    acc.iter().copied().sum::<T>() + tail
}

/// Output spatial size along one axis.
pub fn conv_out_dim(input: usize, kernel: usize, stride: usize, padding: usize) -> usize {
    (input + 2 * padding - kernel) / stride + 1
}

/// Convolution without activation.
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &[T],
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    input.ensure_finite("conv2d input")?;
    let g = ConvGeometry::new(input, kernels, bias.len(), stride, padding)?;
    let (rows, p) = (g.col_rows(), g.col_cols());
    let ld = g.batch * p;
    let w = kernels.data();
    let cols = g.batch_columns(input.data());
    let mut mat = vec![T::zero(); g.out_ch * ld];
    for oc in 0..g.out_ch {
        let dst = &mut mat[oc * ld..(oc + 1) * ld];
        dst.iter_mut().for_each(|v| *v = bias[oc]);
        for r in 0..rows {
            axpy(w[oc * rows + r], &cols[r * ld..(r + 1) * ld], dst);
        }
    }
    let mut out = Tensor::zeros(&[g.batch, g.out_ch, g.out_h, g.out_w]);
    let od = out.data_mut();
    for n in 0..g.batch {
        for oc in 0..g.out_ch {
            od[(n * g.out_ch + oc) * p..(n * g.out_ch + oc + 1) * p]
                .copy_from_slice(&mat[oc * ld + n * p..oc * ld + (n + 1) * p]);
        }
    }
    Ok(out)
}

/// Convolution followed by ReLU: `max(0, Σ window·kernel + bias)`.
pub fn conv2d_relu<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    bias: &[T],
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>> {
    let mut out = conv2d(input, kernels, bias, stride, padding)?;
    relu_inplace(&mut out);
    Ok(out)
}

/// Gradients of a convolution with respect to its input, kernels and bias.
#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub input: Option<Tensor<T>>,
    pub kernels: Tensor<T>,
    pub bias: Vec<T>,
}

/// Backward pass of [`conv2d`] given the gradient of the pre-activation
/// output. The input gradient is skipped when `need_input` is false.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernels: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
    padding: usize,
    need_input: bool,
) -> Result<ConvGrads<T>> {
    let out_ch = kernels.shape()[0];
    let g = ConvGeometry::new(input, kernels, out_ch, stride, padding)?;
    if grad_out.shape() != [g.batch, g.out_ch, g.out_h, g.out_w] {
        return Err(Error::dim(
            "conv2d_backward",
            format!("grad shape {:?} does not match output geometry", grad_out.shape()),
        ));
    }
    let (rows, p) = (g.col_rows(), g.col_cols());
    let ld = g.batch * p;
    let in_plane = g.in_ch * g.in_h * g.in_w;
    let w = kernels.data();
    // gradient rearranged to [oc][(n, pos)], matching the column matrix
    let mut go = vec![T::zero(); g.out_ch * ld];
    for n in 0..g.batch {
        for oc in 0..g.out_ch {
            go[oc * ld + n * p..oc * ld + (n + 1) * p]
                .copy_from_slice(&grad_out.data()[(n * g.out_ch + oc) * p..(n * g.out_ch + oc + 1) * p]);
        }
    }
    let cols = g.batch_columns(input.data());
    let mut grad_k = Tensor::zeros(kernels.shape());
    let mut grad_b = vec![T::zero(); g.out_ch];
    for oc in 0..g.out_ch {
        let gsrc = &go[oc * ld..(oc + 1) * ld];
        grad_b[oc] = gsrc.iter().copied().sum::<T>();
        let gk = &mut grad_k.data_mut()[oc * rows..(oc + 1) * rows];
        for (r, gkr) in gk.iter_mut().enumerate() {
            *gkr = dot(&cols[r * ld..(r + 1) * ld], gsrc);
        }
    }
    let grad_in = if need_input {
        let mut dcols = cols;
        dcols.iter_mut().for_each(|v| *v = T::zero());
        for r in 0..rows {
            let dst = &mut dcols[r * ld..(r + 1) * ld];
            for oc in 0..g.out_ch {
                axpy(w[oc * rows + r], &go[oc * ld..(oc + 1) * ld], dst);
            }
        }
        let table = g.gather_table();
        let mut gi = Tensor::zeros(input.shape());
        for n in 0..g.batch {
            g.col2im(&table, &dcols, ld, n * p, &mut gi.data_mut()[n * in_plane..(n + 1) * in_plane]);
        }
        Some(gi)
    } else {
        None
    };
    Ok(ConvGrads {
        input: grad_in,
        kernels: grad_k,
        bias: grad_b,
    })
}
