//! Four-area convolutional encoder (V1, V2, V4, IT) with a linear decoder.
//!
//! The five visual parameters are lifted into constant planes, one channel per
//! parameter. Each area is conv + ReLU + 2x2 max pooling; the pooling window
//! shrinks to the plane size once the plane is smaller than 2x2. The IT maps
//! are averaged to 1x1, flattened and decoded to `X_a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{minibatch_epochs, Dense, TrainConfig, TrainReport};
use crate::numkernel::{AdamGroup, 
    adaptive_avg_pool_1x1, adaptive_avg_pool_1x1_backward, conv2d, conv2d_backward, linear, linear_backward,
    maxpool2d_backward, maxpool2d_indexed, relu_backward, xavier_uniform_init, ParamGroup, Tensor,
};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AreaSpec {
    pub name: String,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl AreaSpec {
    pub fn new(name: &str, in_channels: usize, out_channels: usize, kernel: usize, stride: usize) -> Self {
        Self {
            name: name.into(),
            in_channels,
            out_channels,
            kernel,
            stride,
        }
    }

    /// Same-style padding, floor(k / 2).
    pub fn padding(&self) -> usize {
        self.kernel / 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualConfig {
    pub plane_size: usize,
    pub areas: Vec<AreaSpec>,
    pub output_dim: usize,
    pub seed: u64,
}

impl Default for VisualConfig {
    fn default() -> Self {
        Self {
            plane_size: 16,
            areas: vec![
                AreaSpec::new("V1", 5, 16, 7, 2),
                AreaSpec::new("V2", 16, 32, 3, 1),
                AreaSpec::new("V4", 32, 32, 3, 1),
                AreaSpec::new("IT", 32, 16, 3, 1),
            ],
            output_dim: 8,
            seed: 0,
        }
    }
}

impl VisualConfig {
    pub fn validate(&self) -> Result<()> {
        let first = self
            .areas
            .first()
            .ok_or_else(|| Error::Config("visual cortex needs at least one area".into()))?;
        if first.in_channels != 5 {
            return Err(Error::Config(format!(
                "first area must take 5 channels, got {}",
                first.in_channels
            )));
        }
        for w in self.areas.windows(2) {
            if w[0].out_channels != w[1].in_channels {
                return Err(Error::Config(format!(
                    "{} emits {} channels but {} expects {}",
                    w[0].name, w[0].out_channels, w[1].name, w[1].in_channels
                )));
            }
        }
        if self.areas.iter().any(|a| a.kernel == 0 || a.stride == 0 || a.out_channels == 0) {
            return Err(Error::Config("area kernels, strides and channels must be positive".into()));
        }
        if self.plane_size == 0 || self.output_dim == 0 {
            return Err(Error::Config("plane size and output dim must be positive".into()));
        }
        Ok(())
    }

    pub fn decoder_input(&self) -> usize {
        self.areas.last().map_or(0, |a| a.out_channels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvArea<T> {
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
    pub stride: usize,
    pub padding: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisualWeights<T> {
    pub areas: Vec<ConvArea<T>>,
    pub decoder_weight: Tensor<T>,
    pub decoder_bias: Tensor<T>,
}

impl<T: Scalar> ParamGroup<T> for VisualWeights<T> {
    fn tensors(&self) -> Vec<&Tensor<T>> {
        let mut v: Vec<&Tensor<T>> = self.areas.iter().flat_map(|a| [&a.kernel, &a.bias]).collect();
        v.push(&self.decoder_weight);
        v.push(&self.decoder_bias);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut v: Vec<&mut Tensor<T>> = self
            .areas
            .iter_mut()
            .flat_map(|a| [&mut a.kernel, &mut a.bias])
            .collect();
        v.push(&mut self.decoder_weight);
        v.push(&mut self.decoder_bias);
        v
    }
}

/// Xavier-uniform kernels and decoder, zero biases.
pub fn init<T: Scalar>(config: &VisualConfig) -> Result<VisualWeights<T>> {
    config.validate()?;
    let mut rng = rng_from_seed(derive_seed(config.seed, "visual/init"));
    let mut areas = Vec::with_capacity(config.areas.len());
    for a in &config.areas {
        areas.push(ConvArea {
            kernel: xavier_uniform_init(&[a.out_channels, a.in_channels, a.kernel, a.kernel], &mut rng)?,
            bias: Tensor::zeros(&[a.out_channels]),
            stride: a.stride,
            padding: a.padding(),
        });
    }
    Ok(VisualWeights {
        areas,
        decoder_weight: xavier_uniform_init(&[config.output_dim, config.decoder_input()], &mut rng)?,
        decoder_bias: Tensor::zeros(&[config.output_dim]),
    })
}

/// Broadcasts each feature over an `s x s` plane: shape (1, 5, s, s).
pub fn lift_features<T: Scalar>(features: &[T], plane_size: usize) -> Result<Tensor<T>> {
    lift_batch(&[features], plane_size)
}

/// Stacks several samples into one (n, 5, s, s) tensor.
pub fn lift_batch<T: Scalar, F: AsRef<[T]>>(batch: &[F], plane_size: usize) -> Result<Tensor<T>> {
    if batch.is_empty() {
        return Err(Error::Empty("lift_batch".into()));
    }
    let area = plane_size * plane_size;
    let mut data = Vec::with_capacity(batch.len() * 5 * area);
    for features in batch {
        let features = features.as_ref();
        if features.len() != 5 {
            return Err(Error::dim("lift_features", format!("expected 5 features, got {}", features.len())));
        }
        for &f in features {
            if !(f >= T::zero() && f <= T::one()) {
                return Err(Error::Domain(format!("visual feature {f} outside [0, 1]")));
            }
            data.resize(data.len() + area, f);
        }
    }
    Tensor::new(vec![batch.len(), 5, plane_size, plane_size], data)
}

fn pool_window(h: usize, w: usize) -> usize {
    2.min(h).min(w)
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct VisualCache<T> {
    area_inputs: Vec<Tensor<T>>,
    area_activations: Vec<Tensor<T>>,
    pool_indices: Vec<Vec<usize>>,
    pooled_shape: Vec<usize>,
    pub features: Vec<Vec<T>>,
    pub outputs: Vec<Vec<T>>,
}

/// Batched forward pass, returning one `X_a` per input sample.
pub fn forward_batch<T: Scalar>(input: &Tensor<T>, weights: &VisualWeights<T>) -> Result<VisualCache<T>> {
    let (n, _, _, _) = input.dims4("visual forward")?;
    let mut x = input.clone();
    let mut area_inputs = Vec::with_capacity(weights.areas.len());
    let mut area_activations = Vec::with_capacity(weights.areas.len());
    let mut pool_indices = Vec::with_capacity(weights.areas.len());
    for area in &weights.areas {
        let mut act = conv2d(&x, &area.kernel, area.bias.data(), area.stride, area.padding)?;
        crate::numkernel::activation::relu_inplace(&mut act);
        let (_, _, h, w) = act.dims4("visual area")?;
        let win = pool_window(h, w);
        let pooled = maxpool2d_indexed(&act, win, win)?;
        area_inputs.push(std::mem::replace(&mut x, pooled.output));
        area_activations.push(act);
        pool_indices.push(pooled.argmax);
    }
    let pooled_shape = x.shape().to_vec();
    let avg = adaptive_avg_pool_1x1(&x)?;
    let c = avg.len() / n;
    let features: Vec<Vec<T>> = avg.data().chunks_exact(c).map(<[T]>::to_vec).collect();
    let outputs = features
        .iter()
        .map(|f| linear(f, &weights.decoder_weight, weights.decoder_bias.data()))
        .collect::<Result<Vec<_>>>()?;
    for o in &outputs {
        if o.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("visual cortex output".into()));
        }
    }
    Ok(VisualCache {
        area_inputs,
        area_activations,
        pool_indices,
        pooled_shape,
        features,
        outputs,
    })
}

/// `X_a` for a single lifted sample.
pub fn forward<T: Scalar>(input: &Tensor<T>, weights: &VisualWeights<T>) -> Result<Vec<T>> {
    let mut cache = forward_batch(input, weights)?;
    if cache.outputs.len() != 1 {
        return Err(Error::dim("visual forward", "expected a batch of one; use forward_batch"));
    }
    Ok(cache.outputs.pop().expect("one output"))
}

/// Gradients of all visual parameters given dL/dX_a for every sample.
pub fn backward<T: Scalar>(
    cache: &VisualCache<T>,
    weights: &VisualWeights<T>,
    grad_outputs: &[Vec<T>],
) -> Result<VisualWeights<T>> {
    if grad_outputs.len() != cache.outputs.len() {
        return Err(Error::dim("visual backward", "one gradient per sample required"));
    }
    let mut grads = weights.zeros_like();
    let c = cache.features[0].len();
    let mut grad_avg = Vec::with_capacity(cache.features.len() * c);
    for (f, g) in cache.features.iter().zip(grad_outputs) {
        let lg = linear_backward(f, &weights.decoder_weight, g)?;
        for (a, b) in grads.decoder_weight.data_mut().iter_mut().zip(lg.weight.data()) {
            *a += *b;
        }
        for (a, b) in grads.decoder_bias.data_mut().iter_mut().zip(&lg.bias) {
            *a += *b;
        }
        grad_avg.extend(lg.input);
    }
    let grad_avg = Tensor::new(vec![cache.features.len(), c, 1, 1], grad_avg)?;
    let mut grad = adaptive_avg_pool_1x1_backward(&grad_avg, &cache.pooled_shape)?;

    for i in (0..weights.areas.len()).rev() {
        let act = &cache.area_activations[i];
        let mut g_act = maxpool2d_backward(&grad, &cache.pool_indices[i], act.shape())?;
        relu_backward(act.data(), g_act.data_mut());
        let area = &weights.areas[i];
        let cg = conv2d_backward(
            &cache.area_inputs[i],
            &area.kernel,
            &g_act,
            area.stride,
            area.padding,
            i > 0,
        )?;
        grads.areas[i].kernel = cg.kernels;
        grads.areas[i].bias = Tensor::from_vec(cg.bias);
        if let Some(gi) = cg.input {
            grad = gi;
        }
    }
    Ok(grads)
}

/// Trains the visual stack on its own, through a linear readout `head`
/// (1 x d_v) regressed onto `targets` with MSE. Used when the visual cortex
/// feeds the emotional-learning head without the fusion module.
pub fn train_readout<T: Scalar>(
    features: &[[T; 5]],
    targets: &[T],
    plane_size: usize,
    weights: &mut VisualWeights<T>,
    head: &mut Dense<T>,
    config: &TrainConfig,
) -> Result<TrainReport> {
    if features.len() != targets.len() {
        return Err(Error::dim("train_readout", "one target per sample required"));
    }
    if features.is_empty() {
        return Err(Error::Empty("visual training set".into()));
    }
    let mse = |weights: &VisualWeights<T>, head: &Dense<T>| -> Result<f64> {
        let mut sse = 0.0;
        for (chunk, tchunk) in features.chunks(64).zip(targets.chunks(64)) {
            let cache = forward_batch(&lift_batch(chunk, plane_size)?, weights)?;
            for (x_a, &t) in cache.outputs.iter().zip(tchunk) {
                sse += (head.apply(x_a)?[0] - t).as_f64().powi(2);
            }
        }
        Ok(sse / features.len() as f64)
    };
    let initial_mse = mse(weights, head)?;
    let mut opt_v = AdamGroup::new(weights, config.adam())?;
    let mut opt_h = AdamGroup::new(head, config.adam())?;
    let history = minibatch_epochs(features.len(), config, |batch, _| {
        let inv_b = T::one() / T::from_usize_exact(batch.len());
        let feats: Vec<[T; 5]> = batch.iter().map(|&i| features[i]).collect();
        let cache = forward_batch(&lift_batch(&feats, plane_size)?, weights)?;
        let mut g_head = head.zeros_like();
        let mut g_xa = Vec::with_capacity(batch.len());
        let mut sse = 0.0;
        for (x_a, &i) in cache.outputs.iter().zip(batch) {
            let err = head.apply(x_a)?[0] - targets[i];
            sse += err.as_f64().powi(2);
            let g = linear_backward(x_a, &head.weight, &[T::of(2.0) * err * inv_b])?;
            g_head.add_assign(&Dense {
                weight: g.weight,
                bias: Tensor::from_vec(g.bias),
            });
            g_xa.push(g.input);
        }
        let g_visual = backward(&cache, weights, &g_xa)?;
        opt_h.step(head, &g_head)?;
        opt_v.step(weights, &g_visual)?;
        Ok(sse)
    })?;
    let final_mse = mse(weights, head)?;
    Ok(TrainReport {
        history,
        initial_mse,
        final_mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::xavier_bound;

    #[test]
    fn lift_examples() {
        let z = lift_features(&[0.0f64; 5], 4).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
        let t = lift_features(&[1.0, 0.0, 0.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(t.shape(), &[1, 5, 2, 2]);
        assert_eq!(&t.data()[..4], &[1.0; 4]);
        assert!(t.data()[4..].iter().all(|&v| v == 0.0));
        let f = [0.1, 0.9, 0.3, 0.4, 0.7];
        let t = lift_features(&f, 6).unwrap();
        assert!((t.mean() - f.iter().sum::<f64>() / 5.0).abs() < 1e-12);
        assert!(lift_features(&[1.2, 0.0, 0.0, 0.0, 0.0], 2).is_err());
    }

    #[test]
    fn init_biases_zero_and_kernels_bounded() {
        let cfg = VisualConfig::default();
        let w: VisualWeights<f64> = init(&cfg).unwrap();
        for (a, area_spec) in w.areas.iter().zip(&cfg.areas) {
            assert!(a.bias.data().iter().all(|&b| b == 0.0));
            let bound = xavier_bound(a.kernel.shape()).unwrap();
            assert!(a.kernel.data().iter().all(|v| v.abs() <= bound));
            assert_eq!(a.padding, area_spec.kernel / 2);
        }
        assert!(w.decoder_bias.data().iter().all(|&b| b == 0.0));
        assert_eq!(w, init(&cfg).unwrap());
    }

    #[test]
    fn zero_input_gives_decoder_bias() {
        let cfg = VisualConfig::default();
        let mut w: VisualWeights<f64> = init(&cfg).unwrap();
        w.decoder_bias = Tensor::from_vec((0..8).map(|i| i as f64 * 0.1).collect());
        let x = lift_features(&[0.0; 5], 16).unwrap();
        assert_eq!(forward(&x, &w).unwrap(), w.decoder_bias.data());
    }

    #[test]
    fn default_plan_flattens_to_sixteen() {
        let cfg = VisualConfig::default();
        let w: VisualWeights<f64> = init(&cfg).unwrap();
        let x = lift_features(&[0.3, 0.5, 0.2, 0.9, 0.1], 16).unwrap();
        let cache = forward_batch(&x, &w).unwrap();
        assert_eq!(cache.features[0].len(), 16);
        assert_eq!(cache.pooled_shape, vec![1, 16, 1, 1]);
        assert_eq!(cache.outputs[0].len(), 8);
    }

    #[test]
    fn output_dim_independent_of_plane_size() {
        let cfg = VisualConfig::default();
        let w: VisualWeights<f64> = init(&cfg).unwrap();
        for s in [8, 9, 12, 16, 24, 32] {
            let x = lift_features(&[0.3, 0.5, 0.2, 0.9, 0.1], s).unwrap();
            assert_eq!(forward(&x, &w).unwrap().len(), 8, "plane size {s}");
        }
    }

    #[test]
    fn batch_matches_single() {
        let cfg = VisualConfig::default();
        let w: VisualWeights<f64> = init(&cfg).unwrap();
        let a = [0.3, 0.5, 0.2, 0.9, 0.1];
        let b = [0.8, 0.1, 0.6, 0.4, 0.5];
        let batch = forward_batch(&lift_batch(&[a, b], 16).unwrap(), &w).unwrap();
        assert_eq!(batch.outputs[0], forward(&lift_features(&a, 16).unwrap(), &w).unwrap());
        assert_eq!(batch.outputs[1], forward(&lift_features(&b, 16).unwrap(), &w).unwrap());
    }

    #[test]
    fn channel_symmetry() {
        let cfg = VisualConfig::default();
        let w: VisualWeights<f64> = init(&cfg).unwrap();
        let x = [0.4, 0.7, 0.4, 0.2, 0.9];
        let base = forward(&lift_features(&x, 16).unwrap(), &w).unwrap();
        // swap V1 input channels 0 and 2, which carry equal values
        let mut swapped = w.clone();
        let k = &mut swapped.areas[0].kernel;
        let (oc, ic, kh, kw) = k.dims4("").unwrap();
        let plane = kh * kw;
        for o in 0..oc {
            for j in 0..plane {
                k.data_mut().swap((o * ic) * plane + j, (o * ic + 2) * plane + j);
            }
        }
        let other = forward(&lift_features(&x, 16).unwrap(), &swapped).unwrap();
        for (a, b) in base.iter().zip(&other) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn works_in_f32() {
        let w: VisualWeights<f32> = init(&VisualConfig::default()).unwrap();
        let out = forward(&lift_features(&[0.2f32, 0.4, 0.6, 0.8, 1.0], 16).unwrap(), &w).unwrap();
        assert_eq!(out.len(), 8);
        assert!(out.iter().all(|v| v.is_finite()));
    }
}
