//! Attention-gated audio-visual fusion MLP and its end-to-end trainer.
//!
//! ```text
//! H_m  = ReLU(W_music X_m + b)          H_v  = ReLU(W_video X_a + b)
//! At_m = ReLU(W_attn_m H_m + b)         At_v = ReLU(W_attn_v H_v + b)
//! X_m1 = At_m ⊙ H_m                     X_a1 = At_v ⊙ H_v
//! X_am = W_out concat(X_a1, X_m1) + b_out
//! epp  = clamp01(W_head X_am + b_head)
//! ```
//!
//! Attention outputs are used as raw gates, without normalization. Dropout,
//! when training, masks `H_m` and `H_v`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{linear, linear_backward, xavier_uniform_init, AdamConfig, AdamGroup, ParamGroup, Tensor};
use crate::rng::{derive_indexed, derive_seed, rng_from_seed};
use crate::scalar::Scalar;
use crate::visual_cortex::{self, VisualWeights};

/// Weight matrix (d_out, d_in) plus bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn xavier<R: Rng>(d_out: usize, d_in: usize, rng: &mut R) -> Result<Self> {
        Ok(Self {
            weight: xavier_uniform_init(&[d_out, d_in], rng)?,
            bias: Tensor::zeros(&[d_out]),
        })
    }

    pub fn zeros(d_out: usize, d_in: usize) -> Self {
        Self {
            weight: Tensor::zeros(&[d_out, d_in]),
            bias: Tensor::zeros(&[d_out]),
        }
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        linear(x, &self.weight, self.bias.data())
    }

    /// Accumulates this layer's gradients into `grad` and returns dL/dx.
    fn backprop(&self, x: &[T], grad_out: &[T], grad: &mut Dense<T>) -> Result<Vec<T>> {
        let g = linear_backward(x, &self.weight, grad_out)?;
        for (a, b) in grad.weight.data_mut().iter_mut().zip(g.weight.data()) {
            *a += *b;
        }
        for (a, b) in grad.bias.data_mut().iter_mut().zip(&g.bias) {
            *a += *b;
        }
        Ok(g.input)
    }
}

impl<T: Scalar> ParamGroup<T> for Dense<T> {
    fn tensors(&self) -> Vec<&Tensor<T>> {
        vec![&self.weight, &self.bias]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![&mut self.weight, &mut self.bias]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub visual_dim: usize,
    pub audio_dim: usize,
    pub hidden_dim: usize,
    pub fused_dim: usize,
    pub seed: u64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            visual_dim: 8,
            audio_dim: 3,
            hidden_dim: 8,
            fused_dim: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights<T> {
    pub music: Dense<T>,
    pub video: Dense<T>,
    pub attn_music: Dense<T>,
    pub attn_video: Dense<T>,
    pub out: Dense<T>,
    pub head: Dense<T>,
}

impl<T: Scalar> ParamGroup<T> for FusionWeights<T> {
    fn tensors(&self) -> Vec<&Tensor<T>> {
        [&self.music, &self.video, &self.attn_music, &self.attn_video, &self.out, &self.head]
            .into_iter()
            .flat_map(|d| [&d.weight, &d.bias])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        [
            &mut self.music,
            &mut self.video,
            &mut self.attn_music,
            &mut self.attn_video,
            &mut self.out,
            &mut self.head,
        ]
        .into_iter()
        .flat_map(|d| [&mut d.weight, &mut d.bias])
        .collect()
    }
}

impl<T: Scalar> FusionWeights<T> {
    pub fn zeros(c: &FusionConfig) -> Self {
        let h = c.hidden_dim;
        Self {
            music: Dense::zeros(h, c.audio_dim),
            video: Dense::zeros(h, c.visual_dim),
            attn_music: Dense::zeros(h, h),
            attn_video: Dense::zeros(h, h),
            out: Dense::zeros(c.fused_dim, 2 * h),
            head: Dense::zeros(1, c.fused_dim),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.music.bias.len()
    }

    pub fn fused_dim(&self) -> usize {
        self.out.bias.len()
    }
}

/// Xavier-uniform weights, zero biases.
pub fn init<T: Scalar>(config: &FusionConfig) -> Result<FusionWeights<T>> {
    let mut rng = rng_from_seed(derive_seed(config.seed, "fusion/init"));
    let h = config.hidden_dim;
    Ok(FusionWeights {
        music: Dense::xavier(h, config.audio_dim, &mut rng)?,
        video: Dense::xavier(h, config.visual_dim, &mut rng)?,
        attn_music: Dense::xavier(h, h, &mut rng)?,
        attn_video: Dense::xavier(h, h, &mut rng)?,
        out: Dense::xavier(config.fused_dim, 2 * h, &mut rng)?,
        head: Dense::xavier(1, config.fused_dim, &mut rng)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Infer,
    /// Inverted dropout on the branch hidden layers, with its own seed.
    Train { dropout: f64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput<T> {
    pub x_am: Vec<T>,
    pub epp: T,
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct FusionCache<T> {
    x_a: Vec<T>,
    x_m: Vec<T>,
    h_m: Vec<T>,
    h_v: Vec<T>,
    mask_m: Vec<T>,
    mask_v: Vec<T>,
    hd_m: Vec<T>,
    hd_v: Vec<T>,
    attn_m: Vec<T>,
    attn_v: Vec<T>,
    concat: Vec<T>,
    head_pre: T,
    pub output: FusionOutput<T>,
}

fn dropout_mask<T: Scalar>(len: usize, mode: Mode, salt: &str) -> Result<Vec<T>> {
    match mode {
        Mode::Infer => Ok(vec![T::one(); len]),
        Mode::Train { dropout, seed } => {
            if !(0.0..1.0).contains(&dropout) {
                return Err(Error::Config(format!("dropout {dropout} not in [0, 1)")));
            }
            if dropout == 0.0 {
                return Ok(vec![T::one(); len]);
            }
            let keep = T::of(1.0 / (1.0 - dropout));
            let mut rng = rng_from_seed(derive_seed(seed, salt));
            Ok((0..len)
                .map(|_| if rng.gen::<f64>() < dropout { T::zero() } else { keep })
                .collect())
        }
    }
}

fn relu_in_place<T: Scalar>(v: &mut [T]) {
    v.iter_mut().for_each(|x| *x = x.max(T::zero()));
}

fn hadamard<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x * y).collect()
}

pub fn forward_cached<T: Scalar>(x_a: &[T], x_m: &[T], w: &FusionWeights<T>, mode: Mode) -> Result<FusionCache<T>> {
    let h = w.hidden_dim();
    let mut h_m = w.music.apply(x_m)?;
    relu_in_place(&mut h_m);
    let mut h_v = w.video.apply(x_a)?;
    relu_in_place(&mut h_v);
    let mask_m = dropout_mask(h, mode, "dropout/music")?;
    let mask_v = dropout_mask(h, mode, "dropout/video")?;
    let hd_m = hadamard(&h_m, &mask_m);
    let hd_v = hadamard(&h_v, &mask_v);

    let mut attn_m = w.attn_music.apply(&hd_m)?;
    relu_in_place(&mut attn_m);
    let mut attn_v = w.attn_video.apply(&hd_v)?;
    relu_in_place(&mut attn_v);

    let mut concat = hadamard(&attn_v, &hd_v);
    concat.extend(hadamard(&attn_m, &hd_m));
    let x_am = w.out.apply(&concat)?;
    let head_pre = w.head.apply(&x_am)?[0];
    if !head_pre.is_finite() || x_am.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fusion forward".into()));
    }
    let epp = head_pre.max(T::zero()).min(T::one());
    Ok(FusionCache {
        x_a: x_a.to_vec(),
        x_m: x_m.to_vec(),
        h_m,
        h_v,
        mask_m,
        mask_v,
        hd_m,
        hd_v,
        attn_m,
        attn_v,
        concat,
        head_pre,
        output: FusionOutput { x_am, epp },
    })
}

pub fn forward<T: Scalar>(x_a: &[T], x_m: &[T], w: &FusionWeights<T>, mode: Mode) -> Result<FusionOutput<T>> {
    forward_cached(x_a, x_m, w, mode).map(|c| c.output)
}

/// Gradients from one sample.
#[derive(Debug, Clone)]
pub struct FusionGrads<T> {
    pub weights: FusionWeights<T>,
    pub x_a: Vec<T>,
    pub x_m: Vec<T>,
}

/// Backward pass given dL/d(epp) and, optionally, an extra dL/d(X_am).
///
/// The clamp uses the subgradient 1 on [0, 1] and 0 outside.
pub fn backward<T: Scalar>(
    cache: &FusionCache<T>,
    w: &FusionWeights<T>,
    grad_epp: T,
    grad_x_am: Option<&[T]>,
) -> Result<FusionGrads<T>> {
    let mut g = w.zeros_like();
    let inside = cache.head_pre >= T::zero() && cache.head_pre <= T::one();
    let g_head = if inside { grad_epp } else { T::zero() };
    let mut g_xam = w.head.backprop(&cache.output.x_am, &[g_head], &mut g.head)?;
    if let Some(extra) = grad_x_am {
        if extra.len() != g_xam.len() {
            return Err(Error::dim("fusion backward", "X_am gradient length"));
        }
        g_xam.iter_mut().zip(extra).for_each(|(a, &b)| *a += b);
    }
    let g_concat = w.out.backprop(&cache.concat, &g_xam, &mut g.out)?;
    let h = w.hidden_dim();
    let (g_xa1, g_xm1) = g_concat.split_at(h);

    let branch = |g_x1: &[T],
                  attn: &[T],
                  hd: &[T],
                  mask: &[T],
                  hidden: &[T],
                  attn_layer: &Dense<T>,
                  g_attn_layer: &mut Dense<T>|
     -> Result<Vec<T>> {
        let mut g_attn_pre = hadamard(g_x1, hd);
        for (gv, &a) in g_attn_pre.iter_mut().zip(attn) {
            if a <= T::zero() {
                *gv = T::zero();
            }
        }
        let mut g_hd = hadamard(g_x1, attn);
        let via_attn = attn_layer.backprop(hd, &g_attn_pre, g_attn_layer)?;
        g_hd.iter_mut().zip(&via_attn).for_each(|(a, &b)| *a += b);
        // through the dropout mask and the branch ReLU
        Ok(g_hd
            .iter()
            .zip(mask)
            .zip(hidden)
            .map(|((&gv, &m), &hv)| if hv > T::zero() { gv * m } else { T::zero() })
            .collect())
    };

    let g_hv_pre = branch(g_xa1, &cache.attn_v, &cache.hd_v, &cache.mask_v, &cache.h_v, &w.attn_video, &mut g.attn_video)?;
    let g_hm_pre = branch(g_xm1, &cache.attn_m, &cache.hd_m, &cache.mask_m, &cache.h_m, &w.attn_music, &mut g.attn_music)?;
    let g_x_a = w.video.backprop(&cache.x_a, &g_hv_pre, &mut g.video)?;
    let g_x_m = w.music.backprop(&cache.x_m, &g_hm_pre, &mut g.music)?;
    Ok(FusionGrads {
        weights: g,
        x_a: g_x_a,
        x_m: g_x_m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub log_interval: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 32,
            learning_rate: 1e-3,
            weight_decay: 1e-4,
            dropout: 0.1,
            log_interval: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.log_interval == 0 {
            return Err(Error::Config("epochs, batch size and log interval must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} not in [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        }
    }
}

/// Training loss sampled every `log_interval` epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// (epoch, mean training MSE over that epoch's batches).
    pub history: Vec<(usize, f64)>,
    /// Full-set MSE in inference mode before the first update.
    pub initial_mse: f64,
    /// Full-set MSE in inference mode after the last update.
    pub final_mse: f64,
}

impl TrainReport {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("epoch,mse\n");
        for (e, l) in &self.history {
            s.push_str(&format!("{e},{l}\n"));
        }
        s
    }
}

/// Seeded epoch/batch loop. `step` receives the batch indices and the epoch
/// and returns the batch's summed squared error.
pub(crate) fn minibatch_epochs(
    n: usize,
    config: &TrainConfig,
    mut step: impl FnMut(&[usize], usize) -> Result<f64>,
) -> Result<Vec<(usize, f64)>> {
    config.validate()?;
    if n == 0 {
        return Err(Error::Empty("training set".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::new();
    for epoch in 1..=config.epochs {
        let mut rng = rng_from_seed(derive_indexed(config.seed, "train/shuffle", epoch as u64));
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut sse = 0.0;
        for batch in order.chunks(config.batch_size) {
            sse += step(batch, epoch)?;
        }
        let mse = sse / n as f64;
        if !mse.is_finite() {
            return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
        }
        if epoch % config.log_interval == 0 {
            history.push((epoch, mse));
        }
    }
    Ok(history)
}

/// One training example for the end-to-end model.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionExample<T> {
    pub animation_features: [T; 5],
    /// Frozen auditory encoding.
    pub x_m: Vec<T>,
    pub target: T,
}

/// Chunk size for batched visual inference.
const INFER_CHUNK: usize = 64;

/// `(X_am, epp)` for every example in inference mode.
pub fn encode<T: Scalar>(
    examples: &[FusionExample<T>],
    plane_size: usize,
    visual: &VisualWeights<T>,
    fusion: &FusionWeights<T>,
) -> Result<Vec<FusionOutput<T>>> {
    let mut out = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(INFER_CHUNK) {
        let feats: Vec<[T; 5]> = chunk.iter().map(|e| e.animation_features).collect();
        let cache = visual_cortex::forward_batch(&visual_cortex::lift_batch(&feats, plane_size)?, visual)?;
        for (x_a, e) in cache.outputs.iter().zip(chunk) {
            out.push(forward(x_a, &e.x_m, fusion, Mode::Infer)?);
        }
    }
    Ok(out)
}

pub fn evaluate_mse<T: Scalar>(
    examples: &[FusionExample<T>],
    plane_size: usize,
    visual: &VisualWeights<T>,
    fusion: &FusionWeights<T>,
) -> Result<f64> {
    let outs = encode(examples, plane_size, visual, fusion)?;
    let sse: f64 = outs
        .iter()
        .zip(examples)
        .map(|(o, e)| (o.epp - e.target).as_f64().powi(2))
        .sum();
    Ok(sse / examples.len().max(1) as f64)
}

/// Mini-batch Adam on MSE, back-propagating through the fusion MLP and the
/// whole visual stack. The auditory encodings are inputs, not parameters.
pub fn train<T: Scalar>(
    examples: &[FusionExample<T>],
    plane_size: usize,
    visual: &mut VisualWeights<T>,
    fusion: &mut FusionWeights<T>,
    config: &TrainConfig,
) -> Result<TrainReport> {
    if examples.is_empty() {
        return Err(Error::Empty("fusion training set".into()));
    }
    config.validate()?;
    let initial_mse = evaluate_mse(examples, plane_size, visual, fusion)?;
    let mut opt_v = AdamGroup::new(visual, config.adam())?;
    let mut opt_f = AdamGroup::new(fusion, config.adam())?;

    let history = minibatch_epochs(examples.len(), config, |batch, epoch| {
        let inv_b = T::one() / T::from_usize_exact(batch.len());
        let feats: Vec<[T; 5]> = batch.iter().map(|&i| examples[i].animation_features).collect();
        let vcache = visual_cortex::forward_batch(&visual_cortex::lift_batch(&feats, plane_size)?, visual)?;
        let mut g_fusion = fusion.zeros_like();
        let mut g_xa = Vec::with_capacity(batch.len());
        let mut sse = 0.0;
        for (x_a, &i) in vcache.outputs.iter().zip(batch) {
            let ex = &examples[i];
            let mode = Mode::Train {
                dropout: config.dropout,
                seed: derive_indexed(config.seed, &format!("dropout/{epoch}"), i as u64),
            };
            let cache = forward_cached(x_a, &ex.x_m, fusion, mode)?;
            let err = cache.output.epp - ex.target;
            sse += err.as_f64().powi(2);
            let g = backward(&cache, fusion, T::of(2.0) * err * inv_b, None)?;
            g_fusion.add_assign(&g.weights);
            g_xa.push(g.x_a);
        }
        let g_visual = visual_cortex::backward(&vcache, visual, &g_xa)?;
        opt_f.step(fusion, &g_fusion)?;
        opt_v.step(visual, &g_visual)?;
        Ok(sse)
    })?;

    let final_mse = evaluate_mse(examples, plane_size, visual, fusion)?;
    Ok(TrainReport {
        history,
        initial_mse,
        final_mse,
    })
}
