//! Brain-emotional-learning head.
//!
//! Fused features are stacked into sliding windows and folded through a
//! frozen recurrent contextualizer. The amygdala sees the context plus one
//! random thalamic channel (`A_i = xa_i V_i`); the orbitofrontal nodes see
//! the context only (`O_j = x_j U_j gamma`). The output is `E = ΣA - ΣO`.
//!
//! Learning:
//!
//! ```text
//! ΔV_i = α xa_i max(0, Re - ΣA)
//! ΔU_j = β x_j err
//! ```
//!
//! where `err` is `E - Re` ([`InhibitoryRule::NetOutput`], the default) or
//! `Σ_j (O_j - Re)` ([`InhibitoryRule::PerNode`]). The per-node form drives U
//! away from its fixed point, so it is kept for reference and small
//! experiments only.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::Tensor;
use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::Scalar;

/// Weights beyond this magnitude abort training.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InhibitoryRule {
    NetOutput,
    PerNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BelConfig {
    /// Amygdala learning rate.
    pub alpha: f64,
    /// Orbitofrontal learning rate.
    pub beta: f64,
    pub epochs: usize,
    /// Training stops once the epoch's mean |ΔV| falls below this.
    pub tolerance: f64,
    pub thalamic_amplitude: f64,
    /// Prefrontal gain on the inhibitory pathway, in [0, 1].
    pub gamma: f64,
    pub window: usize,
    pub input_scale: f64,
    pub recurrent_scale: f64,
    pub rule: InhibitoryRule,
    pub learn_inhibitory: bool,
    pub seed: u64,
}

impl Default for BelConfig {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            beta: 0.2,
            epochs: 200,
            tolerance: 1e-4,
            thalamic_amplitude: 1.0,
            gamma: 1.0,
            window: 4,
            input_scale: 1.0,
            recurrent_scale: 0.3,
            rule: InhibitoryRule::NetOutput,
            learn_inhibitory: true,
            seed: 0,
        }
    }
}

impl BelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.beta > 0.0) {
            return Err(Error::Config("BEL learning rates must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} not in [0, 1]", self.gamma)));
        }
        if self.window == 0 || self.epochs == 0 {
            return Err(Error::Config("BEL window and epochs must be >= 1".into()));
        }
        if !(self.thalamic_amplitude >= 0.0) {
            return Err(Error::Config("thalamic amplitude must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BelWeights<T> {
    /// Amygdala weights, `d` context inputs followed by the thalamic input.
    pub v: Vec<T>,
    /// Orbitofrontal weights, one per context input.
    pub u: Vec<T>,
    pub gamma: T,
    /// Frozen contextualizer, shape (d, 2d): input block then recurrent block.
    pub r: Tensor<T>,
    pub window: usize,
}

impl<T: Scalar> BelWeights<T> {
    /// Zero V and U, seeded contextualizer.
    pub fn new(input_dim: usize, config: &BelConfig) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 {
            return Err(Error::Config("BEL input dimension must be positive".into()));
        }
        let d = input_dim;
        let mut rng = rng_from_seed(derive_seed(config.seed, "bel/contextualizer"));
        // uniform(-1, 1) has variance 1/3; scale so each block's projection of
        // a unit-variance input has variance scale^2
        let in_scale = config.input_scale * (3.0 / d as f64).sqrt();
        let rec_scale = config.recurrent_scale * (3.0 / d as f64).sqrt();
        let mut r = Vec::with_capacity(d * 2 * d);
        for _ in 0..d {
            for c in 0..2 * d {
                let s = if c < d { in_scale } else { rec_scale };
                r.push(T::of(rng.gen_range(-1.0..=1.0) * s));
            }
        }
        Ok(Self {
            v: vec![T::zero(); d + 1],
            u: vec![T::zero(); d],
            gamma: T::of(config.gamma),
            r: Tensor::new(vec![d, 2 * d], r)?,
            window: config.window,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.u.len()
    }

    fn check_finite(&self) -> Result<()> {
        let limit = T::of(DIVERGENCE_LIMIT);
        if let Some(w) = self.v.iter().chain(&self.u).find(|w| !w.is_finite() || w.abs() > limit) {
            return Err(Error::Divergence(format!(
                "BEL weight reached {w} (limit {DIVERGENCE_LIMIT:e}); lower alpha/beta"
            )));
        }
        Ok(())
    }
}

/// Overlapping stride-1 windows; `len - w + 1` of them.
pub fn build_windows<X>(sequence: &[X], window: usize) -> Result<Vec<&[X]>> {
    if window == 0 {
        return Err(Error::Contract("window length must be >= 1".into()));
    }
    if sequence.len() < window {
        return Err(Error::Contract(format!(
            "sequence of {} items is shorter than window {window}",
            sequence.len()
        )));
    }
    Ok(sequence.windows(window).collect())
}

/// `h_t = tanh(R [x_t; h_{t-1}])` over the window from `h_0 = 0`; returns
/// the final state.
pub fn contextualize<T: Scalar, X: AsRef<[T]>>(window: &[X], r: &Tensor<T>) -> Result<Vec<T>> {
    let (k, cols) = r.dims2("contextualize")?;
    if cols != 2 * k {
        return Err(Error::dim("contextualize", format!("R must be k x 2k, got {k} x {cols}")));
    }
    let mut h = vec![T::zero(); k];
    let mut next = vec![T::zero(); k];
    for x in window {
        let x = x.as_ref();
        if x.len() != k {
            return Err(Error::dim("contextualize", format!("input length {} != {k}", x.len())));
        }
        for (i, row) in r.data().chunks_exact(cols).enumerate() {
            let (ri, rh) = row.split_at(k);
            let pre: T = ri.iter().zip(x).map(|(&a, &b)| a * b).sum::<T>()
                + rh.iter().zip(&h).map(|(&a, &b)| a * b).sum::<T>();
            next[i] = pre.tanh();
        }
        std::mem::swap(&mut h, &mut next);
    }
    Ok(h)
}

/// Affine map of a context in (-1, 1) onto a non-negative sensory input in
/// (0, 1). The orbitofrontal pathway can only cancel the amygdala's
/// thalamic drive if its inputs have a non-zero mean.
pub fn sensory_input<T: Scalar>(context: &[T]) -> Vec<T> {
    let half = T::of(0.5);
    context.iter().map(|&h| half * (h + T::one())).collect()
}

/// One thalamic draw: `amplitude * U[0, 1]`.
pub fn thalamic_signal<T: Scalar, R: Rng + ?Sized>(rng: &mut R, amplitude: f64) -> T {
    let u: f64 = rng.gen();
    T::of(amplitude * u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BelActivation<T> {
    /// Amygdala input: context followed by the thalamic value.
    pub xa: Vec<T>,
    pub a: Vec<T>,
    pub o: Vec<T>,
    pub e: T,
}

impl<T: Scalar> BelActivation<T> {
    pub fn sum_a(&self) -> T {
        self.a.iter().copied().sum()
    }

    pub fn sum_o(&self) -> T {
        self.o.iter().copied().sum()
    }
}

pub fn forward<T: Scalar>(x: &[T], thalamic: T, w: &BelWeights<T>) -> Result<BelActivation<T>> {
    if x.len() != w.u.len() || w.v.len() != x.len() + 1 {
        return Err(Error::dim(
            "bel forward",
            format!("context {}, V {}, U {}", x.len(), w.v.len(), w.u.len()),
        ));
    }
    let mut xa = x.to_vec();
    xa.push(thalamic);
    let a: Vec<T> = xa.iter().zip(&w.v).map(|(&x, &v)| x * v).collect();
    let o: Vec<T> = x.iter().zip(&w.u).map(|(&x, &u)| x * u * w.gamma).collect();
    let e = a.iter().copied().sum::<T>() - o.iter().copied().sum::<T>();
    Ok(BelActivation { xa, a, o, e })
}

/// True once ΣA has attained `re` at floating-point resolution.
fn reinforcement_reached<T: Scalar>(sum_a: T, re: T) -> bool {
    let slack = T::of(4.0) * T::epsilon() * re.abs().max(T::one());
    sum_a >= re - slack
}

/// Weight adjustments for one presentation.
pub fn update<T: Scalar>(act: &BelActivation<T>, re: T, config: &BelConfig) -> (Vec<T>, Vec<T>) {
    let alpha = T::of(config.alpha);
    let beta = T::of(config.beta);
    let sum_a = act.sum_a();
    let shortfall = if reinforcement_reached(sum_a, re) {
        T::zero()
    } else {
        (re - sum_a).max(T::zero())
    };
    let dv = act.xa.iter().map(|&x| alpha * x * shortfall).collect();
    let err = match config.rule {
        InhibitoryRule::NetOutput => act.e - re,
        InhibitoryRule::PerNode => act.o.iter().map(|&o| o - re).sum(),
    };
    let du = if config.learn_inhibitory {
        act.xa[..act.o.len()].iter().map(|&x| beta * x * err).collect()
    } else {
        vec![T::zero(); act.o.len()]
    };
    (dv, du)
}

pub fn apply<T: Scalar>(w: &mut BelWeights<T>, dv: &[T], du: &[T]) -> Result<()> {
    w.v.iter_mut().zip(dv).for_each(|(v, &d)| *v += d);
    w.u.iter_mut().zip(du).for_each(|(u, &d)| *u += d);
    w.check_finite()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BelEpoch {
    pub epoch: usize,
    pub mean_sum_a: f64,
    pub mean_sum_o: f64,
    pub mean_e: f64,
    pub mean_abs_dv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BelTrace {
    pub epochs: Vec<BelEpoch>,
    pub converged: bool,
}

impl BelTrace {
    pub fn csv(&self) -> String {
        let mut s = String::from("epoch,sum_a,sum_o,e,mean_abs_dv\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{},{},{},{},{}", e.epoch, e.mean_sum_a, e.mean_sum_o, e.mean_e, e.mean_abs_dv);
        }
        s
    }
}

/// Presents every (context, reinforcement) pair once per epoch, in order,
/// with a fresh thalamic draw each time, until the mean |ΔV| of an epoch
/// drops below the tolerance or the epoch cap is hit.
pub fn train<T: Scalar>(
    contexts: &[Vec<T>],
    reinforcement: &[T],
    w: &mut BelWeights<T>,
    config: &BelConfig,
) -> Result<BelTrace> {
    config.validate()?;
    if contexts.is_empty() {
        return Err(Error::Empty("BEL training set".into()));
    }
    if contexts.len() != reinforcement.len() {
        return Err(Error::dim("bel train", "one reinforcement value per context required"));
    }
    let mut rng = rng_from_seed(derive_seed(config.seed, "bel/thalamus/train"));
    let n = contexts.len() as f64;
    let mut trace = BelTrace {
        epochs: Vec::new(),
        converged: false,
    };
    for epoch in 1..=config.epochs {
        let (mut sa, mut so, mut se, mut sdv) = (0.0, 0.0, 0.0, 0.0);
        for (x, &re) in contexts.iter().zip(reinforcement) {
            let th = thalamic_signal(&mut rng, config.thalamic_amplitude);
            let act = forward(x, th, w)?;
            let (dv, du) = update(&act, re, config);
            sa += act.sum_a().as_f64();
            so += act.sum_o().as_f64();
            se += act.e.as_f64();
            sdv += dv.iter().map(|d| d.abs().as_f64()).sum::<f64>() / dv.len() as f64;
            apply(w, &dv, &du)?;
        }
        let mean_abs_dv = sdv / n;
        trace.epochs.push(BelEpoch {
            epoch,
            mean_sum_a: sa / n,
            mean_sum_o: so / n,
            mean_e: se / n,
            mean_abs_dv,
        });
        if ![sa, so, se].iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence(format!("non-finite BEL activity at epoch {epoch}")));
        }
        if mean_abs_dv < config.tolerance {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

/// Raw output E for every context, with thalamic draws from `seed`.
pub fn predict<T: Scalar>(contexts: &[Vec<T>], w: &BelWeights<T>, amplitude: f64, seed: u64) -> Result<Vec<T>> {
    let mut rng = rng_from_seed(derive_seed(seed, "bel/thalamus/predict"));
    contexts
        .iter()
        .map(|x| forward(x, thalamic_signal(&mut rng, amplitude), w).map(|a| a.e))
        .collect()
}

/// Min-max scaling of E by the reinforcement range, clamped to [0, 1];
/// 0.5 when the range is degenerate.
pub fn normalize_output<T: Scalar>(e: T, re_min: T, re_max: T) -> T {
    if re_max <= re_min {
        return T::of(0.5);
    }
    ((e - re_min) / (re_max - re_min)).max(T::zero()).min(T::one())
}

/// Weight table `matrix,row,col,value` covering V, U, gamma and R.
pub fn heatmap_csv<T: Scalar>(w: &BelWeights<T>) -> String {
    let mut s = String::from("matrix,row,col,value\n");
    for (i, v) in w.v.iter().enumerate() {
        let _ = writeln!(s, "V,0,{i},{}", v.as_f64());
    }
    for (j, u) in w.u.iter().enumerate() {
        let _ = writeln!(s, "U,0,{j},{}", u.as_f64());
    }
    let _ = writeln!(s, "gamma,0,0,{}", w.gamma.as_f64());
    let (rows, cols) = w.r.dims2("heatmap").unwrap_or((0, 0));
    for r in 0..rows {
        for c in 0..cols {
            let _ = writeln!(s, "R,{r},{c},{}", w.r.data()[r * cols + c].as_f64());
        }
    }
    s
}
