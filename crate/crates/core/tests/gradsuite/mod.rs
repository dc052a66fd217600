//! Finite-difference checks for every backward pass, shared by the
//! `gradients` and `acceptance` test targets.

use avfbel::fusion::{self, FusionConfig, FusionWeights, Mode};
use avfbel::numkernel::{
    conv2d, conv2d_backward, finite_diff_grad, linear, linear_backward, mse_grad, mse_loss, relative_error,
    ParamGroup, Tensor,
};
use avfbel::rng::{rng_from_seed, Rng};
use avfbel::visual_cortex::{self, AreaSpec, VisualConfig};
use rand::Rng as _;

pub const INSTANCES: usize = 20;
pub const TOLERANCE: f64 = 1e-4;
const STEP: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub instances: usize,
    pub worst: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.instances >= INSTANCES && self.worst < TOLERANCE
    }
}

fn tensor(rng: &mut Rng, shape: &[usize]) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn vector(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Worst relative error over every tensor of a parameter group.
fn group_error<P: ParamGroup<f64> + Clone>(params: &P, grads: &P, loss: impl Fn(&P) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for (k, t) in params.tensors().into_iter().enumerate() {
        let numeric = finite_diff_grad(
            |probe| {
                let mut q = params.clone();
                *q.tensors_mut()[k] = probe.clone();
                loss(&q)
            },
            t,
            STEP,
        )
        .unwrap();
        worst = worst.max(relative_error(grads.tensors()[k].data(), numeric.data()));
    }
    worst
}

fn vec_error(analytic: &[f64], at: &[f64], loss: impl Fn(&[f64]) -> f64) -> f64 {
    let numeric = finite_diff_grad(|p| loss(p.data()), &Tensor::from_vec(at.to_vec()), STEP).unwrap();
    relative_error(analytic, numeric.data())
}

/// Conv kernels, bias and input under a random linear objective.
pub fn conv(seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let (n, c, oc) = (rng.gen_range(1..=2), rng.gen_range(1..=3), rng.gen_range(1..=3));
        let (h, w) = (rng.gen_range(3..=6), rng.gen_range(3..=6));
        let k = rng.gen_range(1..=3);
        let stride = rng.gen_range(1..=2);
        let padding = rng.gen_range(0..=k / 2 + 1);
        let input = tensor(&mut rng, &[n, c, h, w]);
        let kernels = tensor(&mut rng, &[oc, c, k, k]);
        let bias = vector(&mut rng, oc);
        let out_shape = conv2d(&input, &kernels, &bias, stride, padding).unwrap().shape().to_vec();
        let coeff = tensor(&mut rng, &out_shape);
        let objective = |i: &Tensor<f64>, k: &Tensor<f64>, b: &[f64]| {
            dot(conv2d(i, k, b, stride, padding).unwrap().data(), coeff.data())
        };
        let g = conv2d_backward(&input, &kernels, &coeff, stride, padding, true).unwrap();
        let gk = finite_diff_grad(|p| objective(&input, p, &bias), &kernels, STEP).unwrap();
        let gi = finite_diff_grad(|p| objective(p, &kernels, &bias), &input, STEP).unwrap();
        worst = worst
            .max(relative_error(g.kernels.data(), gk.data()))
            .max(relative_error(g.input.as_ref().unwrap().data(), gi.data()))
            .max(vec_error(&g.bias, &bias, |b| objective(&input, &kernels, b)));
    }
    Check { name: "conv2d (kernels, bias, input)", instances: INSTANCES, worst }
}

pub fn linear_layer(seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let (d_in, d_out) = (rng.gen_range(1..=7), rng.gen_range(1..=7));
        let weight = tensor(&mut rng, &[d_out, d_in]);
        let bias = vector(&mut rng, d_out);
        let input = vector(&mut rng, d_in);
        let coeff = vector(&mut rng, d_out);
        let objective = |x: &[f64], w: &Tensor<f64>, b: &[f64]| dot(&linear(x, w, b).unwrap(), &coeff);
        let g = linear_backward(&input, &weight, &coeff).unwrap();
        let gw = finite_diff_grad(|p| objective(&input, p, &bias), &weight, STEP).unwrap();
        worst = worst
            .max(relative_error(g.weight.data(), gw.data()))
            .max(vec_error(&g.bias, &bias, |b| objective(&input, &weight, b)))
            .max(vec_error(&g.input, &input, |x| objective(x, &weight, &bias)));
    }
    Check { name: "linear (weight, bias, input)", instances: INSTANCES, worst }
}

pub fn mse(seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let n = rng.gen_range(1..=12);
        let pred = vector(&mut rng, n);
        let target = vector(&mut rng, n);
        let g = mse_grad(&pred, &target).unwrap();
        worst = worst.max(vec_error(&g, &pred, |p| mse_loss(p, &target).unwrap()));
    }
    Check { name: "mse loss", instances: INSTANCES, worst }
}

/// Fusion instance whose head pre-activation sits strictly inside the
/// clamp's linear region, so the objective is smooth around it.
fn fusion_instance(rng: &mut Rng) -> (FusionWeights<f64>, Vec<f64>, Vec<f64>, Mode, f64, Vec<f64>) {
    loop {
        let cfg = FusionConfig {
            visual_dim: rng.gen_range(2..=6),
            audio_dim: 3,
            hidden_dim: rng.gen_range(2..=6),
            fused_dim: rng.gen_range(2..=5),
            seed: rng.gen(),
        };
        let mut w = fusion::init::<f64>(&cfg).unwrap();
        for t in w.tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v += rng.gen_range(-0.2..0.2));
        }
        let x_a = vector(rng, cfg.visual_dim);
        let x_m: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mode = if rng.gen_bool(0.5) {
            Mode::Infer
        } else {
            Mode::Train { dropout: 0.3, seed: rng.gen() }
        };
        let head = fusion::forward(&x_a, &x_m, &w, mode).unwrap();
        // shift the head bias so the pre-activation lands in (0.1, 0.9)
        let pre = head.x_am.iter().zip(w.head.weight.data()).map(|(a, b)| a * b).sum::<f64>();
        w.head.bias.data_mut()[0] = rng.gen_range(0.1..0.9) - pre;
        let target = rng.gen_range(0.0..1.0);
        let coeff = vector(rng, cfg.fused_dim);
        let active = fusion::forward(&x_a, &x_m, &w, mode).unwrap();
        if active.x_am.iter().any(|v| v.abs() > 1e-8) {
            return (w, x_a, x_m, mode, target, coeff);
        }
    }
}

fn fusion_objective(x_a: &[f64], x_m: &[f64], w: &FusionWeights<f64>, mode: Mode, target: f64, coeff: &[f64]) -> f64 {
    let out = fusion::forward(x_a, x_m, w, mode).unwrap();
    (out.epp - target).powi(2) + dot(&out.x_am, coeff)
}

/// Every fusion weight group (branches, attention gates, output layer and
/// head) plus both inputs, with and without dropout.
pub fn fusion_net(seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let (w, x_a, x_m, mode, target, coeff) = fusion_instance(&mut rng);
        let cache = fusion::forward_cached(&x_a, &x_m, &w, mode).unwrap();
        let grad_epp = 2.0 * (cache.output.epp - target);
        let g = fusion::backward(&cache, &w, grad_epp, Some(&coeff)).unwrap();
        worst = worst
            .max(group_error(&w, &g.weights, |q| fusion_objective(&x_a, &x_m, q, mode, target, &coeff)))
            .max(vec_error(&g.x_a, &x_a, |x| fusion_objective(x, &x_m, &w, mode, target, &coeff)))
            .max(vec_error(&g.x_m, &x_m, |x| fusion_objective(&x_a, x, &w, mode, target, &coeff)));
    }
    Check { name: "fusion (all weight groups, X_a, X_m)", instances: INSTANCES, worst }
}

/// The full convolutional stack with pooling, average pooling and decoder.
pub fn visual_stack(seed: u64) -> Check {
    let mut rng = rng_from_seed(seed);
    let mut worst = 0.0f64;
    for _ in 0..INSTANCES {
        let mid = rng.gen_range(2..=4);
        let config = VisualConfig {
            plane_size: rng.gen_range(5..=8),
            areas: vec![
                AreaSpec::new("V1", 5, mid, 3, rng.gen_range(1..=2)),
                AreaSpec::new("V2", mid, 3, 3, 1),
            ],
            output_dim: rng.gen_range(1..=4),
            seed: rng.gen(),
        };
        let mut w = visual_cortex::init::<f64>(&config).unwrap();
        for t in w.tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v += rng.gen_range(-0.1..0.1));
        }
        let n = rng.gen_range(1..=2);
        let input = tensor(&mut rng, &[n, 5, config.plane_size, config.plane_size]);
        let coeff: Vec<Vec<f64>> = (0..n).map(|_| vector(&mut rng, config.output_dim)).collect();
        let objective = |q: &visual_cortex::VisualWeights<f64>| {
            let c = visual_cortex::forward_batch(&input, q).unwrap();
            c.outputs.iter().zip(&coeff).map(|(o, k)| dot(o, k)).sum::<f64>()
        };
        let cache = visual_cortex::forward_batch(&input, &w).unwrap();
        let g = visual_cortex::backward(&cache, &w, &coeff).unwrap();
        worst = worst.max(group_error(&w, &g, objective));
    }
    Check { name: "visual stack (all areas, decoder)", instances: INSTANCES, worst }
}

#[allow(dead_code)]
pub fn all() -> Vec<Check> {
    vec![
        conv(0xC0),
        linear_layer(0x11),
        mse(0x3E),
        fusion_net(0xF5),
        visual_stack(0x51),
    ]
}
