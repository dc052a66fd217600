//! Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always print.

mod gradsuite;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use avfbel::auditory_cortex::{simulate, AuditoryConfig};
use avfbel::bel::{self, BelConfig, BelWeights};
use avfbel::dataset::{compute_epp, normalize_epp};
use avfbel::metrics::{precision_recall_f1, similarity};
use avfbel::pipeline::{self, RunConfig, Variant};
use avfbel::rng::rng_from_seed;
use rand::Rng;

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn similarity_calibration() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(77);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..200);
        let truth: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let generated: Vec<f64> = truth
            .iter()
            .map(|&t| if t + 0.2522 <= 1.0 && (t < 0.2522 || rng.gen_bool(0.5)) { t + 0.2522 } else { t - 0.2522 })
            .collect();
        let s = similarity(&truth, &generated).expect("similarity");
        worst = worst.max((s - 77.69).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 0.05 && elapsed < Duration::from_secs(1),
        format!("max |similarity - 77.69| = {worst:.4} over 1000 vectors, {elapsed:.2?}"),
    )
}

fn lif_oracle() -> Outcome {
    let start = Instant::now();
    let mut config = AuditoryConfig { jitter: 0.0, ..AuditoryConfig::default() };
    for p in &mut config.populations {
        p.size = 1;
        p.tau_ms = 10.0;
        p.threshold = 0.5;
        p.reset = 0.0;
    }
    let record = simulate([0.6, 0.4, 0.6], &config, 0).expect("simulate");
    let supra = &record.populations[0].spike_times[0];
    let silent = record.populations[1].spike_times[0].len();
    let expected = 10.0 * 6.0f64.ln();
    let worst_isi = supra
        .windows(2)
        .map(|w| (w[1] - w[0] - expected).abs())
        .fold(0.0f64, f64::max);
    let first = supra.first().map_or(f64::INFINITY, |t| (t - expected).abs());
    let count = supra.len();
    let elapsed = start.elapsed();
    outcome(
        supra.len() >= 2
            && worst_isi <= config.dt_ms
            && first <= config.dt_ms
            && (54..=56).contains(&count)
            && silent == 0
            && elapsed < Duration::from_secs(1),
        format!(
            "max |ISI - {expected:.3}| = {worst_isi:.4} ms, {count} spikes at I=0.6, {silent} at I=0.4, {elapsed:.2?}"
        ),
    )
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let checks = gradsuite::all();
    let elapsed = start.elapsed();
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
    let worst = checks.iter().map(|c| c.worst).fold(0.0f64, f64::max);
    let min_instances = checks.iter().map(|c| c.instances).min().unwrap_or(0);
    outcome(
        failed.is_empty() && elapsed < Duration::from_secs(30),
        format!(
            "{} backward passes x {min_instances} instances, worst relative error {worst:.2e}, {elapsed:.2?}{}",
            checks.len(),
            if failed.is_empty() { String::new() } else { format!(", failing: {failed:?}") }
        ),
    )
}

/// One amygdala node on a constant input of 1.0, no thalamic drive, frozen
/// inhibitory weights.
fn bel_convergence() -> Outcome {
    let config = BelConfig {
        alpha: 0.2,
        thalamic_amplitude: 0.0,
        learn_inhibitory: false,
        ..BelConfig::default()
    };
    let re = 0.8;
    let mut w = BelWeights::<f64>::new(1, &config).expect("weights");
    let mut sums = Vec::new();
    let mut dvs = Vec::new();
    for _ in 0..1000 {
        let act = bel::forward(&[1.0], 0.0, &w).expect("forward");
        let (dv, du) = bel::update(&act, re, &config);
        sums.push(act.sum_a());
        dvs.push(dv.iter().map(|d| d.abs()).fold(0.0f64, f64::max));
        bel::apply(&mut w, &dv, &du).expect("apply");
    }
    let monotone = sums.windows(2).all(|p| p[1] >= p[0]);
    let within = sums.iter().position(|s| (s - re).abs() <= 1e-3);
    let halted = dvs.iter().position(|&d| d == 0.0);
    let stays_halted = halted.is_some_and(|h| dvs[h..].iter().all(|&d| d == 0.0));
    let stays_within = within.is_some_and(|k| sums[k..].iter().all(|s| (s - re).abs() <= 1e-3));
    let max_dv_in_band = within.map_or(f64::NAN, |k| dvs[k..].iter().copied().fold(0.0f64, f64::max));
    outcome(
        monotone && within.is_some_and(|k| k < 100) && stays_within && stays_halted,
        format!(
            "monotone={monotone}, within 1e-3 after {} updates, dV exactly 0 from update {} on (max |dV| once in band {max_dv_in_band:.1e}), final sum A {:.17}",
            within.map_or("never".into(), |k| k.to_string()),
            halted.map_or("never".into(), |k| k.to_string()),
            sums.last().copied().unwrap_or(f64::NAN)
        ),
    )
}

struct SeedRun {
    seed: u64,
    elapsed: Duration,
    similarity: [f64; 3],
    f1: [f64; 3],
}

impl SeedRun {
    fn ordered(&self) -> bool {
        let [avf, a, m] = self.similarity;
        let [f_avf, f_a, f_m] = self.f1;
        avf > a && a > m && f_avf > f_a && f_a > f_m
    }
}

fn ablate(seed: u64, out: &Path) -> (Duration, pipeline::RunOutput) {
    let config = RunConfig { seed, ..RunConfig::default() };
    let start = Instant::now();
    let run = pipeline::run_all(&config).expect("ablate run");
    run.write(out).expect("write outputs");
    (start.elapsed(), run)
}

fn ablation_ordering(runs: &[SeedRun]) -> Outcome {
    let held = runs.iter().filter(|r| r.ordered()).count();
    let slowest = runs.iter().map(|r| r.elapsed).max().unwrap_or_default();
    let per_seed: Vec<String> = runs
        .iter()
        .map(|r| {
            format!(
                "seed {}: sim {:.2}/{:.2}/{:.2} F1 {:.3}/{:.3}/{:.3} {}",
                r.seed,
                r.similarity[0],
                r.similarity[1],
                r.similarity[2],
                r.f1[0],
                r.f1[1],
                r.f1[2],
                if r.ordered() { "ok" } else { "out of order" }
            )
        })
        .collect();
    outcome(
        held >= 4 && slowest < Duration::from_secs(60),
        format!(
            "ordering AVF-BEL > A-BEL > M-BEL held on {held}/{} seeds, slowest run {slowest:.1?} [{}]",
            runs.len(),
            per_seed.join("; ")
        ),
    )
}

fn epp_properties() -> Outcome {
    let mut rng = rng_from_seed(21);
    let mut violations = 0usize;
    for _ in 0..10_000 {
        let mut r = [0.0f64; 5];
        r.iter_mut().for_each(|v| *v = rng.gen_range(0.0..5.0));
        r[rng.gen_range(0..5)] += 0.1;
        let base = compute_epp(&r).expect("epp");
        let bump = rng.gen_range(0.0..3.0);
        let mut happier = r;
        happier[4] += bump;
        let mut scared = r;
        scared[0] += bump;
        let k = rng.gen_range(0.01..100.0);
        let scaled = r.map(|v| v * k);
        if compute_epp(&happier).unwrap() < base
            || compute_epp(&scared).unwrap() > base
            || (compute_epp(&scaled).unwrap() - base).abs() > 1e-12
            || !(0.0..=1.0).contains(&base)
        {
            violations += 1;
        }
    }
    let mut norm_ok = true;
    for _ in 0..1000 {
        let n = rng.gen_range(1..50);
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let out = normalize_epp(&values);
        norm_ok &= out.len() == n && out.iter().all(|v| (0.0..=1.0).contains(v));
        if n > 1 {
            norm_ok &= out.contains(&0.0) && out.contains(&1.0);
        }
        let c = rng.gen_range(-3.0..3.0);
        norm_ok &= normalize_epp(&vec![c; n]).iter().all(|&v| v == 0.5);
    }
    outcome(
        violations == 0 && norm_ok,
        format!("{violations} monotonicity/scale violations over 10^4 rating vectors; normalization bounds and constant guard {}", if norm_ok { "hold" } else { "violated" }),
    )
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("read dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else if matches!(path.extension().and_then(|e| e.to_str()), Some("csv" | "svg"))
                || path.file_name().is_some_and(|n| n == "results.json")
            {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.insert(rel, std::fs::read(&path).expect("read artifact"));
            }
        }
    }
    files
}

fn determinism(first: &Path, seed: u64, scratch: &Path) -> Outcome {
    let (_, _) = ablate(seed, scratch);
    let a = artifacts(first);
    let b = artifacts(scratch);
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    let pass = !a.is_empty() && a.len() == b.len() && differing.is_empty() && a.contains_key("results.json");
    outcome(
        pass,
        format!(
            "seed {seed} twice: {} artifacts (results.json, plot CSVs, SVGs) compared, {} differ",
            a.len(),
            differing.len() + a.len().abs_diff(b.len())
        ),
    )
}

fn metrics_oracle() -> Outcome {
    let mut rng = rng_from_seed(1000);
    let mut mismatches = 0usize;
    for _ in 0..1000 {
        let n = rng.gen_range(1..80);
        let p_true = rng.gen_range(0.0..1.0);
        let p_pred = rng.gen_range(0.0..1.0);
        let truth: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(p_true))).collect();
        let predicted: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(p_pred))).collect();
        let (mut tp, mut fp, mut fn_) = (0u32, 0u32, 0u32);
        for i in 0..n {
            match (truth[i], predicted[i]) {
                (1, 1) => tp += 1,
                (0, 1) => fp += 1,
                (1, 0) => fn_ += 1,
                _ => {}
            }
        }
        let precision = if tp + fp == 0 { 0.0 } else { f64::from(tp) / f64::from(tp + fp) };
        let recall = if tp + fn_ == 0 { 0.0 } else { f64::from(tp) / f64::from(tp + fn_) };
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        let counts_f1 = if tp == 0 { 0.0 } else { f64::from(2 * tp) / f64::from(2 * tp + fp + fn_) };
        let s = precision_recall_f1(&truth, &predicted).expect("scores");
        if s.precision != precision || s.recall != recall || s.f1 != f1 || (s.f1 - counts_f1).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches against brute-force confusion counts over 1000 label vectors"))
}

fn main() -> ExitCode {
    let scratch = tempfile::tempdir().expect("tempdir");
    let mut results: Vec<(&str, Outcome)> = vec![
        ("similarity calibration", similarity_calibration()),
        ("LIF analytic oracle", lif_oracle()),
        ("gradient suite", gradient_suite()),
        ("BEL convergence oracle", bel_convergence()),
    ];

    let mut runs = Vec::new();
    for seed in SEEDS {
        let (elapsed, run) = ablate(seed, &scratch.path().join(format!("seed{seed}")));
        let pick = |v: Variant| run.report(v).expect("variant report");
        let vs = [Variant::AvfBel, Variant::ABel, Variant::MBel];
        runs.push(SeedRun {
            seed,
            elapsed,
            similarity: vs.map(|v| pick(v).similarity),
            f1: vs.map(|v| pick(v).f1),
        });
    }
    results.push(("ablation ordering", ablation_ordering(&runs)));
    results.push(("EPP properties", epp_properties()));
    results.push((
        "determinism",
        determinism(&scratch.path().join("seed1"), 1, &scratch.path().join("seed1-again")),
    ));
    results.push(("metrics oracle", metrics_oracle()));

    let mut all = true;
    for (name, o) in &results {
        all &= o.pass;
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!(
        "acceptance: {}/{} criteria passed",
        results.iter().filter(|(_, o)| o.pass).count(),
        results.len()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
