//! Three uncoupled leaky integrate-and-fire populations (PYR, PV, SOM).
//!
//! Acoustic features set one input current per population; each neuron
//! integrates `dv/dt = (I - v) / tau` with the exact exponential step
//! `v <- I + (v - I) exp(-dt / tau)`, spikes when `v > threshold` and resets.
//! The population firing rates, scaled by a rate cap, form `X_m`.

use std::fmt;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Population {
    #[serde(rename = "PYR")]
    Pyr,
    #[serde(rename = "PV")]
    Pv,
    #[serde(rename = "SOM")]
    Som,
}

impl fmt::Display for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Population::Pyr => "PYR",
            Population::Pv => "PV",
            Population::Som => "SOM",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub population: Population,
    pub size: usize,
    pub tau_ms: f64,
    pub threshold: f64,
    pub reset: f64,
    /// Drive at the neutral feature point (all features 0.5), in volts.
    pub baseline_current: f64,
    /// Feature weights of the current map.
    pub feature_weights: [f64; 5],
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > self.reset) {
            return Err(Error::Config(format!("{}: threshold must exceed reset", self.population)));
        }
        if !(self.tau_ms > 0.0) || self.size == 0 {
            return Err(Error::Config(format!("{}: tau and size must be positive", self.population)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditoryConfig {
    pub populations: [PopulationSpec; 3],
    pub gain: f64,
    pub duration_ms: f64,
    pub dt_ms: f64,
    /// Half-width of the uniform per-neuron current offset; 0 disables it.
    pub jitter: f64,
    pub rate_cap_hz: f64,
}

impl Default for AuditoryConfig {
    fn default() -> Self {
        let pop = |population, size, baseline_current, feature_weights| PopulationSpec {
            population,
            size,
            tau_ms: 10.0,
            threshold: 0.5,
            reset: 0.0,
            baseline_current,
            feature_weights,
        };
        Self {
            populations: [
                pop(Population::Pyr, 400, 0.6, [0.3, 0.1, 0.3, 0.2, 0.1]),
                pop(Population::Pv, 200, 0.6, [0.2, 0.2, 0.2, 0.2, 0.2]),
                pop(Population::Som, 200, 0.65, [0.1, 0.3, 0.1, 0.2, 0.3]),
            ],
            gain: 0.2,
            duration_ms: 1000.0,
            dt_ms: 0.1,
            jitter: 0.01,
            rate_cap_hz: 100.0,
        }
    }
}

impl AuditoryConfig {
    pub fn validate(&self) -> Result<()> {
        for p in &self.populations {
            p.validate()?;
            if !(self.dt_ms > 0.0) || self.dt_ms > p.tau_ms / 10.0 {
                return Err(Error::Contract(format!(
                    "dt {} ms too coarse for {} (tau {} ms, need dt <= tau/10)",
                    self.dt_ms, p.population, p.tau_ms
                )));
            }
        }
        if !(self.duration_ms > 0.0) {
            return Err(Error::Contract("simulation duration must be positive".into()));
        }
        if !(self.rate_cap_hz > 0.0) || !(self.jitter >= 0.0) {
            return Err(Error::Config("rate cap must be positive and jitter non-negative".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration_ms / self.dt_ms).round() as usize
    }
}

/// Centered affine feature-to-current map:
/// `I = baseline + gain (w · f - 0.5 Σ w)`.
pub fn map_currents<T: Scalar>(features: &[T], config: &AuditoryConfig) -> Result<[T; 3]> {
    if features.len() != 5 {
        return Err(Error::dim("map_currents", format!("expected 5 features, got {}", features.len())));
    }
    if let Some(f) = features.iter().find(|f| !(**f >= T::zero() && **f <= T::one())) {
        return Err(Error::Domain(format!("auditory feature {f} outside [0, 1]")));
    }
    let half = T::of(0.5);
    Ok(std::array::from_fn(|i| {
        let p = &config.populations[i];
        let w = p.feature_weights.map(T::of);
        let drive: T = w.iter().zip(features).map(|(&w, &f)| w * (f - half)).sum();
        T::of(p.baseline_current) + T::of(config.gain) * drive
    }))
}

/// A single LIF unit under constant drive.
#[derive(Debug, Clone, Copy)]
pub struct LifNeuron<T> {
    v: T,
    current: T,
    decay: T,
    threshold: T,
    reset: T,
}

impl<T: Scalar> LifNeuron<T> {
    pub fn new(current: T, tau_ms: T, dt_ms: T, threshold: T, reset: T) -> Self {
        Self {
            v: T::zero(),
            current,
            decay: (-dt_ms / tau_ms).exp(),
            threshold,
            reset,
        }
    }

    pub fn potential(&self) -> T {
        self.v
    }

    /// Advances one step; returns true when the neuron fired (and was reset).
    #[inline]
    pub fn step(&mut self) -> bool {
        self.v = self.current + (self.v - self.current) * self.decay;
        if self.v > self.threshold {
            self.v = self.reset;
            true
        } else {
            false
        }
    }

    /// Step indices (1-based) at which the neuron fires within `steps`.
    ///
    /// Every spike leaves the neuron in the same state, so after the first
    /// inter-spike gap the train is periodic and the remaining spikes are
    /// filled in without stepping. A neuron rising toward a sub-threshold
    /// current never fires. The result equals stepping one by one.
    pub fn spike_steps(mut self, steps: usize) -> Vec<usize> {
        let mut out = Vec::new();
        // rising toward a sub-threshold current: v never exceeds the current
        if self.v <= self.current && self.current <= self.threshold {
            return out;
        }
        let mut k = 0;
        while k < steps {
            k += 1;
            if self.step() {
                out.push(k);
                if out.len() == 2 {
                    let period = out[1] - out[0];
                    let mut next = out[1] + period;
                    while next <= steps {
                        out.push(next);
                        next += period;
                    }
                    return out;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpikes<T> {
    pub population: Population,
    /// Sorted spike times in ms, one list per neuron.
    pub spike_times: Vec<Vec<T>>,
    pub count: usize,
}

impl<T: Scalar> PopulationSpikes<T> {
    pub fn size(&self) -> usize {
        self.spike_times.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecord<T> {
    pub populations: Vec<PopulationSpikes<T>>,
    pub duration_ms: T,
    pub dt_ms: T,
}

/// Runs the three populations for `config.duration_ms` from `v = 0`.
///
/// `seed` drives the per-neuron current jitter only.
pub fn simulate<T: Scalar>(currents: [T; 3], config: &AuditoryConfig, seed: u64) -> Result<SpikeRecord<T>> {
    config.validate()?;
    if currents.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("input current".into()));
    }
    let steps = config.steps();
    let dt = T::of(config.dt_ms);
    let jitter = config.jitter;
    let mut populations = Vec::with_capacity(3);
    for (pop, &current) in config.populations.iter().zip(&currents) {
        let mut rng = rng_from_seed(derive_seed(seed, &format!("lif/{}", pop.population)));
        let mut spike_times = Vec::with_capacity(pop.size);
        let mut count = 0;
        for _ in 0..pop.size {
            let offset = if jitter > 0.0 {
                T::of(rng.gen_range(-jitter..=jitter))
            } else {
                T::zero()
            };
            let neuron = LifNeuron::new(
                current + offset,
                T::of(pop.tau_ms),
                dt,
                T::of(pop.threshold),
                T::of(pop.reset),
            );
            let times: Vec<T> = neuron
                .spike_steps(steps)
                .into_iter()
                .map(|k| T::from_usize_exact(k) * dt)
                .collect();
            count += times.len();
            spike_times.push(times);
        }
        populations.push(PopulationSpikes {
            population: pop.population,
            spike_times,
            count,
        });
    }
    Ok(SpikeRecord {
        populations,
        duration_ms: T::from_usize_exact(steps) * dt,
        dt_ms: dt,
    })
}

/// Population-mean firing rate (Hz) divided by the cap, clamped to [0, 1].
pub fn extract_features<T: Scalar>(record: &SpikeRecord<T>, rate_cap_hz: f64) -> Vec<T> {
    let seconds = record.duration_ms / T::of(1000.0);
    record
        .populations
        .iter()
        .map(|p| {
            let rate = T::from_usize_exact(p.count) / (T::from_usize_exact(p.size().max(1)) * seconds);
            (rate / T::of(rate_cap_hz)).max(T::zero()).min(T::one())
        })
        .collect()
}

/// Convenience: features -> currents -> simulation -> `X_m`.
pub fn encode<T: Scalar>(features: &[T], config: &AuditoryConfig, seed: u64) -> Result<Vec<T>> {
    let currents = map_currents(features, config)?;
    let record = simulate(currents, config, seed)?;
    Ok(extract_features(&record, config.rate_cap_hz))
}

/// Raster table `population,neuron_index,spike_time_ms`.
pub fn raster_csv<T: Scalar>(record: &SpikeRecord<T>) -> String {
    let mut out = String::from("population,neuron_index,spike_time_ms\n");
    for p in &record.populations {
        for (i, times) in p.spike_times.iter().enumerate() {
            for t in times {
                let _ = writeln!(out, "{},{},{}", p.population, i, t.as_f64());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> AuditoryConfig {
        AuditoryConfig {
            jitter: 0.0,
            ..AuditoryConfig::default()
        }
    }

    fn naive_steps(current: f64, steps: usize) -> Vec<usize> {
        let decay = (-0.1f64 / 10.0).exp();
        let mut v = 0.0;
        let mut out = Vec::new();
        for k in 1..=steps {
            v = current + (v - current) * decay;
            if v > 0.5 {
                v = 0.0;
                out.push(k);
            }
        }
        out
    }

    #[test]
    fn baseline_currents_at_neutral_point() {
        let c = map_currents(&[0.5f64; 5], &AuditoryConfig::default()).unwrap();
        assert_eq!(c, [0.6, 0.6, 0.65]);
    }

    #[test]
    fn currents_at_extremes() {
        let cfg = AuditoryConfig::default();
        let hi = map_currents(&[1.0f64; 5], &cfg).unwrap();
        let lo = map_currents(&[0.0f64; 5], &cfg).unwrap();
        assert!((hi[0] - 0.7).abs() < 1e-12);
        assert!((lo[0] - 0.5).abs() < 1e-12);
        assert!((hi[2] - 0.75).abs() < 1e-12);
        assert!(map_currents(&[1.5f64, 0.0, 0.0, 0.0, 0.0], &cfg).is_err());
    }

    #[test]
    fn subthreshold_is_silent() {
        let r = simulate([0.4f64, 0.4, 0.4], &quiet(), 1).unwrap();
        assert!(r.populations.iter().all(|p| p.count == 0));
        assert_eq!(extract_features(&r, 100.0), vec![0.0; 3]);
    }

    #[test]
    fn closed_form_interval() {
        let r = simulate([0.6f64, 0.6, 0.6], &quiet(), 1).unwrap();
        let train = &r.populations[0].spike_times[0];
        assert_eq!(train.len(), 55);
        let isi = train[1] - train[0];
        assert!((isi - 10.0 * 6f64.ln()).abs() <= 0.1 + 1e-9);
        let x = extract_features(&r, 100.0);
        assert!((x[0] - 0.55).abs() < 1e-12);
    }

    #[test]
    fn shortcut_matches_stepping() {
        for current in [0.5001, 0.55, 0.6, 0.65, 0.7, 0.9, 2.0, 0.4, 0.5, -0.3] {
            let n = LifNeuron::new(current, 10.0, 0.1, 0.5, 0.0);
            assert_eq!(n.spike_steps(10_000), naive_steps(current, 10_000), "I = {current}");
        }
        // non-zero reset: the first gap differs from the rest
        let n = LifNeuron::new(0.6f64, 10.0, 0.1, 0.5, 0.2);
        let mut m = n;
        let stepped: Vec<usize> = (1..=10_000).filter(|_| m.step()).collect();
        assert_eq!(n.spike_steps(10_000), stepped);
    }

    #[test]
    fn reset_to_zero_after_spike() {
        let mut n = LifNeuron::new(0.6f64, 10.0, 0.1, 0.5, 0.0);
        let mut spikes = 0;
        for _ in 0..2000 {
            if n.step() {
                spikes += 1;
                assert_eq!(n.potential(), 0.0);
            }
        }
        assert!(spikes > 0);
    }

    #[test]
    fn no_jitter_means_identical_trains() {
        let r = simulate([0.62f64, 0.6, 0.66], &quiet(), 9).unwrap();
        for p in &r.populations {
            assert!(p.spike_times.windows(2).all(|w| w[0] == w[1]));
        }
        let j = simulate([0.62f64, 0.6, 0.66], &AuditoryConfig::default(), 9).unwrap();
        assert!(j.populations[0].spike_times.windows(2).any(|w| w[0] != w[1]));
        assert_eq!(j, simulate([0.62f64, 0.6, 0.66], &AuditoryConfig::default(), 9).unwrap());
    }

    #[test]
    fn rate_clamped_to_cap() {
        let r = simulate([5.0f64, 5.0, 5.0], &quiet(), 0).unwrap();
        assert_eq!(extract_features(&r, 100.0), vec![1.0; 3]);
    }

    #[test]
    fn coarse_dt_rejected() {
        let cfg = AuditoryConfig {
            dt_ms: 2.0,
            ..AuditoryConfig::default()
        };
        assert!(matches!(simulate([0.6f64; 3], &cfg, 0), Err(Error::Contract(_))));
    }

    #[test]
    fn raster_rows() {
        let cfg = AuditoryConfig {
            populations: {
                let mut p = AuditoryConfig::default().populations;
                p.iter_mut().for_each(|s| s.size = 2);
                p
            },
            jitter: 0.0,
            ..AuditoryConfig::default()
        };
        let r = simulate([0.6f64, 0.4, 0.4], &cfg, 0).unwrap();
        let csv = raster_csv(&r);
        assert_eq!(csv.lines().count(), 1 + 2 * 55);
        assert!(csv.lines().nth(1).unwrap().starts_with("PYR,0,18"));
    }
}
