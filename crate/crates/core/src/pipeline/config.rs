//! Flat `key = value` run configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::auditory_cortex::AuditoryConfig;
use crate::bel::{BelConfig, InhibitoryRule};
use crate::dataset::SyntheticConfig;
use crate::error::{Error, Result};
use crate::fusion::{FusionConfig, TrainConfig};
use crate::pipeline::Variant;
use crate::rng::derive_seed;
use crate::visual_cortex::VisualConfig;

/// Every knob of a run. Unknown keys are rejected; missing keys take the
/// defaults below. Module seeds are derived from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Directory holding `samples.csv` and `pairs.csv`; synthetic data when unset.
    pub data: Option<String>,
    /// Synthetic generator seed; the master seed when unset.
    pub synthetic_seed: Option<u64>,
    pub synthetic_n: usize,
    pub synthetic_noise: f64,
    pub animation_view_noise: f64,
    pub music_view_noise: f64,
    pub animation_share: f64,
    pub train_fraction: f64,
    pub variants: Vec<String>,
    pub threshold: f64,

    pub plane_size: usize,
    pub visual_output_dim: usize,

    pub auditory_gain: f64,
    pub auditory_duration_ms: f64,
    pub auditory_dt_ms: f64,
    pub auditory_jitter: f64,
    pub rate_cap_hz: f64,

    pub fusion_hidden_dim: usize,
    pub fusion_fused_dim: usize,

    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub log_interval: usize,

    pub bel_alpha: f64,
    pub bel_beta: f64,
    pub bel_epochs: usize,
    pub bel_tolerance: f64,
    pub thalamic_amplitude: f64,
    pub bel_gamma: f64,
    pub bel_window: usize,
    pub bel_input_scale: f64,
    pub bel_recurrent_scale: f64,
    pub bel_rule: InhibitoryRule,
}

impl Default for RunConfig {
    fn default() -> Self {
        let syn = SyntheticConfig::default();
        let vis = VisualConfig::default();
        let aud = AuditoryConfig::default();
        let fus = FusionConfig::default();
        let tr = TrainConfig::default();
        let bel = BelConfig::default();
        Self {
            seed: syn.seed,
            data: None,
            synthetic_seed: None,
            synthetic_n: syn.n_per_modality,
            synthetic_noise: syn.noise,
            animation_view_noise: syn.animation_view_noise,
            music_view_noise: syn.music_view_noise,
            animation_share: syn.animation_share,
            train_fraction: 0.8,
            variants: Variant::ALL.iter().map(|v| v.name().to_string()).collect(),
            threshold: crate::metrics::DEFAULT_THRESHOLD,
            plane_size: vis.plane_size,
            visual_output_dim: vis.output_dim,
            auditory_gain: aud.gain,
            auditory_duration_ms: aud.duration_ms,
            auditory_dt_ms: aud.dt_ms,
            auditory_jitter: aud.jitter,
            rate_cap_hz: aud.rate_cap_hz,
            fusion_hidden_dim: fus.hidden_dim,
            fusion_fused_dim: fus.fused_dim,
            epochs: tr.epochs,
            batch_size: tr.batch_size,
            learning_rate: tr.learning_rate,
            weight_decay: tr.weight_decay,
            dropout: tr.dropout,
            log_interval: tr.log_interval,
            bel_alpha: bel.alpha,
            bel_beta: bel.beta,
            bel_epochs: bel.epochs,
            bel_tolerance: bel.tolerance,
            thalamic_amplitude: bel.thalamic_amplitude,
            bel_gamma: bel.gamma,
            bel_window: bel.window,
            bel_input_scale: bel.input_scale,
            bel_recurrent_scale: bel.recurrent_scale,
            bel_rule: bel.rule,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses `variants`, naming the first unknown entry.
    pub fn selected_variants(&self) -> Result<Vec<Variant>> {
        if self.variants.is_empty() {
            return Err(Error::Config("no variants selected".into()));
        }
        self.variants.iter().map(|v| v.parse()).collect()
    }

    /// Fails unless `variant` is among the configured variants.
    pub fn require_variant(&self, variant: Variant) -> Result<()> {
        if self.selected_variants()?.contains(&variant) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "variant {} is not listed in the configuration (have: {})",
                variant.name(),
                self.variants.join(", ")
            )))
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.selected_variants()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train_fraction {} not in (0, 1)", self.train_fraction)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold {} not in [0, 1]", self.threshold)));
        }
        if !(0.0..=1.0).contains(&self.animation_share) {
            return Err(Error::Config(format!("animation_share {} not in [0, 1]", self.animation_share)));
        }
        self.visual_config().validate()?;
        self.auditory_config().validate()?;
        self.train_config("validate").validate()?;
        self.bel_config(Variant::AvfBel).validate()
    }

    pub fn synthetic_config(&self) -> SyntheticConfig {
        SyntheticConfig {
            n_per_modality: self.synthetic_n,
            seed: self.synthetic_seed.unwrap_or(self.seed),
            noise: self.synthetic_noise,
            animation_view_noise: self.animation_view_noise,
            music_view_noise: self.music_view_noise,
            animation_share: self.animation_share,
        }
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.seed, "split")
    }

    pub fn visual_config(&self) -> VisualConfig {
        VisualConfig {
            plane_size: self.plane_size,
            output_dim: self.visual_output_dim,
            seed: derive_seed(self.seed, "visual"),
            ..VisualConfig::default()
        }
    }

    pub fn auditory_config(&self) -> AuditoryConfig {
        AuditoryConfig {
            gain: self.auditory_gain,
            duration_ms: self.auditory_duration_ms,
            dt_ms: self.auditory_dt_ms,
            jitter: self.auditory_jitter,
            rate_cap_hz: self.rate_cap_hz,
            ..AuditoryConfig::default()
        }
    }

    pub fn auditory_seed(&self, sample_id: &str) -> u64 {
        derive_seed(self.seed, &format!("auditory/{sample_id}"))
    }

    pub fn fusion_config(&self) -> FusionConfig {
        FusionConfig {
            visual_dim: self.visual_output_dim,
            audio_dim: 3,
            hidden_dim: self.fusion_hidden_dim,
            fused_dim: self.fusion_fused_dim,
            seed: derive_seed(self.seed, "fusion"),
        }
    }

    pub fn train_config(&self, label: &str) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            dropout: self.dropout,
            log_interval: self.log_interval,
            seed: derive_seed(self.seed, &format!("train/{label}")),
        }
    }

    pub fn bel_config(&self, variant: Variant) -> BelConfig {
        BelConfig {
            alpha: self.bel_alpha,
            beta: self.bel_beta,
            epochs: self.bel_epochs,
            tolerance: self.bel_tolerance,
            thalamic_amplitude: self.thalamic_amplitude,
            gamma: self.bel_gamma,
            window: self.bel_window,
            input_scale: self.bel_input_scale,
            recurrent_scale: self.bel_recurrent_scale,
            rule: self.bel_rule,
            learn_inhibitory: true,
            seed: derive_seed(self.seed, &format!("bel/{}", variant.tag())),
        }
    }
}
