//! End-to-end orchestration of the ablation variants: data preparation,
//! encoder training, BEL training, evaluation and persistence.
//!
//! Every variant regresses onto dataset-wide normalized EPP: the music
//! member's for BEL-m and M-BEL, the animation member's for BEL-a and
//! A-BEL, and the fused pair target for AVF-BEL. BEL inputs are z-scored
//! with training-split statistics, each sequence is front-padded with
//! `window - 1` zero vectors so every sample gets a context, and contexts
//! are mapped into (0, 1) before entering the BEL.
//!
//! The trainable encoders run in [`EncoderScalar`] (`f32`), which roughly
//! halves the cost of the convolution stack; everything downstream is `f64`.

mod config;
mod plot;
mod variant;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::RunConfig;
pub use plot::{render_plots, svg_heatmap, svg_scatter};
pub use variant::Variant;

use crate::auditory_cortex::{self, SpikeRecord};
use crate::bel::{self, BelTrace, BelWeights};
use crate::checkpoint::Checkpoint;
use crate::dataset::{self, normalize_epp, PairedDataset};
use crate::error::{Error, Result};
use crate::fusion::{self, Dense, FusionExample, FusionWeights, TrainReport};
use crate::metrics::{EvalReport, SampleResult};
use crate::rng::{derive_seed, rng_from_seed};
use crate::visual_cortex::{self, VisualWeights};

/// Precision of the visual cortex and fusion weights.
pub type EncoderScalar = f32;
type E = EncoderScalar;

fn to_enc(v: &[f64]) -> Vec<E> {
    v.iter().map(|&x| x as E).collect()
}

fn to_f64(v: &[E]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

/// One stimulus pair with its normalized targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub id: String,
    pub music_id: String,
    pub animation: [f64; 5],
    pub music: [f64; 5],
    pub re_animation: f64,
    pub re_music: f64,
    pub re_fused: f64,
}

impl Item {
    pub fn target(&self, variant: Variant) -> f64 {
        match variant {
            Variant::BelM | Variant::MBel => self.re_music,
            Variant::BelA | Variant::ABel => self.re_animation,
            Variant::AvfBel => self.re_fused,
        }
    }
}

/// Train/test items plus their auditory encodings (when needed).
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Vec<Item>,
    pub test: Vec<Item>,
    pub train_codes: Option<Vec<Vec<f64>>>,
    pub test_codes: Option<Vec<Vec<f64>>>,
}

pub fn load_dataset(config: &RunConfig) -> Result<PairedDataset> {
    match &config.data {
        Some(dir) => dataset::load_dir(Path::new(dir), config.animation_share),
        None => dataset::generate_synthetic(&config.synthetic_config()),
    }
}

/// Auditory encoding `X_m` of each item's music features.
pub fn auditory_codes(config: &RunConfig, items: &[Item]) -> Result<Vec<Vec<f64>>> {
    let aud = config.auditory_config();
    items
        .iter()
        .map(|it| auditory_cortex::encode(&it.music, &aud, config.auditory_seed(&it.music_id)))
        .collect()
}

/// Normalizes targets over the whole dataset, splits, and runs the auditory
/// simulator if any of `variants` needs it.
pub fn prepare(config: &RunConfig, data: &PairedDataset, variants: &[Variant]) -> Result<Prepared> {
    if data.len() < 2 {
        return Err(Error::Empty("dataset needs at least two pairs to split".into()));
    }
    let column = |f: &dyn Fn(&dataset::Pair) -> f64| normalize_epp(&data.pairs.iter().map(f).collect::<Vec<_>>());
    let re_a = column(&|p| p.animation.epp_target);
    let re_m = column(&|p| p.music.epp_target);
    let re_f = column(&|p| p.epp_target);
    let targets: HashMap<&str, (f64, f64, f64)> = data
        .pairs
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.as_str(), (re_a[i], re_m[i], re_f[i])))
        .collect();
    let (train, test) = dataset::split(data, config.train_fraction, config.split_seed())?;
    let items = |ds: &PairedDataset| -> Vec<Item> {
        ds.pairs
            .iter()
            .map(|p| {
                let (a, m, f) = targets[p.id.as_str()];
                Item {
                    id: p.id.clone(),
                    music_id: p.music.id.clone(),
                    animation: p.animation.features,
                    music: p.music.features,
                    re_animation: a,
                    re_music: m,
                    re_fused: f,
                }
            })
            .collect()
    };
    let (train, test) = (items(&train), items(&test));
    let (train_codes, test_codes) = if variants.iter().any(|v| v.uses_auditory()) {
        (Some(auditory_codes(config, &train)?), Some(auditory_codes(config, &test)?))
    } else {
        (None, None)
    };
    Ok(Prepared {
        train,
        test,
        train_codes,
        test_codes,
    })
}

/// Everything needed to turn an item into a generated EPP.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub variant: Variant,
    pub visual: Option<VisualWeights<E>>,
    /// Linear readout used to train the visual stack for A-BEL.
    pub readout: Option<Dense<E>>,
    pub fusion: Option<FusionWeights<E>>,
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub bel: BelWeights<f64>,
    pub re_min: f64,
    pub re_max: f64,
}

impl TrainedModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new(self.variant.name());
        if let Some(v) = &self.visual {
            ck.push_group("visual", v);
        }
        if let Some(r) = &self.readout {
            ck.push_group("readout", r);
        }
        if let Some(f) = &self.fusion {
            ck.push_group("fusion", f);
        }
        ck.push_vec("input.mean", &self.input_mean);
        ck.push_vec("input.std", &self.input_std);
        ck.push_vec("bel.v", &self.bel.v);
        ck.push_vec("bel.u", &self.bel.u);
        ck.push_vec("bel.gamma", &[self.bel.gamma]);
        ck.push("bel.r", &self.bel.r);
        ck.push_vec("target.range", &[self.re_min, self.re_max]);
        ck
    }

    /// Rebuilds a model; shapes come from `config` and must match.
    pub fn from_checkpoint(ck: &Checkpoint, config: &RunConfig) -> Result<Self> {
        let variant: Variant = ck.label.parse()?;
        let mut visual = None;
        let mut readout = None;
        let mut fusion_w = None;
        if variant.uses_visual() {
            let mut v = visual_cortex::init(&config.visual_config())?;
            ck.load_group("visual", &mut v)?;
            visual = Some(v);
        }
        if variant == Variant::ABel {
            let mut r = Dense::zeros(1, config.visual_output_dim);
            ck.load_group("readout", &mut r)?;
            readout = Some(r);
        }
        if variant.uses_fusion() {
            let mut f = fusion::init(&config.fusion_config())?;
            ck.load_group("fusion", &mut f)?;
            fusion_w = Some(f);
        }
        let input_mean: Vec<f64> = ck.get_vec("input.mean")?;
        let input_std: Vec<f64> = ck.get_vec("input.std")?;
        let d = input_mean.len();
        let mut bel = BelWeights::new(d, &config.bel_config(variant))?;
        let (v, u, r) = (ck.get_vec("bel.v")?, ck.get_vec("bel.u")?, ck.get_tensor("bel.r")?);
        if v.len() != d + 1 || u.len() != d || input_std.len() != d || r.shape() != bel.r.shape() {
            return Err(Error::Checkpoint("BEL tensor shapes disagree with the input dimension".into()));
        }
        bel.v = v;
        bel.u = u;
        bel.gamma = *ck.get_vec::<f64>("bel.gamma")?.first().unwrap_or(&bel.gamma);
        bel.r = r;
        let range: Vec<f64> = ck.get_vec("target.range")?;
        if range.len() != 2 {
            return Err(Error::Checkpoint("target.range must hold two values".into()));
        }
        Ok(Self {
            variant,
            visual,
            readout,
            fusion: fusion_w,
            input_mean,
            input_std,
            bel,
            re_min: range[0],
            re_max: range[1],
        })
    }
}

const VISUAL_CHUNK: usize = 64;

fn animation_features(it: &Item) -> [E; 5] {
    it.animation.map(|v| v as E)
}

fn visual_outputs(items: &[Item], plane_size: usize, w: &VisualWeights<E>) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(items.len());
    for chunk in items.chunks(VISUAL_CHUNK) {
        let feats: Vec<[E; 5]> = chunk.iter().map(animation_features).collect();
        let cache = visual_cortex::forward_batch(&visual_cortex::lift_batch(&feats, plane_size)?, w)?;
        out.extend(cache.outputs.iter().map(|o| to_f64(o)));
    }
    Ok(out)
}

fn fusion_examples(items: &[Item], codes: &[Vec<f64>]) -> Vec<FusionExample<E>> {
    items
        .iter()
        .zip(codes)
        .map(|(it, x_m)| FusionExample {
            animation_features: animation_features(it),
            x_m: to_enc(x_m),
            target: it.re_fused as E,
        })
        .collect()
}

fn need_codes(codes: Option<&Vec<Vec<f64>>>) -> Result<&[Vec<f64>]> {
    codes
        .map(Vec::as_slice)
        .ok_or_else(|| Error::Contract("auditory encodings were not prepared".into()))
}

/// Pre-BEL feature vectors for `items`.
fn encoder_outputs(
    model: &TrainedModel,
    config: &RunConfig,
    items: &[Item],
    codes: Option<&Vec<Vec<f64>>>,
) -> Result<Vec<Vec<f64>>> {
    let missing = |what: &str| Error::Contract(format!("{} model lacks its {what}", model.variant));
    Ok(match model.variant {
        Variant::BelM => items.iter().map(|it| it.music.to_vec()).collect(),
        Variant::BelA => items.iter().map(|it| it.animation.to_vec()).collect(),
        Variant::MBel => need_codes(codes)?.to_vec(),
        Variant::ABel => {
            let v = model.visual.as_ref().ok_or_else(|| missing("visual cortex"))?;
            visual_outputs(items, config.plane_size, v)?
        }
        Variant::AvfBel => {
            let v = model.visual.as_ref().ok_or_else(|| missing("visual cortex"))?;
            let f = model.fusion.as_ref().ok_or_else(|| missing("fusion weights"))?;
            let ex = fusion_examples(items, need_codes(codes)?);
            fusion::encode(&ex, config.plane_size, v, f)?
                .into_iter()
                .map(|o| to_f64(&o.x_am))
                .collect()
        }
    })
}

/// Per-dimension mean and standard deviation (1 where the spread vanishes).
pub fn standardization(inputs: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = inputs.first().ok_or_else(|| Error::Empty("BEL inputs".into()))?;
    let (n, d) = (inputs.len() as f64, first.len());
    let mut mean = vec![0.0; d];
    for x in inputs {
        mean.iter_mut().zip(x).for_each(|(m, v)| *m += v / n);
    }
    let mut var = vec![0.0; d];
    for x in inputs {
        var.iter_mut().zip(x.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m).powi(2) / n);
    }
    let std = var.into_iter().map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 }).collect();
    Ok((mean, std))
}

fn standardize(inputs: &[Vec<f64>], mean: &[f64], std: &[f64]) -> Vec<Vec<f64>> {
    inputs
        .iter()
        .map(|x| x.iter().zip(mean.iter().zip(std)).map(|(v, (m, s))| (v - m) / s).collect())
        .collect()
}

/// Sensory input for every element of `inputs`: the context of the element
/// and up to `window - 1` predecessors (zeros before the start), mapped
/// into (0, 1).
pub fn contexts(inputs: &[Vec<f64>], w: &BelWeights<f64>) -> Result<Vec<Vec<f64>>> {
    let d = w.input_dim();
    let mut seq = vec![vec![0.0; d]; w.window.saturating_sub(1)];
    seq.extend(inputs.iter().cloned());
    bel::build_windows(&seq, w.window)?
        .into_iter()
        .map(|win| bel::contextualize(win, &w.r).map(|h| bel::sensory_input(&h)))
        .collect()
}

/// Generated EPP for `items` and the resulting report.
pub fn evaluate(
    model: &TrainedModel,
    config: &RunConfig,
    items: &[Item],
    codes: Option<&Vec<Vec<f64>>>,
) -> Result<EvalReport> {
    let raw = encoder_outputs(model, config, items, codes)?;
    let ctx = contexts(&standardize(&raw, &model.input_mean, &model.input_std), &model.bel)?;
    let bel_cfg = config.bel_config(model.variant);
    let e = bel::predict(&ctx, &model.bel, bel_cfg.thalamic_amplitude, bel_cfg.seed)?;
    let samples = items
        .iter()
        .zip(e)
        .map(|(it, e)| SampleResult {
            id: it.id.clone(),
            epp_true: it.target(model.variant),
            epp_gen: bel::normalize_output(e, model.re_min, model.re_max),
        })
        .collect();
    EvalReport::evaluate(model.variant.name(), samples, config.threshold)
}

/// Artifacts of one trained and evaluated variant.
#[derive(Debug, Clone)]
pub struct VariantRun {
    pub report: EvalReport,
    pub model: TrainedModel,
    pub trace: BelTrace,
    /// Encoder training history, for variants that train one.
    pub loss: Option<TrainReport>,
}

/// Trains `variant` on the training split and evaluates it on the test split.
pub fn train_variant(variant: Variant, config: &RunConfig, data: &Prepared) -> Result<VariantRun> {
    train_variant_inner(variant, config, data).map_err(|e| Error::Variant {
        variant: variant.name().to_string(),
        source: Box::new(e),
    })
}

fn train_variant_inner(variant: Variant, config: &RunConfig, data: &Prepared) -> Result<VariantRun> {
    let targets: Vec<f64> = data.train.iter().map(|it| it.target(variant)).collect();
    let bel_cfg = config.bel_config(variant);
    let mut model = TrainedModel {
        variant,
        visual: None,
        readout: None,
        fusion: None,
        input_mean: Vec::new(),
        input_std: Vec::new(),
        bel: BelWeights::new(1, &bel_cfg)?,
        re_min: 0.0,
        re_max: 1.0,
    };
    let mut loss = None;
    match variant {
        Variant::ABel => {
            let mut vis = visual_cortex::init(&config.visual_config())?;
            let mut rng = rng_from_seed(derive_seed(config.seed, "readout"));
            let mut head = Dense::xavier(1, config.visual_output_dim, &mut rng)?;
            let feats: Vec<[E; 5]> = data.train.iter().map(animation_features).collect();
            let tc = config.train_config(variant.tag());
            let t = to_enc(&targets);
            loss = Some(visual_cortex::train_readout(&feats, &t, config.plane_size, &mut vis, &mut head, &tc)?);
            model.visual = Some(vis);
            model.readout = Some(head);
        }
        Variant::AvfBel => {
            let mut vis = visual_cortex::init(&config.visual_config())?;
            let mut fus = fusion::init(&config.fusion_config())?;
            let ex = fusion_examples(&data.train, need_codes(data.train_codes.as_ref())?);
            let tc = config.train_config(variant.tag());
            loss = Some(fusion::train(&ex, config.plane_size, &mut vis, &mut fus, &tc)?);
            model.visual = Some(vis);
            model.fusion = Some(fus);
        }
        _ => {}
    }
    let raw = encoder_outputs(&model, config, &data.train, data.train_codes.as_ref())?;
    let (mean, std) = standardization(&raw)?;
    let mut w = BelWeights::new(mean.len(), &bel_cfg)?;
    let ctx = contexts(&standardize(&raw, &mean, &std), &w)?;
    let trace = bel::train(&ctx, &targets, &mut w, &bel_cfg)?;
    model.input_mean = mean;
    model.input_std = std;
    model.bel = w;
    model.re_min = targets.iter().copied().fold(f64::INFINITY, f64::min);
    model.re_max = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let report = evaluate(&model, config, &data.test, data.test_codes.as_ref())?;
    Ok(VariantRun {
        report,
        model,
        trace,
        loss,
    })
}

/// Results of one or more variants trained under one configuration.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: RunConfig,
    pub runs: Vec<VariantRun>,
    /// Auditory response to the first test pair's music, for the raster plot.
    pub raster: Option<SpikeRecord<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub similarity: f64,
}

#[derive(Serialize)]
struct Results<'a> {
    seed: u64,
    variants: Vec<&'a EvalReport>,
}

fn run_variants(variants: &[Variant], config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let data = load_dataset(config)?;
    let prepared = prepare(config, &data, variants)?;
    let runs = variants
        .iter()
        .map(|&v| train_variant(v, config, &prepared))
        .collect::<Result<Vec<_>>>()?;
    let raster = match prepared.test.first() {
        Some(it) if variants.iter().any(|v| v.uses_auditory()) => {
            let aud = config.auditory_config();
            let currents = auditory_cortex::map_currents(&it.music, &aud)?;
            Some(auditory_cortex::simulate(currents, &aud, config.auditory_seed(&it.music_id))?)
        }
        _ => None,
    };
    Ok(RunOutput {
        config: config.clone(),
        runs,
        raster,
    })
}

/// Runs a single configured variant.
pub fn run_variant(variant: Variant, config: &RunConfig) -> Result<RunOutput> {
    config.require_variant(variant)?;
    run_variants(&[variant], config)
}

/// Runs every configured variant, in configuration order.
pub fn run_all(config: &RunConfig) -> Result<RunOutput> {
    run_variants(&config.selected_variants()?, config)
}

/// Reloads a saved variant from `out` and evaluates it on the test split.
pub fn evaluate_saved(variant: Variant, config: &RunConfig, out: &Path) -> Result<EvalReport> {
    config.validate()?;
    let ck = Checkpoint::load(&out.join(variant.tag()).join("checkpoint.json"))?;
    if ck.label != variant.name() {
        return Err(Error::Checkpoint(format!("checkpoint holds {}, not {variant}", ck.label)));
    }
    let model = TrainedModel::from_checkpoint(&ck, config)?;
    let data = load_dataset(config)?;
    let prepared = prepare(config, &data, &[variant])?;
    evaluate(&model, config, &prepared.test, prepared.test_codes.as_ref())
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

impl RunOutput {
    pub fn table(&self) -> Vec<AblationRow> {
        self.runs
            .iter()
            .map(|r| AblationRow {
                variant: r.report.variant.clone(),
                precision: r.report.precision,
                recall: r.report.recall,
                f1: r.report.f1,
                similarity: r.report.similarity,
            })
            .collect()
    }

    pub fn report(&self, variant: Variant) -> Option<&EvalReport> {
        self.runs.iter().find(|r| r.model.variant == variant).map(|r| &r.report)
    }

    pub fn results_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&Results {
            seed: self.config.seed,
            variants: self.runs.iter().map(|r| &r.report).collect(),
        })?)
    }

    /// Writes the configuration snapshot, per-variant reports, checkpoints
    /// and traces, the comparative table, and the plot data under `out`.
    pub fn write(&self, out: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        write(&out.join("config.toml"), &self.config.to_toml()?)?;
        for run in &self.runs {
            let dir = out.join(run.model.variant.tag());
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            write(&dir.join("report.json"), &run.report.to_json()?)?;
            run.model.to_checkpoint().save(&dir.join("checkpoint.json"))?;
            write(&dir.join("bel_trace.csv"), &run.trace.csv())?;
            if let Some(l) = &run.loss {
                write(&dir.join("loss_history.csv"), &l.history_csv())?;
            }
        }
        write(&out.join("results.json"), &self.results_json()?)?;
        let rows = self.table();
        write(&out.join("ablation.csv"), &ablation_csv(&rows))?;
        write(&out.join("ablation.txt"), &ablation_text(&rows))?;
        self.emit_plot_data(out)
    }

    /// Raster, EPP comparison, heatmap and loss CSVs plus their SVG
    /// renderings under `out/plots`.
    pub fn emit_plot_data(&self, out: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        if let Some(r) = &self.raster {
            write(&out.join("spike_raster.csv"), &auditory_cortex::raster_csv(r))?;
        }
        for run in &self.runs {
            let tag = run.model.variant.tag();
            write(&out.join(format!("epp_comparison_{tag}.csv")), &run.report.comparison_csv())?;
            write(&out.join(format!("heatmap_{tag}.csv")), &bel::heatmap_csv(&run.model.bel))?;
            if run.model.variant == Variant::AvfBel {
                if let Some(l) = &run.loss {
                    write(&out.join("loss_history.csv"), &l.history_csv())?;
                }
            }
        }
        render_plots(out)
    }
}

pub const TABLE_COLUMNS: [&str; 4] = ["Precision", "Recall", "F1-score", "Average similarity"];

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = format!("variant,{}\n", TABLE_COLUMNS.join(","));
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.variant, r.precision, r.recall, r.f1, r.similarity);
    }
    s
}

pub fn ablation_text(rows: &[AblationRow]) -> String {
    let mut s = format!(
        "{:<8}  {:>9}  {:>9}  {:>9}  {:>18}\n",
        "Variant", TABLE_COLUMNS[0], TABLE_COLUMNS[1], TABLE_COLUMNS[2], TABLE_COLUMNS[3]
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<8}  {:>9.4}  {:>9.4}  {:>9.4}  {:>17.2}%",
            r.variant, r.precision, r.recall, r.f1, r.similarity
        );
    }
    s
}
