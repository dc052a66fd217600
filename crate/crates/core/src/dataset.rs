//! Stimulus samples, positivity targets, synthetic generation and splits.
//!
//! Tabular layout (UTF-8, header required):
//!
//! ```text
//! id,modality,f1,f2,f3,f4,f5,fear,sadness,anger,calmness,happiness
//! pair_id,animation_id,music_id
//! ```
//!
//! `f1..f5` are (speed, jitter, consonance, bigsmall, updown) for animation
//! rows and (pitch, tonnetz, volume, tempo, duration) for music rows, each
//! already normalized to [0, 1].

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub const SAMPLE_HEADER: [&str; 12] = [
    "id", "modality", "f1", "f2", "f3", "f4", "f5", "fear", "sadness", "anger", "calmness", "happiness",
];
pub const PAIR_HEADER: [&str; 3] = ["pair_id", "animation_id", "music_id"];

/// Positivity level of (fear, sadness, anger, calmness, happiness), ordered
/// from the most negative to the most positive category.
pub const POSITIVITY: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub const ANIMATION_FEATURES: [&str; 5] = ["speed", "jitter", "consonance", "bigsmall", "updown"];
pub const MUSIC_FEATURES: [&str; 5] = ["pitch", "tonnetz", "volume", "tempo", "duration"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Animation,
    Music,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Animation => "animation",
            Modality::Music => "music",
        })
    }
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "animation" => Ok(Modality::Animation),
            "music" => Ok(Modality::Music),
            other => Err(format!("unknown modality `{other}` (expected animation or music)")),
        }
    }
}

/// One stimulus with its five parameters and five emotion ratings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub modality: Modality,
    pub features: [f64; 5],
    pub ratings: [f64; 5],
    /// Positivity of `ratings`, see [`compute_epp`].
    pub epp_target: f64,
}

impl Sample {
    pub fn new(id: impl Into<String>, modality: Modality, features: [f64; 5], ratings: [f64; 5]) -> Result<Self> {
        for (i, f) in features.iter().enumerate() {
            if !(0.0..=1.0).contains(f) {
                return Err(Error::Domain(format!("feature f{} = {f} outside [0, 1]", i + 1)));
            }
        }
        let epp_target = compute_epp(&ratings)?;
        Ok(Self {
            id: id.into(),
            modality,
            features,
            ratings,
            epp_target,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub id: String,
    pub animation: Sample,
    pub music: Sample,
    /// Blend of the two members' positivity, see [`fuse_epp`].
    pub epp_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDataset {
    pub pairs: Vec<Pair>,
    pub seed: Option<u64>,
    /// File path or `"synthetic"`.
    pub source: String,
    /// Share of the animation member in the fused target.
    pub animation_share: f64,
}

impl PairedDataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sample_count(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn samples(&self) -> Vec<Sample> {
        let mut out: Vec<Sample> = self.pairs.iter().map(|p| p.animation.clone()).collect();
        out.extend(self.pairs.iter().map(|p| p.music.clone()));
        out
    }

    fn with_pairs(&self, pairs: Vec<Pair>) -> Self {
        Self {
            pairs,
            seed: self.seed,
            source: self.source.clone(),
            animation_share: self.animation_share,
        }
    }
}

/// Rank-weighted positivity: `Σ r_i p_i / Σ r_i` with the levels in
/// [`POSITIVITY`].
pub fn compute_epp(ratings: &[f64; 5]) -> Result<f64> {
    if ratings.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::Domain(format!("ratings must be finite and non-negative: {ratings:?}")));
    }
    let total: f64 = ratings.iter().sum();
    if total <= 0.0 {
        return Err(Error::Domain("all-zero ratings have no positivity".into()));
    }
    let weighted: f64 = ratings.iter().zip(POSITIVITY).map(|(r, p)| r * p).sum();
    Ok((weighted / total).clamp(0.0, 1.0))
}

/// Min-max scaling into [0, 1]; a constant sequence maps to 0.5.
pub fn normalize_epp(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
}

pub fn fuse_epp(animation: f64, music: f64, animation_share: f64) -> f64 {
    (animation_share * animation + (1.0 - animation_share) * music).clamp(0.0, 1.0)
}

fn field<'a>(record: &'a csv::StringRecord, idx: usize, name: &str, row: usize) -> Result<&'a str> {
    record.get(idx).ok_or_else(|| Error::Validation {
        row,
        column: name.into(),
        reason: "missing value".into(),
    })
}

fn number(record: &csv::StringRecord, idx: usize, name: &str, row: usize) -> Result<f64> {
    let raw = field(record, idx, name, row)?;
    let v: f64 = raw.trim().parse().map_err(|_| Error::Validation {
        row,
        column: name.into(),
        reason: format!("`{raw}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Validation {
            row,
            column: name.into(),
            reason: "value is not finite".into(),
        });
    }
    Ok(v)
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    for (i, name) in expected.iter().enumerate() {
        match headers.get(i).map(str::trim) {
            Some(h) if h == *name => {}
            Some(h) => {
                return Err(Error::Validation {
                    row: 1,
                    column: (*name).into(),
                    reason: format!("header has `{h}` in position {}", i + 1),
                })
            }
            None => {
                return Err(Error::Validation {
                    row: 1,
                    column: (*name).into(),
                    reason: "missing column".into(),
                })
            }
        }
    }
    Ok(())
}

/// Parses the sample table. Rows are reported by their line number in the
/// text (the header is line 1).
pub fn parse_samples(csv_text: &str) -> Result<Vec<Sample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(Error::Validation {
            row: 1,
            column: "id".into(),
            reason: "missing header".into(),
        });
    }
    check_header(&headers, &SAMPLE_HEADER)?;

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let id = field(&record, 0, "id", row)?.trim().to_string();
        let modality = field(&record, 1, "modality", row)?
            .parse::<Modality>()
            .map_err(|reason| Error::Validation {
                row,
                column: "modality".into(),
                reason,
            })?;
        let mut features = [0.0; 5];
        for (i, f) in features.iter_mut().enumerate() {
            let name = SAMPLE_HEADER[2 + i];
            *f = number(&record, 2 + i, name, row)?;
            if !(0.0..=1.0).contains(f) {
                return Err(Error::Validation {
                    row,
                    column: name.into(),
                    reason: format!("feature {f} outside [0, 1]"),
                });
            }
        }
        let mut ratings = [0.0; 5];
        for (i, r) in ratings.iter_mut().enumerate() {
            let name = SAMPLE_HEADER[7 + i];
            *r = number(&record, 7 + i, name, row)?;
            if *r < 0.0 {
                return Err(Error::Validation {
                    row,
                    column: name.into(),
                    reason: format!("rating {r} is negative"),
                });
            }
        }
        let epp_target = compute_epp(&ratings).map_err(|_| Error::Validation {
            row,
            column: "happiness".into(),
            reason: "all five ratings are zero".into(),
        })?;
        samples.push(Sample {
            id,
            modality,
            features,
            ratings,
            epp_target,
        });
    }
    Ok(samples)
}

pub fn write_samples(samples: &[Sample]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SAMPLE_HEADER)?;
    for s in samples {
        let mut rec = vec![s.id.clone(), s.modality.to_string()];
        rec.extend(s.features.iter().map(f64::to_string));
        rec.extend(s.ratings.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

/// Parses the pairing table into (pair_id, animation_id, music_id).
pub fn parse_pairs(csv_text: &str) -> Result<Vec<(String, String, String)>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(csv_text.as_bytes());
    check_header(&reader.headers()?.clone(), &PAIR_HEADER)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        out.push((
            field(&record, 0, "pair_id", row)?.trim().to_string(),
            field(&record, 1, "animation_id", row)?.trim().to_string(),
            field(&record, 2, "music_id", row)?.trim().to_string(),
        ));
    }
    Ok(out)
}

pub fn write_pairs(dataset: &PairedDataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PAIR_HEADER)?;
    for p in &dataset.pairs {
        w.write_record([&p.id, &p.animation.id, &p.music.id])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

/// Joins samples through a pairing table.
pub fn pair_samples(
    samples: &[Sample],
    pairs: &[(String, String, String)],
    animation_share: f64,
    source: impl Into<String>,
) -> Result<PairedDataset> {
    if !(0.0..=1.0).contains(&animation_share) {
        return Err(Error::Config(format!("animation share {animation_share} outside [0, 1]")));
    }
    let by_id: HashMap<&str, &Sample> = samples.iter().map(|s| (s.id.as_str(), s)).collect();
    let lookup = |id: &str, want: Modality, row: usize, column: &str| -> Result<Sample> {
        let s = by_id.get(id).ok_or_else(|| Error::Validation {
            row,
            column: column.into(),
            reason: format!("unknown sample id `{id}`"),
        })?;
        if s.modality != want {
            return Err(Error::Validation {
                row,
                column: column.into(),
                reason: format!("sample `{id}` is {} but {want} was expected", s.modality),
            });
        }
        Ok((*s).clone())
    };
    let mut out = Vec::with_capacity(pairs.len());
    for (i, (pid, aid, mid)) in pairs.iter().enumerate() {
        let row = i + 2;
        let animation = lookup(aid, Modality::Animation, row, "animation_id")?;
        let music = lookup(mid, Modality::Music, row, "music_id")?;
        let epp_target = fuse_epp(animation.epp_target, music.epp_target, animation_share);
        out.push(Pair {
            id: pid.clone(),
            animation,
            music,
            epp_target,
        });
    }
    Ok(PairedDataset {
        pairs: out,
        seed: None,
        source: source.into(),
        animation_share,
    })
}

/// Loads `samples.csv` and `pairs.csv` from a directory.
pub fn load_dir(dir: &Path, animation_share: f64) -> Result<PairedDataset> {
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
    };
    let samples = parse_samples(&read("samples.csv")?)?;
    let pairs = parse_pairs(&read("pairs.csv")?)?;
    pair_samples(&samples, &pairs, animation_share, dir.display().to_string())
}

pub fn save_dir(dataset: &PairedDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };
    write("samples.csv", write_samples(&dataset.samples())?)?;
    write("pairs.csv", write_pairs(dataset)?)
}

/// Knobs of the synthetic stimulus generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_per_modality: usize,
    pub seed: u64,
    /// Half-width of the uniform noise added to every rating.
    pub noise: f64,
    pub animation_share: f64,
    /// Half-width of the uniform perturbation between a pair's latent content
    /// and the animation member's observed features.
    pub animation_view_noise: f64,
    /// Same, for the music member.
    pub music_view_noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_per_modality: 760,
            seed: 7,
            noise: 0.05,
            animation_share: 0.5,
            animation_view_noise: 0.1,
            music_view_noise: 0.25,
        }
    }
}

// Ground-truth map used by the generator. A pair is built around one latent
// content vector in [0, 1]^5 that both members were made to express. Each
// modality projects it onto a latent valence and arousal axis (centered at
// 0.5), scaled by a modality gain, and every emotion rating is a logistic
// function of an affine combination of the two. The members' observed
// features are noisy views of the content, the music view being the noisier.
const ANIMATION_VALENCE: [f64; 5] = [1.0, -1.5, 2.0, 0.5, 1.0];
const ANIMATION_AROUSAL: [f64; 5] = [2.0, 1.0, -0.5, 1.0, 0.5];
const MUSIC_VALENCE: [f64; 5] = [1.0, 1.5, -0.5, 1.0, -1.0];
const MUSIC_AROUSAL: [f64; 5] = [0.5, -0.5, 1.5, 2.0, -1.0];
const ANIMATION_GAIN: f64 = 1.0;
const MUSIC_GAIN: f64 = 0.8;
/// (valence, arousal, offset) per emotion, fear..happiness.
const EMOTION_AXES: [(f64, f64, f64); 5] = [
    (-2.0, 1.5, -0.5),
    (-2.0, -1.5, -0.5),
    (-1.5, 2.0, -1.0),
    (2.0, -1.5, -0.5),
    (2.0, 1.5, -0.5),
];

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Noise-free emotion ratings of a `modality` stimulus expressing `content`.
pub fn ground_truth_ratings(modality: Modality, content: &[f64; 5]) -> [f64; 5] {
    let (wv, wa, gain) = match modality {
        Modality::Animation => (&ANIMATION_VALENCE, &ANIMATION_AROUSAL, ANIMATION_GAIN),
        Modality::Music => (&MUSIC_VALENCE, &MUSIC_AROUSAL, MUSIC_GAIN),
    };
    let centered = content.map(|f| f - 0.5);
    let valence = gain * centered.iter().zip(wv).map(|(f, w)| f * w).sum::<f64>();
    let arousal = gain * centered.iter().zip(wa).map(|(f, w)| f * w).sum::<f64>();
    EMOTION_AXES.map(|(a, b, c)| sigmoid(a * valence + b * arousal + c))
}

fn uniform<R: Rng>(rng: &mut R, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.gen_range(-half_width..=half_width)
    } else {
        0.0
    }
}

fn synth_sample<R: Rng>(
    rng: &mut R,
    id: String,
    modality: Modality,
    content: &[f64; 5],
    view_noise: f64,
    noise: f64,
) -> Sample {
    let features = content.map(|c| (c + uniform(rng, view_noise)).clamp(0.0, 1.0));
    let clean = ground_truth_ratings(modality, content);
    let mut ratings = clean.map(|r| (r + uniform(rng, noise)).max(0.0));
    if ratings.iter().sum::<f64>() <= 0.0 {
        ratings = clean;
    }
    Sample::new(id, modality, features, ratings).expect("generator produces valid samples")
}

/// Seeded synthetic dataset of `n` animation/music pairs.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<PairedDataset> {
    if config.n_per_modality == 0 {
        return Err(Error::Contract("synthetic dataset needs n >= 1".into()));
    }
    for (name, v) in [
        ("noise", config.noise),
        ("animation_view_noise", config.animation_view_noise),
        ("music_view_noise", config.music_view_noise),
    ] {
        if !(v >= 0.0) {
            return Err(Error::Config(format!("{name} {v} must be non-negative")));
        }
    }
    let mut content_rng = rng_from_seed(derive_seed(config.seed, "synthetic/content"));
    let mut anim_rng = rng_from_seed(derive_seed(config.seed, "synthetic/animation"));
    let mut music_rng = rng_from_seed(derive_seed(config.seed, "synthetic/music"));
    let pairs = (0..config.n_per_modality)
        .map(|i| {
            let content: [f64; 5] = std::array::from_fn(|_| content_rng.gen::<f64>());
            let animation = synth_sample(
                &mut anim_rng,
                format!("a{i:04}"),
                Modality::Animation,
                &content,
                config.animation_view_noise,
                config.noise,
            );
            let music = synth_sample(
                &mut music_rng,
                format!("m{i:04}"),
                Modality::Music,
                &content,
                config.music_view_noise,
                config.noise,
            );
            let epp_target = fuse_epp(animation.epp_target, music.epp_target, config.animation_share);
            Pair {
                id: format!("p{i:04}"),
                animation,
                music,
                epp_target,
            }
        })
        .collect();
    Ok(PairedDataset {
        pairs,
        seed: Some(config.seed),
        source: "synthetic".into(),
        animation_share: config.animation_share,
    })
}

/// Seeded shuffle split into (train, test), keeping pairs intact.
pub fn split(dataset: &PairedDataset, train_fraction: f64, seed: u64) -> Result<(PairedDataset, PairedDataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Contract(format!("train fraction {train_fraction} not in (0, 1)")));
    }
    let n = dataset.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(seed);
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut n_train = (n as f64 * train_fraction).round() as usize;
    if n >= 2 {
        n_train = n_train.clamp(1, n - 1);
    }
    let take = |idx: &[usize]| idx.iter().map(|&i| dataset.pairs[i].clone()).collect();
    Ok((
        dataset.with_pairs(take(&order[..n_train])),
        dataset.with_pairs(take(&order[n_train..])),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "id,modality,f1,f2,f3,f4,f5,fear,sadness,anger,calmness,happiness\n";

    #[test]
    fn epp_examples() {
        assert_eq!(compute_epp(&[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(compute_epp(&[1.0; 5]).unwrap(), 0.5);
        assert!((compute_epp(&[0.2, 0.0, 0.0, 0.5, 0.3]).unwrap() - 0.675).abs() < 1e-12);
        assert!(matches!(compute_epp(&[0.0; 5]), Err(Error::Domain(_))));
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_epp(&[0.2, 0.6, 1.0]);
        assert_eq!(n[0], 0.0);
        assert!((n[1] - 0.5).abs() < 1e-12);
        assert_eq!(n[2], 1.0);
        assert_eq!(normalize_epp(&[0.3, 0.3, 0.3]), vec![0.5; 3]);
        assert_eq!(normalize_epp(&[0.1, 0.4]), vec![0.0, 1.0]);
    }

    #[test]
    fn parse_pure_happiness_row() {
        let text = format!("{HEADER}s1,animation,0.5,0.5,0.5,0.5,0.5,0,0,0,0,1\n");
        let s = parse_samples(&text).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].epp_target, 1.0);
        assert_eq!(s[0].modality, Modality::Animation);
    }

    #[test]
    fn parse_empty_body() {
        assert!(parse_samples(HEADER).unwrap().is_empty());
    }

    #[test]
    fn parse_reports_row_and_column() {
        let text = format!("{HEADER}s1,music,0.5,0.5,0.5,0.5,0.5,0,0,0,0,1\ns2,music,1.3,0.5,0.5,0.5,0.5,0,0,0,0,1\n");
        match parse_samples(&text) {
            Err(Error::Validation { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "f1");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
        let text = format!("{HEADER}s1,music,0.5,x,0.5,0.5,0.5,0,0,0,0,1\n");
        assert!(matches!(parse_samples(&text), Err(Error::Validation { ref column, .. }) if column == "f2"));
        let text = format!("{HEADER}s1,music,0.5,0.5,0.5,0.5,0.5,0,0,0,0,0\n");
        assert!(matches!(parse_samples(&text), Err(Error::Validation { row: 2, .. })));
        let text = format!("{HEADER}s1,music,0.5,0.5,0.5,0.5,0.5,0,0,0\n");
        assert!(matches!(parse_samples(&text), Err(Error::Validation { ref column, .. }) if column == "calmness"));
        let text = "id,modality,f1\ns1,music,0.5\n";
        assert!(matches!(parse_samples(text), Err(Error::Validation { row: 1, .. })));
    }

    #[test]
    fn synthetic_sizes_and_determinism() {
        let cfg = SyntheticConfig::default();
        let a = generate_synthetic(&cfg).unwrap();
        assert_eq!(a.len(), 760);
        assert_eq!(a.sample_count(), 1520);
        assert_eq!(a, generate_synthetic(&cfg).unwrap());
        let b = generate_synthetic(&SyntheticConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn noiseless_targets_follow_ground_truth() {
        let cfg = SyntheticConfig {
            n_per_modality: 50,
            noise: 0.0,
            animation_view_noise: 0.0,
            music_view_noise: 0.0,
            ..SyntheticConfig::default()
        };
        let d = generate_synthetic(&cfg).unwrap();
        for p in &d.pairs {
            for s in [&p.animation, &p.music] {
                let want = compute_epp(&ground_truth_ratings(s.modality, &s.features)).unwrap();
                assert_eq!(s.epp_target, want);
            }
            assert_eq!(p.epp_target, 0.5 * p.animation.epp_target + 0.5 * p.music.epp_target);
            assert_eq!(p.animation.features, p.music.features);
        }
    }

    #[test]
    fn split_partitions() {
        let d = generate_synthetic(&SyntheticConfig {
            n_per_modality: 10,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let (tr, te) = split(&d, 0.8, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (8, 2));
        let mut ids: Vec<_> = tr.pairs.iter().chain(&te.pairs).map(|p| p.id.clone()).collect();
        ids.sort();
        let mut all: Vec<_> = d.pairs.iter().map(|p| p.id.clone()).collect();
        all.sort();
        assert_eq!(ids, all);
        let (tr2, _) = split(&d, 0.8, 3).unwrap();
        assert_eq!(tr, tr2);
        assert!(split(&d, 1.0, 3).is_err());
        assert!(split(&d, 0.0, 3).is_err());
    }

    #[test]
    fn pairs_join() {
        let d = generate_synthetic(&SyntheticConfig {
            n_per_modality: 6,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let samples = parse_samples(&write_samples(&d.samples()).unwrap()).unwrap();
        let pairs = parse_pairs(&write_pairs(&d).unwrap()).unwrap();
        let back = pair_samples(&samples, &pairs, 0.5, "synthetic").unwrap();
        assert_eq!(back.pairs, d.pairs);
        let bad = vec![("p".to_string(), "m0000".to_string(), "m0001".to_string())];
        assert!(pair_samples(&samples, &bad, 0.5, "x").is_err());
    }
}
