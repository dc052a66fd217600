//! Evaluation: exponential similarity and binary classification scores.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

fn check_pair(op: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::dim(op, format!("{a} vs {b} values")));
    }
    if a == 0 {
        return Err(Error::Empty(op.to_string()));
    }
    Ok(())
}

pub fn mean_absolute_error(truth: &[f64], generated: &[f64]) -> Result<f64> {
    check_pair("mean_absolute_error", truth.len(), generated.len())?;
    let sum: f64 = truth.iter().zip(generated).map(|(t, g)| (t - g).abs()).sum();
    Ok(sum / truth.len() as f64)
}

/// `100 * exp(-MAE)`, in percent.
pub fn similarity(truth: &[f64], generated: &[f64]) -> Result<f64> {
    check_pair("similarity", truth.len(), generated.len())?;
    let mae = mean_absolute_error(truth, generated)?;
    if !mae.is_finite() {
        return Err(Error::NonFinite("similarity inputs".into()));
    }
    Ok(100.0 * (-mae).exp())
}

/// 1 iff `value >= threshold`.
pub fn binarize(values: &[f64], threshold: f64) -> Vec<u8> {
    values.iter().map(|&v| u8::from(v >= threshold)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn tally(truth: &[u8], predicted: &[u8]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::dim("confusion", format!("{} vs {} labels", truth.len(), predicted.len())));
        }
        let mut c = Confusion::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t != 0, p != 0) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a ratio was 0/0 and defined as 0.
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn precision_recall_f1(truth: &[u8], predicted: &[u8]) -> Result<Scores> {
    let c = Confusion::tally(truth, predicted)?;
    let (precision, precision_undefined) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
    let (f1, f1_undefined) = if precision + recall == 0.0 {
        (0.0, true)
    } else {
        (2.0 * precision * recall / (precision + recall), false)
    };
    Ok(Scores {
        precision,
        recall,
        f1,
        precision_undefined,
        recall_undefined,
        f1_undefined,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub id: String,
    pub epp_true: f64,
    pub epp_gen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: String,
    pub threshold: f64,
    pub similarity: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
    pub samples: Vec<SampleResult>,
}

impl EvalReport {
    pub fn evaluate(variant: &str, samples: Vec<SampleResult>, threshold: f64) -> Result<Self> {
        let truth: Vec<f64> = samples.iter().map(|s| s.epp_true).collect();
        let gen: Vec<f64> = samples.iter().map(|s| s.epp_gen).collect();
        let sim = similarity(&truth, &gen)?;
        let s = precision_recall_f1(&binarize(&truth, threshold), &binarize(&gen, threshold))?;
        Ok(Self {
            variant: variant.to_string(),
            threshold,
            similarity: sim,
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            precision_undefined: s.precision_undefined,
            recall_undefined: s.recall_undefined,
            f1_undefined: s.f1_undefined,
            samples,
        })
    }

    pub fn comparison_csv(&self) -> String {
        let mut s = String::from("id,epp_true,epp_gen\n");
        for r in &self.samples {
            let _ = writeln!(s, "{},{},{}", r.id, r.epp_true, r.epp_gen);
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
