use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Scores at or above this are predicted positive.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        ConfusionCounts { tp: self.tp + o.tp, tn: self.tn + o.tn, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

pub fn confusion_counts<S: Scalar>(scores: &[S], labels: &[u8], threshold: f64) -> Result<ConfusionCounts> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    if scores.is_empty() {
        return Err(Error::data("no samples to evaluate"));
    }
    let mut c = ConfusionCounts::default();
    for (s, &y) in scores.iter().zip(labels) {
        let predicted = s.as_f64() >= threshold;
        match (y, predicted) {
            (1, true) => c.tp += 1,
            (1, false) => c.fn_ += 1,
            (0, true) => c.fp += 1,
            (0, false) => c.tn += 1,
            (other, _) => return Err(Error::data(format!("labels must be 0 or 1, got {other}"))),
        }
    }
    Ok(c)
}

/// Evaluation protocol a report was produced under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Protocol {
    Training,
    Independent,
    CrossValidation(usize),
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Training => f.write_str("train"),
            Protocol::Independent => f.write_str("independent"),
            Protocol::CrossValidation(k) => write!(f, "cv{k}"),
        }
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "train" | "training" => Ok(Protocol::Training),
            "independent" | "test" => Ok(Protocol::Independent),
            _ => t
                .strip_prefix("cv")
                .and_then(|k| k.parse().ok())
                .filter(|&k| k >= 2)
                .map(Protocol::CrossValidation)
                .ok_or_else(|| Error::Config(format!("unknown protocol `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReportContext {
    pub species: String,
    pub classifier: String,
    pub protocol: Protocol,
}

impl ReportContext {
    pub fn new(species: impl Into<String>, classifier: impl Into<String>, protocol: Protocol) -> Self {
        ReportContext { species: species.into(), classifier: classifier.into(), protocol }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub ca: f64,
    pub sn: f64,
    pub sp: f64,
    pub precision: f64,
    pub f1: f64,
    pub mcc: f64,
    pub auc: f64,
    pub counts: ConfusionCounts,
    pub context: ReportContext,
    /// Metrics that hit a zero denominator (or undefined AUC) and were set to 0.
    pub flags: Vec<&'static str>,
}

fn ratio(num: f64, den: f64, name: &'static str, flags: &mut Vec<&'static str>) -> f64 {
    if den == 0.0 {
        flags.push(name);
        0.0
    } else {
        num / den
    }
}

/// All threshold metrics. AUC is left at 0 and flagged until [`with_auc`] sets it.
///
/// [`with_auc`]: MetricReport::with_auc
pub fn compute_metrics(counts: ConfusionCounts, context: ReportContext) -> Result<MetricReport> {
    if counts.total() == 0 {
        return Err(Error::data("confusion counts are all zero"));
    }
    let (tp, tn, fp, fn_) = (counts.tp as f64, counts.tn as f64, counts.fp as f64, counts.fn_ as f64);
    let mut flags = Vec::new();
    let ca = (tp + tn) / (tp + tn + fp + fn_);
    let sn = ratio(tp, tp + fn_, "sn", &mut flags);
    let sp = ratio(tn, fp + tn, "sp", &mut flags);
    let precision = ratio(tp, tp + fp, "precision", &mut flags);
    let f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn_, "f1", &mut flags);
    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    let mcc = ratio(tp * tn - fp * fn_, den, "mcc", &mut flags);
    flags.push("auc");
    Ok(MetricReport { ca, sn, sp, precision, f1, mcc, auc: 0.0, counts, context, flags })
}

impl MetricReport {
    pub fn with_auc(mut self, auc: Option<f64>) -> Self {
        self.flags.retain(|f| *f != "auc");
        match auc {
            Some(a) => self.auc = a,
            None => {
                self.auc = 0.0;
                self.flags.push("auc");
            }
        }
        self
    }

    /// Threshold metrics plus AUC from raw scores. A single-class sample
    /// gets AUC 0 and the `auc` flag rather than an error.
    pub fn from_scores<S: Scalar>(scores: &[S], labels: &[u8], context: ReportContext) -> Result<Self> {
        let counts = confusion_counts(scores, labels, DEFAULT_THRESHOLD)?;
        let auc = super::roc::roc_auc(scores, labels).ok();
        Ok(compute_metrics(counts, context)?.with_auc(auc))
    }

    pub fn is_flagged(&self) -> bool {
        !self.flags.is_empty()
    }
}
