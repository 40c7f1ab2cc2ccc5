use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores ≥ threshold are called positive; the first point uses +∞.
    pub threshold: f64,
}

fn class_totals(labels: &[u8]) -> Result<(u64, u64)> {
    let mut pos = 0u64;
    let mut neg = 0u64;
    for &y in labels {
        match y {
            1 => pos += 1,
            0 => neg += 1,
            other => return Err(Error::data(format!("labels must be 0 or 1, got {other}"))),
        }
    }
    if pos == 0 || neg == 0 {
        return Err(Error::data("ROC analysis needs both classes"));
    }
    Ok((pos, neg))
}

/// One point per distinct score, descending. Tied scores move together,
/// which makes the trapezoid area equal the tie-aware rank statistic.
pub fn roc_curve<S: Scalar>(scores: &[S], labels: &[u8]) -> Result<Vec<RocPoint>> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!("{} scores but {} labels", scores.len(), labels.len())));
    }
    let (pos, neg) = class_totals(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: f64::INFINITY }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint { fpr: fp as f64 / neg as f64, tpr: tp as f64 / pos as f64, threshold: s.as_f64() });
    }
    Ok(points)
}

pub fn auc_from_curve(points: &[RocPoint]) -> f64 {
    points.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum()
}

pub fn roc_auc<S: Scalar>(scores: &[S], labels: &[u8]) -> Result<f64> {
    Ok(auc_from_curve(&roc_curve(scores, labels)?))
}

/// `fpr,tpr,threshold` with a header row.
pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("fpr,tpr,threshold\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.fpr, p.tpr, p.threshold);
    }
    out
}
