use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::metrics::{ConfusionCounts, MetricReport, Protocol, ReportContext};
use super::folds::FoldPlan;
use crate::error::{Error, Result};

pub const AVERAGE_SPECIES: &str = "Average of all species";
pub const AVERAGE_CLASSIFIERS: &str = "Average of all classifiers";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKey {
    Species,
    Classifier,
    Protocol,
}

/// Unweighted mean of every metric; counts are pooled and flags merged.
pub fn mean_report(reports: &[MetricReport], context: ReportContext) -> Result<MetricReport> {
    if reports.is_empty() {
        return Err(Error::data("cannot average an empty set of reports"));
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let mut flags: Vec<&'static str> = reports.iter().flat_map(|r| r.flags.iter().copied()).collect();
    flags.sort_unstable();
    flags.dedup();
    Ok(MetricReport {
        ca: mean(|r| r.ca),
        sn: mean(|r| r.sn),
        sp: mean(|r| r.sp),
        precision: mean(|r| r.precision),
        f1: mean(|r| r.f1),
        mcc: mean(|r| r.mcc),
        auc: mean(|r| r.auc),
        counts: reports.iter().fold(ConfusionCounts::default(), |a, r| a + r.counts),
        context,
        flags,
    })
}

/// Average within each group. Fields not in `group_by` are replaced by an
/// "average" label. Output is sorted by the grouped fields.
pub fn aggregate_reports(reports: &[MetricReport], group_by: &[GroupKey]) -> Result<Vec<MetricReport>> {
    if reports.is_empty() {
        return Err(Error::data("no reports to aggregate"));
    }
    let mut groups: BTreeMap<ReportContext, Vec<MetricReport>> = BTreeMap::new();
    for r in reports {
        let c = &r.context;
        let key = ReportContext {
            species: if group_by.contains(&GroupKey::Species) { c.species.clone() } else { AVERAGE_SPECIES.into() },
            classifier: if group_by.contains(&GroupKey::Classifier) {
                c.classifier.clone()
            } else {
                AVERAGE_CLASSIFIERS.into()
            },
            // an ungrouped protocol keeps the first one seen; mixing is the caller's choice
            protocol: if group_by.contains(&GroupKey::Protocol) { c.protocol } else { reports[0].context.protocol },
        };
        groups.entry(key).or_default().push(r.clone());
    }
    groups.into_iter().map(|(ctx, rs)| mean_report(&rs, ctx)).collect()
}

/// Cross-validation output: every fold report and the per-classifier mean.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub folds: Vec<(usize, MetricReport)>,
    pub mean: Vec<MetricReport>,
}

/// Runs `recipe(fold, train, test)` once per fold. The recipe returns
/// `(classifier, scores on test)` pairs; each pair is scored against the
/// test labels. Means are unweighted over folds.
pub fn cross_validate<F>(labels: &[u8], plan: &FoldPlan, species: &str, mut recipe: F) -> Result<CvOutcome>
where
    F: FnMut(usize, &[usize], &[usize]) -> Result<Vec<(String, Vec<f64>)>>,
{
    if plan.len() != labels.len() {
        return Err(Error::Shape(format!("fold plan covers {} samples, dataset has {}", plan.len(), labels.len())));
    }
    let protocol = Protocol::CrossValidation(plan.k);
    let mut folds = Vec::new();
    let mut by_classifier: BTreeMap<String, Vec<MetricReport>> = BTreeMap::new();
    for fold in 0..plan.k {
        let train = plan.train_indices(fold);
        let test = plan.test_indices(fold);
        let test_labels: Vec<u8> = test.iter().map(|&i| labels[i]).collect();
        for (classifier, scores) in recipe(fold, &train, &test)? {
            let ctx = ReportContext::new(species, classifier.clone(), protocol);
            let report = MetricReport::from_scores(&scores, &test_labels, ctx)?;
            by_classifier.entry(classifier).or_default().push(report.clone());
            folds.push((fold, report));
        }
    }
    let mean = by_classifier
        .into_iter()
        .map(|(c, rs)| mean_report(&rs, ReportContext::new(species, c, protocol)))
        .collect::<Result<_>>()?;
    Ok(CvOutcome { folds, mean })
}

/// Tab-separated table: Species, Classifier, ACC, Sn, Sp, MCC, AUC, F1.
/// Flagged rows get a trailing comment line naming the defaulted metrics.
pub fn render_table(reports: &[MetricReport]) -> String {
    let mut out = String::from("Species\tClassifier\tACC\tSn\tSp\tMCC\tAUC\tF1\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            r.context.species, r.context.classifier, r.ca, r.sn, r.sp, r.mcc, r.auc, r.f1
        );
    }
    for r in reports.iter().filter(|r| r.is_flagged()) {
        let _ = writeln!(out, "# {} / {}: defaulted to 0: {}", r.context.species, r.context.classifier, r.flags.join(","));
    }
    out
}
