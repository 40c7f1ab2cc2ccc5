//! Threshold metrics, ROC analysis, fold plans and report tables.

mod folds;
mod metrics;
mod report;
mod roc;

pub use folds::{make_fold_plan, make_stratified_fold_plan, FoldPlan};
pub use metrics::{
    compute_metrics, confusion_counts, ConfusionCounts, MetricReport, Protocol, ReportContext, DEFAULT_THRESHOLD,
};
pub use report::{
    aggregate_reports, cross_validate, mean_report, render_table, CvOutcome, GroupKey, AVERAGE_CLASSIFIERS,
    AVERAGE_SPECIES,
};
pub use roc::{auc_from_curve, roc_auc, roc_csv, roc_curve, RocPoint};
