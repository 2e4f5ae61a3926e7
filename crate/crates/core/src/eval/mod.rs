//! Metrics, pooled cross-validation and result tables.

mod cv;
mod metrics;
mod report;
mod suites;

pub use cv::{cross_validate, fold_seed, pooled_cv, CvOutcome, ModelSpec, Resources};
pub use metrics::{
    accuracy, confusion, prediction_overlap, prf1, roc_auc, ConfusionMatrix, MetricsReport, OverlapBreakdown, Prf1,
    DECISION_THRESHOLD,
};
pub use report::{emit_overlap, emit_report, format3, ReportFormat, CSV_HEADER};
pub use suites::{
    ensemble_outcome, lr_suite, nn_suite, EnsembleOutcome, Suite, BASELINE_LR_ROW, BEST_LR_ROW, BEST_NN_ROW,
};
