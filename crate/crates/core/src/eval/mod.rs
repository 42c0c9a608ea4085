//! Metrics, contamination-sweep ROC analysis and experiment drivers.

mod experiment;
mod metrics;
mod roc;

pub use experiment::{
    compare_augmenters, compare_cell, compare_report, config_hash, magnitude_cell, magnitude_sweep_experiment,
    mean_std, sweep_aae, train_compare_model, train_sweep_model, CompareCell, CompareConfig, CompareTable, ExperimentSummary,
    MagnitudeCell, MagnitudeRow, MagnitudeSweepConfig, MagnitudeSweepTable, Method, MethodStats, NSynth, SeedStreams,
};
pub use metrics::{confusion, f1, g_measure, Confusion};
pub use roc::{auc, evaluate_detector, fpr_at_tpr, report_from_sweep, roc_from_sweep, MetricReport, RocCurve, SweepGrid, SweepRow};
