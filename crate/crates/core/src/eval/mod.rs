//! Detector-quality metrics and benchmark tables.
//!
//! Bucket validators are scored one prediction per case. SRM detectors are
//! scored per `(series, day)` cell, where an SPRT cell is positive once the
//! monitor has fired, and per series, where a baseline counts as positive if
//! it alerted on any day. The primary SRM table takes baselines per cell and
//! SPRT variants per series.

mod metrics;
mod render;
mod srm;
mod validators;

pub use metrics::{score, ConfusionMatrix, MetricsReport};
pub use render::{format_metric, recall_bins_csv, render_srm_report, render_validator_table};
pub use srm::{
    evaluate_srm_detectors, Detector, DetectorRow, LabelSource, LabeledSeries, RecallBin, SrmEvalConfig,
    SrmEvalReport,
};
pub use validators::{
    evaluate_validators, k_sweep, noise_sweep_eval, noise_sweep_eval_datasets, MethodRow,
    NoiseSweepReport, NoiseSweepRow, ValidatorTable,
};
