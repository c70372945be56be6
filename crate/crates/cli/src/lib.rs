//! Experiment harness behind the `matpencil` binary: configuration, runners
//! for binary/multiclass classification, pattern transformation, and
//! invariant-basis analysis, plus report rendering.

pub mod report;
pub mod runner;

pub use report::{emit_report, read_report_csv, render_report, ReportFormat, ReportRow};
pub use runner::{
    class_operator, default_binary_specs, default_multiclass_specs, run_binary, run_invariant,
    run_multiclass, run_transform, CenteringMode, ExperimentConfig, InvariantKind,
    InvariantOptions, InvariantReport, TransformOptions, TransformSummary,
};
