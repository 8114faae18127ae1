//! Label metrics and the minimum-pair-size sweep harness.

pub mod metrics;

pub use metrics::{
    macro_f1, pair_metrics, per_label_metrics, ConfigSnapshot, Confusion, LabelMetrics, MetricsReport, PairInputs,
    PairMetrics, Scores,
};
pub mod sweep;

pub use sweep::{major_minor_breakdown, run_mps_sweep, Breakdown, GroupRow, PairGroup, SweepConfig, SweepResult, SweepRun};
