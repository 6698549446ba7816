//! Metrics, long-tail breakdowns and the experiment harness.

mod experiment;
mod longtail;
mod metrics;
mod report;

pub use experiment::{
    check_holdout, run_experiment, run_spec, sweep, AlphaTrace, CellResult, CellSummary, DataSpec, ExperimentConfig, FileData,
    LongTailSummary, Method, MetricsReport, SweepParam, SweepReport, SweepRow, SweepSpec,
};
pub use longtail::{bucket_index, bucket_label, bucket_of, bucket_order, long_tail_from_predictions, long_tail_report, BucketRow};
pub use metrics::{mae, rmse};
pub use report::write_report;
