//! Experiment harness: metrics, sweeps, CSV records and charts.

pub mod metrics;
pub mod plot;
pub mod record;
pub mod sweep;

pub use metrics::{compute_metrics, Metrics};
pub use plot::{emit_plot, Metric};
pub use record::{read_records, write_records, write_slot_rows, MetricsRecord, SeedField, CSV_HEADER};
pub use sweep::{run_one, run_sweep, worker_count, ExperimentConfig, SweepParam, SweepPlan};
