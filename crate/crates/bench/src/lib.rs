//! Experiment driver for the constrained-RL benchmark: suite-name parsing,
//! seeded runs, per-epoch metrics, CSV persistence, and SVG plots.

pub mod experiment;
pub mod hyper;
pub mod metrics;
pub mod plot;
pub mod suite;

pub use experiment::{run_experiment, run_seed, write_summary, RunConfig, SeedResult, SeedRun};
pub use hyper::HyperParams;
pub use metrics::{compute_metrics, read_metrics_csv, summary_csv, MetricsRow, CSV_HEADER};
pub use plot::{emit_plot, Metric};
pub use suite::{SuiteError, SuiteId};
