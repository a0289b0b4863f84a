//! Experiment configuration, execution and metrics output.

mod config;
mod metrics;
mod run;

pub use config::{Algorithm, CompressorChoice, DatasetSource, RunConfig, Setting, SigmaMode};
pub use metrics::{emit_metrics, parse_csv, write_csv, MetricsRow, CSV_HEADER};
pub use run::{
    build_federation, evaluate, initial_point, plan_run, prepare_data, run_experiment, run_prepared, run_single,
    run_until,
    PreparedData, RunPlan,
};
pub use crate::streams::derive_stream as derive_stream_seed;
