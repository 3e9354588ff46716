//! Benchmark harness comparing BSG against its inner optimizer and other
//! first-order baselines on logistic regression, an MLP and test surfaces.

pub mod config;
mod error;
mod metrics;
mod optimizer;
mod runner;

pub use config::{Experiment, ExperimentConfig, OptimizerKind};
pub use error::{BenchError, Result};
pub use metrics::{format_sig, parse_csv, render_csv, render_json, write_metrics, MetricRow, MetricsFormat, MetricsTable};
pub use optimizer::ParamOptimizer;
pub use runner::{alpha_sweep, run_experiment, RunProbe, RunReport, SweepEntry};
