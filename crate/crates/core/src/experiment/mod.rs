//! Convergence-rate experiments: configuration, runner, rate fits and reports.

mod config;
mod rate;
mod report;
mod runner;

pub use config::{
    load_config, parse_config, ExperimentConfig, HhjTuning, NppiTuning, OracleSettings, PwTuning,
    ResolvedTuning, Tuning,
};
pub use rate::{fit_rate, quantile, RateFit};
pub use report::{emit_report, render_csv, render_gnuplot, render_json, ReportFormat};
pub use runner::{run_experiment, run_selector, MethodReport, RatePoint, RateReport};
