//! Data-driven block-length selection for moving block bootstrap variance
//! estimation of smooth-function-model statistics.
//!
//! Three selectors are provided: subsampling ([`hhj`]), non-parametric
//! plug-in with a jackknife-after-bootstrap variance ([`nppi`]) and the
//! flat-top lag-window plug-in ([`pw`]). [`oracle`] computes the Monte Carlo
//! MSE-optimal block length they are judged against and [`experiment`]
//! runs the convergence-rate comparison.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod error;
pub mod experiment;
pub mod hhj;
pub mod mbb;
pub mod nppi;
pub mod oracle;
pub mod process;
pub mod pw;
pub mod seed;
pub mod selection;
pub mod series;
pub mod statistic;

pub use error::{Error, Result};
pub use experiment::{
    emit_report, fit_rate, load_config, run_experiment, ExperimentConfig, RateReport, ReportFormat,
};
pub use hhj::{
    block_grid, hhj_oracle_select, hhj_select, subsample_mse_curve, HhjConfig, SubsamplePlan,
};
pub use mbb::{
    block_means, mbb_variance, mbb_variance_general, mbb_variance_mean_exact, BlockMeans,
    MbbEstimate,
};
pub use nppi::{bias_hat, jab_variance, nppi_select, NppiConfig};
pub use oracle::{
    fn_curve, optimal_block, oracle_grid, theorem1_residual, true_mse_curve, OracleCache,
    OracleResult, OracleSpec,
};
pub use process::{optimal_block_approx, Pairing, ProcessKind, ProcessModel, TheoreticalConstants};
pub use pw::{flat_top_lambda, pw_estimates, pw_select, sample_autocov, PwConfig, PwEstimates};
pub use selection::{BlockSelection, CurveKind, Diagnostics, Method, MseCurve};
pub use series::TimeSeries;
pub use statistic::{builtin_statistic, project_series, statistic_value, Anchor, SmoothStatistic};
