use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ResolvedTuning};
use super::rate::{fit_rate, quantile};
use crate::error::{Error, Result};
use crate::hhj::{hhj_oracle_select, hhj_select};
use crate::nppi::nppi_select;
use crate::oracle::{oracle_grid, OracleCache, OracleResult, OracleSpec};
use crate::process::ProcessModel;
use crate::pw::pw_select;
use crate::seed::{derive_seed, tag};
use crate::selection::{BlockSelection, Method};
use crate::series::TimeSeries;
use crate::statistic::SmoothStatistic;

/// Share of degenerate replicates above which an experiment is aborted.
pub const MAX_DEGENERATE_SHARE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub ell_opt: usize,
    pub median_rel_err: f64,
    pub q25: f64,
    pub q75: f64,
    /// Replicates that produced a block length.
    pub reps: usize,
    /// Replicates that failed or fell back to the degenerate block length.
    pub degenerate: usize,
    /// Per-replicate relative errors, `None` where the selector failed.
    #[serde(skip)]
    pub errors: Vec<Option<f64>>,
}

impl RatePoint {
    pub fn from_errors(
        n: usize,
        ell_opt: usize,
        errors: Vec<Option<f64>>,
        degenerate: usize,
    ) -> Self {
        let mut ok: Vec<f64> = errors.iter().flatten().copied().collect();
        ok.sort_by(f64::total_cmp);
        Self {
            n,
            ell_opt,
            median_rel_err: quantile(&ok, 0.5),
            q25: quantile(&ok, 0.25),
            q75: quantile(&ok, 0.75),
            reps: ok.len(),
            degenerate,
            errors,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub points: Vec<RatePoint>,
    pub fitted_slope: Option<f64>,
    pub slope_se: Option<f64>,
    pub theoretical_slope: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MethodReport {
    pub fn from_points(method: Method, points: Vec<RatePoint>) -> Self {
        let mut report = Self {
            method,
            points,
            fitted_slope: None,
            slope_se: None,
            theoretical_slope: method.theoretical_slope(),
            note: None,
        };
        let usable: Vec<(f64, f64)> = report
            .points
            .iter()
            .filter(|p| p.reps > 0)
            .map(|p| (p.n as f64, p.median_rel_err))
            .collect();
        if usable.len() < 3 {
            report.note = Some("insufficient grid".into());
        } else if usable.iter().any(|p| p.1 == 0.0) {
            report.note = Some("degenerate zero errors".into());
        } else {
            match fit_rate(&usable) {
                Ok(fit) => {
                    report.fitted_slope = Some(fit.slope);
                    report.slope_se = Some(fit.se);
                }
                Err(e) => report.note = Some(e.to_string()),
            }
        }
        report
    }

    pub fn point(&self, n: usize) -> Option<&RatePoint> {
        self.points.iter().find(|p| p.n == n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub model: ProcessModel,
    pub statistic: SmoothStatistic,
    pub replications: usize,
    pub master_seed: u64,
    pub methods: Vec<MethodReport>,
}

impl RateReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

/// Runs one selector on one series.
pub fn run_selector(
    method: Method,
    series: &TimeSeries,
    stat: SmoothStatistic,
    tuning: &ResolvedTuning,
    sigma_inf_sq: f64,
    seed: u64,
) -> Result<BlockSelection> {
    match method {
        Method::Hhj => hhj_select(series, stat, &tuning.hhj, seed),
        Method::HhjOracle => hhj_oracle_select(series, stat, &tuning.hhj, sigma_inf_sq, seed),
        Method::Nppi => nppi_select(series, stat, &tuning.nppi, seed),
        Method::Pw => pw_select(series, stat, &tuning.pw),
    }
}

enum Outcome {
    Selected { block: usize, degenerate: bool },
    Failed,
}

impl ExperimentConfig {
    /// Oracle computation for sample size `n`, seeded from the master seed.
    pub fn oracle_spec(&self, n: usize) -> Result<OracleSpec> {
        Ok(OracleSpec {
            model: self.model.clone(),
            statistic: self.statistic,
            n,
            grid: oracle_grid(n, self.oracle.k)?,
            replications: self.oracle.replications,
            seed: derive_seed(self.master_seed, &[tag::ORACLE, n as u64]),
            budget: self.boot_budget,
        })
    }

    /// Builds the oracle for `n`, going through the cache when one is configured.
    pub fn oracle(&self, n: usize) -> Result<OracleResult> {
        let spec = self.oracle_spec(n)?;
        match &self.oracle.cache_dir {
            Some(dir) => OracleCache::new(dir).get_or_build(&spec),
            None => spec.run(),
        }
    }
}

fn run_inner(config: &ExperimentConfig) -> Result<RateReport> {
    let constants = config.model.theoretical_constants_for(config.statistic)?;
    let mut per_method: Vec<Vec<RatePoint>> = vec![Vec::new(); config.methods.len()];

    for &n in &config.n_grid {
        let oracle = config.oracle(n)?;
        let ell_opt = oracle.ell_opt as f64;
        let tuning = config.resolved_tuning(n);

        let outcomes: Vec<Vec<Outcome>> = (0..config.replications)
            .into_par_iter()
            .map(|r| {
                let series_seed =
                    derive_seed(config.master_seed, &[tag::SERIES, n as u64, r as u64]);
                let series = config.model.generate(n, series_seed)?;
                Ok(config
                    .methods
                    .iter()
                    .map(|&method| {
                        let seed = derive_seed(
                            config.master_seed,
                            &[tag::METHOD, n as u64, r as u64, method.tag()],
                        );
                        match run_selector(
                            method,
                            &series,
                            config.statistic,
                            &tuning,
                            constants.sigma_inf_sq,
                            seed,
                        ) {
                            Ok(sel) => Outcome::Selected {
                                block: sel.block_length,
                                degenerate: sel.degenerate,
                            },
                            Err(_) => Outcome::Failed,
                        }
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;

        for (j, &method) in config.methods.iter().enumerate() {
            let mut degenerate = 0;
            let errors: Vec<Option<f64>> = outcomes
                .iter()
                .map(|row| match row[j] {
                    Outcome::Selected {
                        block,
                        degenerate: flag,
                    } => {
                        degenerate += usize::from(flag);
                        Some((block as f64 - ell_opt).abs() / ell_opt)
                    }
                    Outcome::Failed => {
                        degenerate += 1;
                        None
                    }
                })
                .collect();
            let share = degenerate as f64 / config.replications as f64;
            if share > MAX_DEGENERATE_SHARE {
                return Err(Error::DegeneracyAbort {
                    method: method.to_string(),
                    n,
                    rate: 100.0 * share,
                });
            }
            per_method[j].push(RatePoint::from_errors(
                n,
                oracle.ell_opt,
                errors,
                degenerate,
            ));
        }
    }

    Ok(RateReport {
        model: config.model.clone(),
        statistic: config.statistic,
        replications: config.replications,
        master_seed: config.master_seed,
        methods: config
            .methods
            .iter()
            .zip(per_method)
            .map(|(&m, pts)| MethodReport::from_points(m, pts))
            .collect(),
    })
}

/// Runs every enabled selector on `replications` fresh series per sample size
/// and records relative errors against the Monte Carlo optimal block length.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RateReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| run_inner(config))
}
