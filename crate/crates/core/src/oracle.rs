//! Monte Carlo ground truth for the MSE-optimal block length.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hhj::block_grid;
use crate::mbb::mbb_variance;
use crate::process::{optimal_block_approx, ProcessModel, TheoreticalConstants};
use crate::seed::derive_seed;
use crate::selection::{CurveKind, MseCurve};
use crate::statistic::SmoothStatistic;

pub const DEFAULT_ORACLE_K: f64 = 4.0;
pub const DEFAULT_ORACLE_REPLICATIONS: usize = 5000;

/// `f_n(l) = B0^2 / l^2 + V0 l / n` on the grid.
pub fn fn_curve(b0: f64, v0: f64, n: usize, grid: &[usize]) -> Result<MseCurve> {
    if !(v0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "V0 = {v0} must be positive"
        )));
    }
    if grid.contains(&0) {
        return Err(Error::InvalidParameter(
            "grid entries must be at least 1".into(),
        ));
    }
    let mut curve = MseCurve::new(CurveKind::Analytic, n);
    for &l in grid {
        let l_f = l as f64;
        curve
            .entries
            .insert(l, b0 * b0 / (l_f * l_f) + v0 * l_f / n as f64);
    }
    Ok(curve)
}

/// Grid argmin, ties to the smallest block.
pub fn optimal_block(curve: &MseCurve) -> Result<usize> {
    curve.argmin()
}

/// The oracle grid `{l : n^(1/3)/K <= l <= K n^(1/3)}`.
pub fn oracle_grid(n: usize, k: f64) -> Result<Vec<usize>> {
    block_grid(n, k)
}

/// A Monte Carlo MSE curve with per-point standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCurve {
    pub curve: MseCurve,
    pub se: BTreeMap<usize, f64>,
}

/// `E (sigma2_hat_n(l) - target)^2` averaged over `replications` independent draws.
///
/// Replicate `r` uses the series seed `derive_seed(seed, [r])`; the reduction
/// runs in replicate order so the result does not depend on thread count.
#[allow(clippy::too_many_arguments)]
pub fn true_mse_curve(
    model: &ProcessModel,
    stat: SmoothStatistic,
    n: usize,
    grid: &[usize],
    replications: usize,
    target: f64,
    budget: usize,
    seed: u64,
) -> Result<MonteCarloCurve> {
    if replications < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replications, got {replications}"
        )));
    }
    if grid.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let rows: Vec<Vec<f64>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let series = model.generate(n, derive_seed(seed, &[r as u64]))?;
            grid.iter()
                .map(|&l| {
                    let s = derive_seed(seed, &[r as u64, l as u64]);
                    let v = mbb_variance(&series, l, stat, budget, s)?.value;
                    Ok((v - target) * (v - target))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let reps = replications as f64;
    let mut curve = MseCurve::new(CurveKind::TrueMc, n);
    let mut se = BTreeMap::new();
    for (g, &l) in grid.iter().enumerate() {
        let mean = rows.iter().map(|row| row[g]).sum::<f64>() / reps;
        let var = rows.iter().map(|row| (row[g] - mean).powi(2)).sum::<f64>() / (reps - 1.0);
        curve.entries.insert(l, mean);
        se.insert(l, (var / reps).sqrt());
    }
    Ok(MonteCarloCurve { curve, se })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub mse_curve: MseCurve,
    pub ell_opt: usize,
    /// `C0 n^(1/3)`.
    pub ell0: f64,
    pub replications: usize,
    pub mc_se_curve: BTreeMap<usize, f64>,
}

/// Parameters identifying one oracle computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub model: ProcessModel,
    pub statistic: SmoothStatistic,
    pub n: usize,
    pub grid: Vec<usize>,
    #[serde(rename = "R")]
    pub replications: usize,
    pub seed: u64,
    /// Monte Carlo resamples per estimate; unused for the mean statistic.
    #[serde(default = "default_budget")]
    pub budget: usize,
}

fn default_budget() -> usize {
    200
}

impl OracleSpec {
    pub fn with_default_grid(
        model: ProcessModel,
        statistic: SmoothStatistic,
        n: usize,
        replications: usize,
        seed: u64,
    ) -> Result<Self> {
        Ok(Self {
            model,
            statistic,
            n,
            grid: oracle_grid(n, DEFAULT_ORACLE_K)?,
            replications,
            seed,
            budget: default_budget(),
        })
    }

    pub fn constants(&self) -> Result<TheoreticalConstants> {
        self.model.theoretical_constants_for(self.statistic)
    }

    pub fn run(&self) -> Result<OracleResult> {
        let constants = self.constants()?;
        let mc = true_mse_curve(
            &self.model,
            self.statistic,
            self.n,
            &self.grid,
            self.replications,
            constants.sigma_inf_sq,
            self.budget,
            self.seed,
        )?;
        Ok(OracleResult {
            ell_opt: optimal_block(&mc.curve)?,
            ell0: optimal_block_approx(&constants, self.n),
            mse_curve: mc.curve,
            replications: self.replications,
            mc_se_curve: mc.se,
        })
    }
}

/// Finite-sample check of the MSE expansion and of `l_opt / l0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCheck {
    /// `max_l |MSE_n(l) - 2 B0 sigma_inf^2 / n - f_n(l)|` over the oracle grid.
    pub max_abs_residual: f64,
    /// `l_opt / l0`.
    pub ratio: f64,
    pub oracle: OracleResult,
    pub residuals: BTreeMap<usize, f64>,
}

pub fn theorem1_residual(
    model: &ProcessModel,
    stat: SmoothStatistic,
    n: usize,
    replications: usize,
    budget: usize,
    seed: u64,
) -> Result<ExpansionCheck> {
    let mut spec = OracleSpec::with_default_grid(model.clone(), stat, n, replications, seed)?;
    spec.budget = budget;
    let constants = spec.constants()?;
    let oracle = spec.run()?;
    let approx = fn_curve(constants.b0, constants.v0, n, &spec.grid)?;
    let offset = 2.0 * constants.b0 * constants.sigma_inf_sq / n as f64;
    let residuals: BTreeMap<usize, f64> = oracle
        .mse_curve
        .entries
        .iter()
        .map(|(&l, &mse)| (l, mse - offset - approx.entries[&l]))
        .collect();
    let max_abs_residual = residuals.values().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(ExpansionCheck {
        max_abs_residual,
        ratio: oracle.ell_opt as f64 / oracle.ell0,
        oracle,
        residuals,
    })
}

/// On-disk oracle record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCacheEntry {
    pub model: ProcessModel,
    pub statistic: SmoothStatistic,
    pub n: usize,
    pub grid: Vec<usize>,
    #[serde(rename = "R")]
    pub replications: usize,
    pub seed: u64,
    /// `[l, mse, se]` triples.
    pub curve: Vec<(usize, f64, f64)>,
    pub ell_opt: usize,
    #[serde(default)]
    pub budget: Option<usize>,
}

impl OracleCacheEntry {
    fn matches(&self, spec: &OracleSpec) -> bool {
        self.model == spec.model
            && self.statistic == spec.statistic
            && self.n == spec.n
            && self.grid == spec.grid
            && self.replications == spec.replications
            && self.seed == spec.seed
            && (spec.statistic.is_mean() || self.budget == Some(spec.budget))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Directory of oracle results keyed by their [`OracleSpec`].
#[derive(Debug, Clone)]
pub struct OracleCache {
    dir: PathBuf,
}

impl OracleCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, spec: &OracleSpec) -> Result<PathBuf> {
        let mut key = spec.clone();
        if spec.statistic.is_mean() {
            key.budget = 0;
        }
        let hash = fnv1a(serde_json::to_string(&key)?.as_bytes());
        Ok(self
            .dir
            .join(format!("oracle-n{}-{hash:016x}.json", spec.n)))
    }

    pub fn load(&self, spec: &OracleSpec) -> Result<Option<OracleResult>> {
        let path = self.path_for(spec)?;
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(path, e)),
        };
        let entry: OracleCacheEntry = serde_json::from_str(&text)?;
        if !entry.matches(spec) {
            return Ok(None);
        }
        let constants = spec.constants()?;
        let mut mse_curve = MseCurve::new(CurveKind::TrueMc, spec.n);
        let mut mc_se_curve = BTreeMap::new();
        for &(l, mse, se) in &entry.curve {
            mse_curve.entries.insert(l, mse);
            mc_se_curve.insert(l, se);
        }
        Ok(Some(OracleResult {
            mse_curve,
            ell_opt: entry.ell_opt,
            ell0: optimal_block_approx(&constants, spec.n),
            replications: entry.replications,
            mc_se_curve,
        }))
    }

    /// Writes to a temporary file in the cache directory, then renames it into place.
    pub fn store(&self, spec: &OracleSpec, result: &OracleResult) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path_for(spec)?;
        let entry = OracleCacheEntry {
            model: spec.model.clone(),
            statistic: spec.statistic,
            n: spec.n,
            grid: spec.grid.clone(),
            replications: spec.replications,
            seed: spec.seed,
            curve: result
                .mse_curve
                .entries
                .iter()
                .map(|(&l, &mse)| (l, mse, result.mc_se_curve[&l]))
                .collect(),
            ell_opt: result.ell_opt,
            budget: (!spec.statistic.is_mean()).then_some(spec.budget),
        };
        let mut tmp =
            tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        serde_json::to_writer_pretty(&mut tmp, &entry)?;
        tmp.write_all(b"\n").map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(path)
    }

    pub fn get_or_build(&self, spec: &OracleSpec) -> Result<OracleResult> {
        if let Some(hit) = self.load(spec)? {
            return Ok(hit);
        }
        let result = spec.run()?;
        self.store(spec, &result)?;
        Ok(result)
    }
}
