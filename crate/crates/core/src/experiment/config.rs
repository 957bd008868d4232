use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hhj::{ceil_power, HhjConfig, DEFAULT_K};
use crate::nppi::NppiConfig;
use crate::oracle::{oracle_grid, DEFAULT_ORACLE_K, DEFAULT_ORACLE_REPLICATIONS};
use crate::process::ProcessModel;
use crate::pw::{PwConfig, DEFAULT_TAU};
use crate::selection::Method;
use crate::statistic::SmoothStatistic;

/// Minimum replications per sample size for a rate fit.
pub const MIN_REPLICATIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ProcessModel,
    #[serde(default = "default_statistic")]
    pub statistic: SmoothStatistic,
    pub methods: Vec<Method>,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    #[serde(default)]
    pub tuning: Tuning,
    #[serde(default)]
    pub oracle: OracleSettings,
    /// Monte Carlo resamples per bootstrap estimate (nonlinear statistics only).
    #[serde(default = "default_budget")]
    pub boot_budget: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_statistic() -> SmoothStatistic {
    SmoothStatistic::Mean
}

fn default_budget() -> usize {
    200
}

fn default_parallelism() -> usize {
    1
}

fn one() -> f64 {
    1.0
}

fn default_k() -> f64 {
    DEFAULT_K
}

fn default_stride() -> usize {
    1
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tuning {
    #[serde(default)]
    pub hhj: HhjTuning,
    #[serde(default)]
    pub nppi: NppiTuning,
    #[serde(default)]
    pub pw: PwTuning,
}

/// `m = ceil(c_m n^(1/2))`, `pilot = ceil(c_pilot n^(1/3))` unless fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HhjTuning {
    #[serde(default = "one")]
    pub c_m: f64,
    #[serde(default = "one")]
    pub c_pilot: f64,
    #[serde(default = "default_k", rename = "K")]
    pub k: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pilot: Option<usize>,
}

impl Default for HhjTuning {
    fn default() -> Self {
        Self {
            c_m: 1.0,
            c_pilot: 1.0,
            k: DEFAULT_K,
            stride: 1,
            m: None,
            pilot: None,
        }
    }
}

/// `l1 = ceil(c_ell1 n^(1/7))`, `l2 = ceil(c_ell2 n^(1/7))`, `m_jab = ceil(c_m_jab n^(3/7))` unless fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NppiTuning {
    #[serde(default = "one")]
    pub c_ell1: f64,
    #[serde(default = "one")]
    pub c_ell2: f64,
    #[serde(default = "one")]
    pub c_m_jab: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_jab: Option<usize>,
}

impl Default for NppiTuning {
    fn default() -> Self {
        Self {
            c_ell1: 1.0,
            c_ell2: 1.0,
            c_m_jab: 1.0,
            ell1: None,
            ell2: None,
            m_jab: None,
        }
    }
}

/// `M = ceil(n^tau)` unless fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PwTuning {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default, rename = "M", skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<usize>,
}

impl Default for PwTuning {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            bandwidth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSettings {
    #[serde(default = "default_oracle_reps", rename = "R")]
    pub replications: usize,
    #[serde(default = "default_oracle_k", rename = "K")]
    pub k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

fn default_oracle_reps() -> usize {
    DEFAULT_ORACLE_REPLICATIONS
}

fn default_oracle_k() -> f64 {
    DEFAULT_ORACLE_K
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            replications: DEFAULT_ORACLE_REPLICATIONS,
            k: DEFAULT_ORACLE_K,
            cache_dir: None,
        }
    }
}

/// Selector configurations for one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedTuning {
    pub hhj: HhjConfig,
    pub nppi: NppiConfig,
    pub pw: PwConfig,
}

impl HhjTuning {
    pub fn resolve(&self, n: usize, budget: usize) -> HhjConfig {
        let mut c = HhjConfig::with_constants(n, self.c_m, self.c_pilot, self.k);
        c.m = self.m.unwrap_or(c.m);
        c.pilot_block = self.pilot.unwrap_or(c.pilot_block);
        c.stride = self.stride;
        c.boot_budget = budget;
        c
    }
}

impl NppiTuning {
    pub fn resolve(&self, n: usize, budget: usize) -> NppiConfig {
        let mut c = NppiConfig::with_constants(n, self.c_ell1, self.c_ell2, self.c_m_jab);
        c.ell1 = self.ell1.unwrap_or(c.ell1);
        c.ell2 = self.ell2.unwrap_or(c.ell2);
        c.m_jab = self.m_jab.unwrap_or(c.m_jab);
        c.boot_budget = budget;
        c
    }
}

impl PwTuning {
    pub fn resolve(&self, n: usize) -> PwConfig {
        PwConfig {
            bandwidth: self
                .bandwidth
                .unwrap_or_else(|| ceil_power(1.0, n, self.tau)),
        }
    }
}

impl Tuning {
    pub fn resolve(&self, n: usize, budget: usize) -> ResolvedTuning {
        ResolvedTuning {
            hhj: self.hhj.resolve(n, budget),
            nppi: self.nppi.resolve(n, budget),
            pw: self.pw.resolve(n),
        }
    }
}

fn tag_field(field: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::config(field, other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn resolved_tuning(&self, n: usize) -> ResolvedTuning {
        self.tuning.resolve(n, self.boot_budget)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate().map_err(tag_field("model"))?;
        if self.statistic.dim() != self.model.dim() {
            return Err(Error::config(
                "statistic",
                format!(
                    "{} needs {}-dimensional observations but the model produces {}",
                    self.statistic,
                    self.statistic.dim(),
                    self.model.dim()
                ),
            ));
        }
        self.model
            .theoretical_constants_for(self.statistic)
            .map_err(tag_field("model"))?;
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::config("methods", format!("{m} listed twice")));
            }
        }
        if self.n_grid.is_empty() {
            return Err(Error::config("n_grid", "must not be empty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("n_grid", "must be strictly ascending"));
        }
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::config(
                "replications",
                format!("must be at least {MIN_REPLICATIONS}"),
            ));
        }
        if self.parallelism == 0 {
            return Err(Error::config("parallelism", "must be positive"));
        }
        if self.boot_budget < 2 {
            return Err(Error::config("boot_budget", "must be at least 2"));
        }
        if self.oracle.replications < 2 {
            return Err(Error::config("oracle.R", "must be at least 2"));
        }
        if !(0.1 - 1e-12..=1.0 / 3.0 + 1e-12).contains(&self.tuning.pw.tau) {
            return Err(Error::config("tuning.pw.tau", "must lie in [0.1, 1/3]"));
        }
        for &n in &self.n_grid {
            if n < 4 {
                return Err(Error::config("n_grid", format!("n = {n} is too small")));
            }
            oracle_grid(n, self.oracle.k).map_err(tag_field("oracle.K"))?;
            let t = self.resolved_tuning(n);
            for method in &self.methods {
                match method {
                    Method::Hhj | Method::HhjOracle => {
                        t.hhj.validate(n).map_err(tag_field("tuning.hhj"))?;
                        crate::hhj::block_grid(t.hhj.m, t.hhj.k)
                            .map_err(tag_field("tuning.hhj"))?;
                    }
                    Method::Nppi => t.nppi.validate(n).map_err(tag_field("tuning.nppi"))?,
                    Method::Pw => t.pw.validate(n).map_err(tag_field("tuning.pw.M"))?,
                }
            }
        }
        Ok(())
    }
}

/// Parses and validates a JSON config, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::ConfigParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
