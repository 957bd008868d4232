//! Types shared by the selectors: MSE curves and selection results.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// Subsampling MSE centred at a pilot estimate.
    Empirical,
    /// Subsampling MSE centred at the true long-run variance.
    Oracle,
    /// Monte Carlo MSE over independent series.
    TrueMc,
    /// The asymptotic approximation `B0^2 / l^2 + V0 l / n`.
    Analytic,
}

/// Block length -> MSE estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseCurve {
    pub entries: BTreeMap<usize, f64>,
    /// Sample (or subsample) length the curve refers to.
    pub m: usize,
    pub kind: CurveKind,
}

impl MseCurve {
    pub fn new(kind: CurveKind, m: usize) -> Self {
        Self {
            entries: BTreeMap::new(),
            m,
            kind,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, block: usize) -> Option<f64> {
        self.entries.get(&block).copied()
    }

    /// Block length with the smallest estimate; ties go to the smallest block.
    pub fn argmin(&self) -> Result<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (&b, &v) in &self.entries {
            match best {
                Some((_, bv)) if !(v < bv) => {}
                _ => best = Some((b, v)),
            }
        }
        best.map(|(b, _)| b).ok_or(Error::EmptyCurve)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hhj,
    HhjOracle,
    Nppi,
    Pw,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Hhj, Method::HhjOracle, Method::Nppi, Method::Pw];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hhj => "hhj",
            Method::HhjOracle => "hhj_oracle",
            Method::Nppi => "nppi",
            Method::Pw => "pw",
        }
    }

    /// Exponent of the optimal relative-error rate `n^slope`.
    pub fn theoretical_slope(self) -> f64 {
        match self {
            Method::Hhj | Method::HhjOracle => -1.0 / 6.0,
            Method::Nppi => -2.0 / 7.0,
            Method::Pw => -1.0 / 3.0,
        }
    }

    pub fn needs_truth(self) -> bool {
        self == Method::HhjOracle
    }

    pub(crate) fn tag(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Per-method intermediate quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Diagnostics {
    Hhj {
        m: usize,
        pilot_block: Option<usize>,
        /// Centre of the subsampling MSE: pilot estimate or true long-run variance.
        center: f64,
        k: f64,
        b_hat: usize,
        curve: MseCurve,
    },
    Nppi {
        b0_hat: f64,
        v0_hat: f64,
        var_hat: f64,
        bias_hat: f64,
        ell1: usize,
        ell2: usize,
        m_jab: usize,
    },
    Pw {
        b0_hat: f64,
        g_hat: f64,
        v0_hat: f64,
        bandwidth: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSelection {
    pub method: Method,
    pub block_length: usize,
    /// The estimate before rounding and clamping.
    pub unrounded: f64,
    /// Set when the bias estimate vanished and the block length fell back to 1.
    pub degenerate: bool,
    pub diagnostics: Diagnostics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Round half up, then clamp to `[1, floor(n / 3)]`.
pub fn usable_block_length(x: f64, n: usize) -> usize {
    let upper = (n / 3).max(1);
    if !x.is_finite() {
        return if x > 0.0 { upper } else { 1 };
    }
    let r = (x + 0.5).floor();
    if r < 1.0 {
        1
    } else if r >= upper as f64 {
        upper
    } else {
        r as usize
    }
}

/// `(2 B0^2 / V0)^(1/3) n^(1/3)`.
pub fn plug_in_block_length(b0: f64, v0: f64, n: usize) -> f64 {
    (2.0 * b0 * b0 / v0).cbrt() * (n as f64).cbrt()
}
