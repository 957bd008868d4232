//! Smooth-function-model statistics `theta_hat = H(mean(X))`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Denominators smaller than this in magnitude are rejected by `Ratio`.
pub const RATIO_DENOMINATOR_FLOOR: f64 = 1e-8;

/// A built-in smooth map `H: R^d -> R` with an analytic gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothStatistic {
    /// `H(x) = x`, d = 1.
    Mean,
    /// `H(x) = x1 * x2`, d = 2.
    CoordinateProduct,
    /// `H(x) = x1 / x2`, d = 2.
    Ratio,
}

impl SmoothStatistic {
    pub const ALL: [SmoothStatistic; 3] = [Self::Mean, Self::CoordinateProduct, Self::Ratio];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::CoordinateProduct => "coordinate_product",
            Self::Ratio => "ratio",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::Mean => 1,
            Self::CoordinateProduct | Self::Ratio => 2,
        }
    }

    pub fn is_mean(self) -> bool {
        self == Self::Mean
    }

    fn check_dim(self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    fn denominator(x2: f64) -> Result<f64> {
        if x2.abs() < RATIO_DENOMINATOR_FLOOR {
            Err(Error::DegenerateDenominator(x2))
        } else {
            Ok(x2)
        }
    }

    pub fn evaluate(self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self {
            Self::Mean => x[0],
            Self::CoordinateProduct => x[0] * x[1],
            Self::Ratio => x[0] / Self::denominator(x[1])?,
        })
    }

    pub fn gradient(self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(match self {
            Self::Mean => vec![1.0],
            Self::CoordinateProduct => vec![x[1], x[0]],
            Self::Ratio => {
                let den = Self::denominator(x[1])?;
                vec![1.0 / den, -x[0] / (den * den)]
            }
        })
    }
}

impl fmt::Display for SmoothStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SmoothStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|stat| stat.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown statistic {s:?} (expected mean, coordinate_product or ratio)"
                ))
            })
    }
}

/// Returns the built-in statistic; total over the enum.
pub fn builtin_statistic(name: SmoothStatistic) -> SmoothStatistic {
    name
}

/// `H` applied to the coordinatewise sample mean.
pub fn statistic_value(stat: SmoothStatistic, series: &TimeSeries) -> Result<f64> {
    check_series_dim(stat, series)?;
    stat.evaluate(&series.mean())
}

/// Where the gradient used for projection is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum Anchor<'a> {
    SampleMean,
    /// A known point, typically the true mean `mu` in simulations.
    Point(&'a [f64]),
}

/// `Y_i = g' X_i` with `g` the gradient of `H` at the anchor.
pub fn project_series(
    stat: SmoothStatistic,
    series: &TimeSeries,
    anchor: Anchor<'_>,
) -> Result<Vec<f64>> {
    check_series_dim(stat, series)?;
    let g = match anchor {
        Anchor::SampleMean => stat.gradient(&series.mean())?,
        Anchor::Point(p) => stat.gradient(p)?,
    };
    if g.len() == 1 && g[0] == 1.0 {
        return Ok(series.as_slice().to_vec());
    }
    Ok(series
        .rows()
        .map(|row| row.iter().zip(&g).map(|(x, w)| x * w).sum())
        .collect())
}

pub(crate) fn check_series_dim(stat: SmoothStatistic, series: &TimeSeries) -> Result<()> {
    if series.dim() != stat.dim() {
        return Err(Error::DimensionMismatch {
            expected: stat.dim(),
            found: series.dim(),
        });
    }
    Ok(())
}
