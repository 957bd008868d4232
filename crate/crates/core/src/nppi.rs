//! Non-parametric plug-in selection.
//!
//! `B0` is estimated from the change of the bootstrap variance when the
//! block length doubles, `V0` from a jackknife-after-bootstrap variance of
//! the estimator at block length `l1`; both are plugged into
//! `(2 B0^2 / V0)^(1/3) n^(1/3)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hhj::ceil_power;
use crate::mbb::{
    block_means, check_block_length, exact_from_block_means, mbb_variance, monte_carlo_variance,
    shifted_block_means, BlockPool,
};
use crate::seed::{derive_seed, tag};
use crate::selection::{
    plug_in_block_length, usable_block_length, BlockSelection, Diagnostics, Method,
};
use crate::series::TimeSeries;
use crate::statistic::{check_series_dim, SmoothStatistic};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NppiConfig {
    /// Block length whose estimator variance is jackknifed.
    pub ell1: usize,
    /// Block length for the bias difference.
    pub ell2: usize,
    /// Number of consecutive blocks deleted per jackknife point.
    pub m_jab: usize,
    pub boot_budget: usize,
}

impl NppiConfig {
    /// `l1 = ceil(c1 n^(1/7))`, `l2 = ceil(c2 n^(1/7))`, `m = ceil(c_m n^(3/7))`.
    pub fn with_constants(n: usize, c_ell1: f64, c_ell2: f64, c_m_jab: f64) -> Self {
        Self {
            ell1: ceil_power(c_ell1, n, 1.0 / 7.0),
            ell2: ceil_power(c_ell2, n, 1.0 / 7.0),
            m_jab: ceil_power(c_m_jab, n, 3.0 / 7.0),
            boot_budget: 200,
        }
    }

    pub fn defaults_for(n: usize) -> Self {
        Self::with_constants(n, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_block_length(n, self.ell1)?;
        if self.ell2 == 0 || 2 * self.ell2 >= n {
            return Err(Error::InvalidBlockLength {
                block: 2 * self.ell2,
                n,
            });
        }
        check_jab_range(n - self.ell1 + 1, self.m_jab)?;
        if self.boot_budget < 2 {
            return Err(Error::InvalidParameter(
                "boot_budget must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

fn check_jab_range(blocks: usize, m_jab: usize) -> Result<()> {
    if m_jab == 0 || m_jab + 2 > blocks {
        return Err(Error::InvalidParameter(format!(
            "JAB deletion count {m_jab} must lie in [1, N - 2] with N = {blocks} blocks"
        )));
    }
    Ok(())
}

/// Combines the full estimate and the `M` block-deleted point values.
///
/// Pseudo-values `(N phi - (N - m) phi_i) / m`; result
/// `m / (N - m) * mean((pseudo_i - phi)^2)`.
pub fn jab_from_point_values(full: f64, deleted: &[f64], n_blocks: usize, m_jab: usize) -> f64 {
    let n_blocks = n_blocks as f64;
    let m = m_jab as f64;
    let ss: f64 = deleted
        .iter()
        .map(|&phi_i| {
            // pseudo_i - phi, rearranged so identical point values give exactly zero
            let d = (n_blocks - m) * (full - phi_i) / m;
            d * d
        })
        .sum();
    m / (n_blocks - m) * ss / deleted.len() as f64
}

/// Block-deleted MBB variance estimates `phi_i`, `i = 0..M`.
pub fn jab_point_values(
    series: &TimeSeries,
    ell: usize,
    m_jab: usize,
    stat: SmoothStatistic,
    boot_budget: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_series_dim(stat, series)?;
    let n = series.len();
    check_block_length(n, ell)?;
    let blocks = n - ell + 1;
    check_jab_range(blocks, m_jab)?;
    let points = blocks - m_jab + 1;

    if stat.is_mean() {
        let x = series.as_slice();
        let means = shifted_block_means(x, ell, x[0]);
        let (mut s1, mut s2) = (0.0, 0.0);
        let mut p1 = vec![0.0];
        let mut p2 = vec![0.0];
        for &u in &means {
            s1 += u;
            s2 += u * u;
            p1.push(s1);
            p2.push(s2);
        }
        let kept = (blocks - m_jab) as f64;
        return Ok((0..points)
            .map(|i| {
                let a1 = (s1 - (p1[i + m_jab] - p1[i])) / kept;
                let a2 = (s2 - (p2[i + m_jab] - p2[i])) / kept;
                (ell as f64 * (a2 - a1 * a1)).max(0.0)
            })
            .collect());
    }

    let means = block_means(series, ell)?;
    (0..points)
        .into_par_iter()
        .map(|i| {
            let pool = BlockPool::without(&means, i..i + m_jab);
            let s = derive_seed(seed, &[tag::JAB, i as u64]);
            Ok(monte_carlo_variance(&pool, n, stat, boot_budget, s)?.value)
        })
        .collect()
}

/// Jackknife-after-bootstrap variance of `sigma2_hat_n(l)`.
pub fn jab_variance(
    series: &TimeSeries,
    ell: usize,
    m_jab: usize,
    stat: SmoothStatistic,
    boot_budget: usize,
    seed: u64,
) -> Result<f64> {
    let deleted = jab_point_values(series, ell, m_jab, stat, boot_budget, seed)?;
    let full = if stat.is_mean() {
        let x = series.as_slice();
        exact_from_block_means(&shifted_block_means(x, ell, x[0]), ell)
    } else {
        mbb_variance(series, ell, stat, boot_budget, seed)?.value
    };
    Ok(jab_from_point_values(
        full,
        &deleted,
        series.len() - ell + 1,
        m_jab,
    ))
}

/// `2 (sigma2_hat_n(l2) - sigma2_hat_n(2 l2))`.
pub fn bias_hat(
    series: &TimeSeries,
    ell2: usize,
    stat: SmoothStatistic,
    boot_budget: usize,
    seed: u64,
) -> Result<f64> {
    let n = series.len();
    if ell2 == 0 || 2 * ell2 >= n {
        return Err(Error::InvalidBlockLength { block: 2 * ell2, n });
    }
    let short = mbb_variance(
        series,
        ell2,
        stat,
        boot_budget,
        derive_seed(seed, &[tag::BIAS_SHORT]),
    )?;
    let long = mbb_variance(
        series,
        2 * ell2,
        stat,
        boot_budget,
        derive_seed(seed, &[tag::BIAS_LONG]),
    )?;
    Ok(2.0 * (short.value - long.value))
}

pub fn nppi_select(
    series: &TimeSeries,
    stat: SmoothStatistic,
    config: &NppiConfig,
    seed: u64,
) -> Result<BlockSelection> {
    let n = series.len();
    config.validate(n)?;
    let var_hat = jab_variance(
        series,
        config.ell1,
        config.m_jab,
        stat,
        config.boot_budget,
        derive_seed(seed, &[tag::JAB]),
    )?;
    let bias = bias_hat(series, config.ell2, stat, config.boot_budget, seed)?;
    let b0_hat = config.ell2 as f64 * bias;
    let v0_hat = n as f64 / config.ell1 as f64 * var_hat;
    let diagnostics = Diagnostics::Nppi {
        b0_hat,
        v0_hat,
        var_hat,
        bias_hat: bias,
        ell1: config.ell1,
        ell2: config.ell2,
        m_jab: config.m_jab,
    };
    if b0_hat == 0.0 {
        return Ok(BlockSelection {
            method: Method::Nppi,
            block_length: 1,
            unrounded: 0.0,
            degenerate: true,
            diagnostics,
            warnings: vec!["bias estimate is zero; falling back to block length 1".into()],
        });
    }
    if !(v0_hat > 0.0) {
        return Err(Error::Degenerate(format!(
            "JAB variance estimate V0_hat = {v0_hat} is not positive; try a larger m_jab"
        )));
    }
    let unrounded = plug_in_block_length(b0_hat, v0_hat, n);
    Ok(BlockSelection {
        method: Method::Nppi,
        block_length: usable_block_length(unrounded, n),
        unrounded,
        degenerate: false,
        diagnostics,
        warnings: Vec::new(),
    })
}
