//! Moving block bootstrap variance estimation.
//!
//! For a block length `l` on `n` observations there are `N = n - l + 1`
//! overlapping blocks. A bootstrap series concatenates `k = floor(n / l)`
//! blocks drawn uniformly with replacement, so it has length `n1 = l k`
//! and its mean is the average of the `k` chosen block means. The estimator
//! is `n1 Var_*(H(resample mean))`.

use std::ops::Range;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};
use crate::series::TimeSeries;
use crate::statistic::{check_series_dim, SmoothStatistic};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MbbEstimate {
    pub value: f64,
    pub block_length: usize,
    /// Zero on the exact path.
    pub n_boot_samples: usize,
    pub monte_carlo_se: Option<f64>,
}

/// The `N = n - l + 1` overlapping block means, row-major `N x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMeans {
    values: Vec<f64>,
    dim: usize,
    block_length: usize,
}

impl BlockMeans {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }
}

pub(crate) fn check_block_length(n: usize, ell: usize) -> Result<()> {
    if ell == 0 || ell >= n {
        return Err(Error::InvalidBlockLength { block: ell, n });
    }
    Ok(())
}

/// Block means of `x - origin` via prefix sums, O(n).
pub(crate) fn shifted_block_means(x: &[f64], ell: usize, origin: f64) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(x.len() + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for &v in x {
        acc += v - origin;
        prefix.push(acc);
    }
    let inv = 1.0 / ell as f64;
    prefix
        .windows(ell + 1)
        .map(|w| (w[ell] - w[0]) * inv)
        .collect()
}

/// `l` times the population variance (divisor `N`) of the block means.
pub(crate) fn exact_from_block_means(means: &[f64], ell: usize) -> f64 {
    let count = means.len() as f64;
    let mean = means.iter().sum::<f64>() / count;
    let ss: f64 = means.iter().map(|u| (u - mean) * (u - mean)).sum();
    ell as f64 * ss / count
}

pub fn block_means(series: &TimeSeries, ell: usize) -> Result<BlockMeans> {
    let n = series.len();
    check_block_length(n, ell)?;
    let d = series.dim();
    let count = n - ell + 1;
    let mut values = vec![0.0; count * d];
    for j in 0..d {
        let col = series.column(j);
        let origin = col[0];
        for (i, u) in shifted_block_means(&col, ell, origin)
            .into_iter()
            .enumerate()
        {
            values[i * d + j] = u + origin;
        }
    }
    Ok(BlockMeans {
        values,
        dim: d,
        block_length: ell,
    })
}

/// Closed-form MBB variance for the sample mean of a scalar series.
pub fn mbb_variance_mean_exact(series: &TimeSeries, ell: usize) -> Result<MbbEstimate> {
    check_series_dim(SmoothStatistic::Mean, series)?;
    check_block_length(series.len(), ell)?;
    let x = series.as_slice();
    let means = shifted_block_means(x, ell, x[0]);
    Ok(MbbEstimate {
        value: exact_from_block_means(&means, ell),
        block_length: ell,
        n_boot_samples: 0,
        monte_carlo_se: None,
    })
}

/// Draws uniform block indices, optionally skipping a run of deleted blocks.
#[derive(Debug, Clone)]
pub(crate) struct BlockPool<'a> {
    means: &'a BlockMeans,
    deleted: Range<usize>,
}

impl<'a> BlockPool<'a> {
    pub(crate) fn full(means: &'a BlockMeans) -> Self {
        Self {
            means,
            deleted: 0..0,
        }
    }

    pub(crate) fn without(means: &'a BlockMeans, deleted: Range<usize>) -> Self {
        Self { means, deleted }
    }

    #[inline]
    fn draw<R: Rng>(&self, rng: &mut R) -> usize {
        let gap = self.deleted.len();
        let u = rng.random_range(0..self.means.len() - gap);
        if u >= self.deleted.start {
            u + gap
        } else {
            u
        }
    }
}

/// Monte Carlo realisation of `n1 Var_*`; replicate `r` uses stream `derive_seed(seed, [r])`.
pub(crate) fn monte_carlo_variance(
    pool: &BlockPool<'_>,
    n: usize,
    stat: SmoothStatistic,
    n_boot: usize,
    seed: u64,
) -> Result<MbbEstimate> {
    if n_boot < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_boot must be at least 2, got {n_boot}"
        )));
    }
    let ell = pool.means.block_length();
    let blocks = n / ell;
    let n1 = (ell * blocks) as f64;
    let d = pool.means.dim();
    let replicates: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, &[r as u64]));
            let mut acc = vec![0.0; d];
            for _ in 0..blocks {
                let u = pool.means.get(pool.draw(&mut rng));
                for (a, v) in acc.iter_mut().zip(u) {
                    *a += v;
                }
            }
            acc.iter_mut().for_each(|a| *a /= blocks as f64);
            stat.evaluate(&acc)
        })
        .collect::<Result<_>>()?;

    let b = n_boot as f64;
    let origin = replicates[0];
    let mean = origin + replicates.iter().map(|t| t - origin).sum::<f64>() / b;
    let (ss, m4) = replicates.iter().fold((0.0, 0.0), |(s2, s4), t| {
        let dev2 = (t - mean) * (t - mean);
        (s2 + dev2, s4 + dev2 * dev2)
    });
    let var = ss / (b - 1.0);
    let m4 = m4 / b;
    // standard error of the unbiased sample variance
    let se2 = (m4 - var * var * (b - 3.0) / (b - 1.0)) / b;
    Ok(MbbEstimate {
        value: n1 * var,
        block_length: ell,
        n_boot_samples: n_boot,
        monte_carlo_se: Some(n1 * se2.max(0.0).sqrt()),
    })
}

/// Monte Carlo MBB variance of `H(mean)` with `n_boot` resamples.
pub fn mbb_variance_general(
    series: &TimeSeries,
    ell: usize,
    stat: SmoothStatistic,
    n_boot: usize,
    seed: u64,
) -> Result<MbbEstimate> {
    check_series_dim(stat, series)?;
    let means = block_means(series, ell)?;
    monte_carlo_variance(&BlockPool::full(&means), series.len(), stat, n_boot, seed)
}

/// Exact path for the mean statistic, Monte Carlo with `budget` resamples otherwise.
pub fn mbb_variance(
    series: &TimeSeries,
    ell: usize,
    stat: SmoothStatistic,
    budget: usize,
    seed: u64,
) -> Result<MbbEstimate> {
    if stat.is_mean() {
        mbb_variance_mean_exact(series, ell)
    } else {
        mbb_variance_general(series, ell, stat, budget, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(v: &[f64]) -> TimeSeries {
        TimeSeries::scalar(v.to_vec()).unwrap()
    }

    #[test]
    fn block_mean_examples() {
        let s = scalar(&[1.0, 2.0, 3.0, 4.0]);
        let m = block_means(&s, 2).unwrap();
        assert_eq!(
            m.iter().map(|u| u[0]).collect::<Vec<_>>(),
            vec![1.5, 2.5, 3.5]
        );
        let m = block_means(&s, 1).unwrap();
        assert_eq!(
            m.iter().map(|u| u[0]).collect::<Vec<_>>(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert!(matches!(
            block_means(&s, 4),
            Err(Error::InvalidBlockLength { block: 4, n: 4 })
        ));
        assert!(block_means(&s, 0).is_err());
    }

    #[test]
    fn single_block_of_full_length() {
        // l = n is rejected by the estimator but the averaging itself is trivial
        let u = shifted_block_means(&[1.0, 2.0, 3.0, 4.0], 4, 0.0);
        assert_eq!(u, vec![2.5]);
    }

    #[test]
    fn exact_examples() {
        let s = scalar(&[1.0, 2.0, 3.0, 4.0]);
        assert!((mbb_variance_mean_exact(&s, 2).unwrap().value - 4.0 / 3.0).abs() < 1e-15);
        assert!((mbb_variance_mean_exact(&s, 1).unwrap().value - 1.25).abs() < 1e-15);
        let c = scalar(&[3.7; 12]);
        for ell in 1..12 {
            assert_eq!(mbb_variance_mean_exact(&c, ell).unwrap().value, 0.0);
        }
    }

    #[test]
    fn monte_carlo_matches_exact_on_small_series() {
        let s = scalar(&[1.0, 2.0, 3.0, 4.0]);
        let est = mbb_variance_general(&s, 2, SmoothStatistic::Mean, 100_000, 11).unwrap();
        let se = est.monte_carlo_se.unwrap();
        assert!((est.value - 4.0 / 3.0).abs() < 3.0 * se, "{est:?}");
        assert_eq!(est.n_boot_samples, 100_000);
    }

    #[test]
    fn monte_carlo_constant_and_determinism() {
        let c = TimeSeries::from_rows(&vec![vec![2.0, 5.0]; 10]).unwrap();
        for stat in [SmoothStatistic::CoordinateProduct, SmoothStatistic::Ratio] {
            let est = mbb_variance_general(&c, 3, stat, 50, 1).unwrap();
            assert_eq!(est.value, 0.0);
        }
        let s = crate::process::ProcessModel::ar1(0.5, 1.0)
            .with_mean(3.0)
            .with_pairing(crate::process::Pairing::Independent)
            .generate(200, 4)
            .unwrap();
        let a = mbb_variance_general(&s, 5, SmoothStatistic::Ratio, 300, 77).unwrap();
        let b = mbb_variance_general(&s, 5, SmoothStatistic::Ratio, 300, 77).unwrap();
        assert_eq!(a, b);
        assert!(mbb_variance_general(&s, 5, SmoothStatistic::Ratio, 1, 77).is_err());
    }

    #[test]
    fn dispatch_matches_paths() {
        let s = crate::process::ProcessModel::ar1(0.5, 1.0)
            .generate(300, 1)
            .unwrap();
        assert_eq!(
            mbb_variance(&s, 7, SmoothStatistic::Mean, 10, 0).unwrap(),
            mbb_variance_mean_exact(&s, 7).unwrap()
        );
        let p = crate::process::ProcessModel::ar1(0.5, 1.0)
            .with_mean(1.0)
            .with_pairing(crate::process::Pairing::Independent)
            .generate(300, 1)
            .unwrap();
        assert_eq!(
            mbb_variance(&p, 7, SmoothStatistic::CoordinateProduct, 64, 5).unwrap(),
            mbb_variance_general(&p, 7, SmoothStatistic::CoordinateProduct, 64, 5).unwrap()
        );
    }

    #[test]
    fn monte_carlo_consistency_random_cases() {
        let model = crate::process::ProcessModel::ar1(0.5, 1.0);
        for case in 0..20u64 {
            let n = 40 + 13 * case as usize;
            let s = model.generate(n, 1000 + case).unwrap();
            let ell = 1 + (case as usize % 7);
            let exact = mbb_variance_mean_exact(&s, ell).unwrap().value;
            let mc = mbb_variance_general(&s, ell, SmoothStatistic::Mean, 10_000, case).unwrap();
            let se = mc.monte_carlo_se.unwrap();
            assert!(
                (mc.value - exact).abs() < 4.0 * se,
                "case {case}: {mc:?} vs {exact}"
            );
        }
    }

    proptest! {
        #[test]
        fn location_and_scale(
            values in proptest::collection::vec(-10.0f64..10.0, 8..60),
            shift in -1e3f64..1e3,
            scale in 0.1f64..10.0,
            ell_seed in 0usize..100,
        ) {
            let s = TimeSeries::scalar(values).unwrap();
            let ell = 1 + ell_seed % (s.len() - 1);
            let base = mbb_variance_mean_exact(&s, ell).unwrap().value;
            let shifted = mbb_variance_mean_exact(&s.map(|x| x + shift).unwrap(), ell).unwrap().value;
            prop_assert!((base - shifted).abs() < 1e-10 * base.max(1.0));
            let scaled = mbb_variance_mean_exact(&s.map(|x| x * scale).unwrap(), ell).unwrap().value;
            prop_assert!((scaled - scale * scale * base).abs() < 1e-10 * scaled.max(1.0));
            prop_assert!(base >= 0.0);
        }
    }
}
