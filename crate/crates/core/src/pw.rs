//! Flat-top lag-window plug-in selection for smooth-function statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hhj::ceil_power;
use crate::selection::{
    plug_in_block_length, usable_block_length, BlockSelection, Diagnostics, Method,
};
use crate::series::TimeSeries;
use crate::statistic::{project_series, Anchor, SmoothStatistic};

pub const DEFAULT_TAU: f64 = 0.2;

/// Trapezoidal flat-top window: 1 on `|t| <= 1/2`, `2(1 - |t|)` on `(1/2, 1]`, 0 beyond.
pub fn flat_top_lambda(t: f64) -> f64 {
    let a = t.abs();
    if a <= 0.5 {
        1.0
    } else if a <= 1.0 {
        2.0 * (1.0 - a)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwConfig {
    /// Bandwidth `M`; lags up to `2M` enter the sums.
    #[serde(rename = "M")]
    pub bandwidth: usize,
}

impl PwConfig {
    /// `M = ceil(n^tau)` for `tau` in `[0.1, 1/3]`.
    pub fn from_tau(n: usize, tau: f64) -> Result<Self> {
        if !(0.1 - 1e-12..=1.0 / 3.0 + 1e-12).contains(&tau) {
            return Err(Error::InvalidParameter(format!(
                "tau = {tau} outside [0.1, 1/3]"
            )));
        }
        Ok(Self {
            bandwidth: ceil_power(1.0, n, tau),
        })
    }

    pub fn defaults_for(n: usize) -> Self {
        Self::from_tau(n, DEFAULT_TAU).expect("default tau is in range")
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.bandwidth == 0 || 2 * self.bandwidth >= n {
            return Err(Error::InvalidParameter(format!(
                "bandwidth M = {} requires 1 <= M and 2M < n = {n}",
                self.bandwidth
            )));
        }
        Ok(())
    }
}

/// Lag-`k` sample autocovariance matrix (divisor `n`), rows indexed by the
/// leading observation: `r(k)[a][b] = n^-1 sum (X_i,a - mean_a)(X_{i+k},b - mean_b)`.
/// For negative `k` this is the transpose of `r(|k|)`.
pub fn sample_autocov(series: &TimeSeries, k: i64) -> Result<Vec<Vec<f64>>> {
    let n = series.len();
    let lag = k.unsigned_abs() as usize;
    if lag >= n {
        return Err(Error::InvalidParameter(format!(
            "lag {k} out of range for series of length {n}"
        )));
    }
    let d = series.dim();
    let mean = series.mean();
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..n - lag {
        let lead = series.row(i);
        let trail = series.row(i + lag);
        for a in 0..d {
            for b in 0..d {
                out[a][b] += (lead[a] - mean[a]) * (trail[b] - mean[b]);
            }
        }
    }
    for row in &mut out {
        row.iter_mut().for_each(|v| *v /= n as f64);
    }
    if k < 0 {
        let t: Vec<Vec<f64>> = (0..d)
            .map(|a| (0..d).map(|b| out[b][a]).collect())
            .collect();
        return Ok(t);
    }
    Ok(out)
}

/// Scalar autocovariances `r(0..=max_lag)` of `y`, divisor `n`.
pub fn scalar_autocovariances(y: &[f64], max_lag: usize) -> Vec<f64> {
    let n = y.len();
    let origin = y[0];
    let mean = origin + y.iter().map(|v| v - origin).sum::<f64>() / n as f64;
    let centred: Vec<f64> = y.iter().map(|v| v - mean).collect();
    (0..=max_lag.min(n - 1))
        .map(|k| {
            centred[..n - k]
                .iter()
                .zip(&centred[k..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwEstimates {
    /// `sum_{|k|<=2M} lambda(k/2M) |k| r_Y(k)`.
    pub b0_hat: f64,
    /// `sum_{|k|<=2M} lambda(k/2M) r_Y(k)`, the long-run variance estimate.
    pub g_hat: f64,
    /// `(4/3) g_hat^2`.
    pub v0_hat: f64,
}

/// Weighted sums from projected autocovariances `r_Y(0..=2M)`.
pub fn pw_estimates_from_autocov(r_y: &[f64], bandwidth: usize) -> PwEstimates {
    let span = 2 * bandwidth;
    let mut b0_hat = 0.0;
    let mut g_hat = r_y[0];
    for (k, &r) in r_y.iter().enumerate().take(span + 1).skip(1) {
        let w = flat_top_lambda(k as f64 / span as f64);
        g_hat += 2.0 * w * r;
        b0_hat += 2.0 * w * k as f64 * r;
    }
    PwEstimates {
        b0_hat,
        g_hat,
        v0_hat: 4.0 / 3.0 * g_hat * g_hat,
    }
}

/// Flat-top estimates of `B0`, the long-run variance and `V0` for `Y_i = grad H(mean)' X_i`.
pub fn pw_estimates(
    series: &TimeSeries,
    stat: SmoothStatistic,
    bandwidth: usize,
) -> Result<PwEstimates> {
    let n = series.len();
    PwConfig { bandwidth }.validate(n)?;
    let y = project_series(stat, series, Anchor::SampleMean)?;
    Ok(pw_estimates_from_autocov(
        &scalar_autocovariances(&y, 2 * bandwidth),
        bandwidth,
    ))
}

pub fn pw_select(
    series: &TimeSeries,
    stat: SmoothStatistic,
    config: &PwConfig,
) -> Result<BlockSelection> {
    let n = series.len();
    let est = pw_estimates(series, stat, config.bandwidth)?;
    if !(est.g_hat > 0.0) {
        return Err(Error::Degenerate(format!(
            "long-run variance estimate {} is not positive (bandwidth {} too large?)",
            est.g_hat, config.bandwidth
        )));
    }
    let diagnostics = Diagnostics::Pw {
        b0_hat: est.b0_hat,
        g_hat: est.g_hat,
        v0_hat: est.v0_hat,
        bandwidth: config.bandwidth,
    };
    if est.b0_hat == 0.0 {
        return Ok(BlockSelection {
            method: Method::Pw,
            block_length: 1,
            unrounded: 0.0,
            degenerate: true,
            diagnostics,
            warnings: vec!["bias estimate is zero; falling back to block length 1".into()],
        });
    }
    let unrounded = plug_in_block_length(est.b0_hat, est.v0_hat, n);
    Ok(BlockSelection {
        method: Method::Pw,
        block_length: usable_block_length(unrounded, n),
        unrounded,
        degenerate: false,
        diagnostics,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{Pairing, ProcessModel};
    use proptest::prelude::*;

    #[test]
    fn lambda_values() {
        assert_eq!(flat_top_lambda(0.25), 1.0);
        assert_eq!(flat_top_lambda(0.5), 1.0);
        assert_eq!(flat_top_lambda(0.75), 0.5);
        assert_eq!(flat_top_lambda(-0.75), 0.5);
        assert_eq!(flat_top_lambda(1.0), 0.0);
        assert_eq!(flat_top_lambda(1.2), 0.0);
    }

    #[test]
    fn autocov_examples() {
        let s = TimeSeries::scalar(vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        assert_eq!(sample_autocov(&s, 0).unwrap(), vec![vec![1.0]]);
        assert_eq!(sample_autocov(&s, 1).unwrap(), vec![vec![-0.75]]);
        assert!(sample_autocov(&s, 4).is_err());
        assert!(sample_autocov(&s, -4).is_err());
    }

    #[test]
    fn negative_lag_is_transpose() {
        let s = ProcessModel::ar1(0.5, 1.0)
            .with_pairing(Pairing::Lag)
            .generate(50, 1)
            .unwrap();
        let pos = sample_autocov(&s, 3).unwrap();
        let neg = sample_autocov(&s, -3).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(pos[a][b], neg[b][a]);
            }
        }
    }

    #[test]
    fn synthetic_estimates() {
        let est = pw_estimates_from_autocov(&[1.0, 0.5, 0.0], 1);
        assert!((est.b0_hat - 1.0).abs() < 1e-15);
        assert!((est.g_hat - 2.0).abs() < 1e-15);
        assert!((est.v0_hat - 16.0 / 3.0).abs() < 1e-14);
        let n = 1000;
        let l = plug_in_block_length(est.b0_hat, est.v0_hat, n);
        assert!((l - 0.375f64.cbrt() * 10.0).abs() < 1e-12);
        assert_eq!(usable_block_length(l, n), 7);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = TimeSeries::scalar(vec![4.2; 30]).unwrap();
        let est = pw_estimates(&s, SmoothStatistic::Mean, 2).unwrap();
        assert_eq!((est.b0_hat, est.g_hat, est.v0_hat), (0.0, 0.0, 0.0));
        assert!(matches!(
            pw_select(&s, SmoothStatistic::Mean, &PwConfig { bandwidth: 2 }),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn projected_sums_match_matrix_form() {
        let model = ProcessModel::ar1(0.5, 1.0)
            .with_mean(1.5)
            .with_pairing(Pairing::Independent);
        let s = model.generate(400, 3).unwrap();
        for stat in [SmoothStatistic::CoordinateProduct, SmoothStatistic::Ratio] {
            let g = stat.gradient(&s.mean()).unwrap();
            let bw = 4;
            let mut b0 = 0.0;
            let mut gs = 0.0;
            for k in -(2 * bw as i64)..=(2 * bw as i64) {
                let r = sample_autocov(&s, k).unwrap();
                let q: f64 = (0..2)
                    .map(|a| (0..2).map(|b| g[a] * r[a][b] * g[b]).sum::<f64>())
                    .sum();
                let w = flat_top_lambda(k as f64 / (2 * bw) as f64);
                b0 += w * k.abs() as f64 * q;
                gs += w * q;
            }
            let est = pw_estimates(&s, stat, bw).unwrap();
            assert!(
                (est.b0_hat - b0).abs() < 1e-10 * b0.abs().max(1.0),
                "{stat}"
            );
            assert!((est.g_hat - gs).abs() < 1e-10 * gs.abs().max(1.0), "{stat}");
        }
    }

    #[test]
    fn bandwidth_bounds() {
        let s = TimeSeries::scalar((0..10).map(f64::from).collect()).unwrap();
        assert!(pw_estimates(&s, SmoothStatistic::Mean, 5).is_err());
        assert!(pw_estimates(&s, SmoothStatistic::Mean, 4).is_ok());
        assert_eq!(PwConfig::defaults_for(4000).bandwidth, 6);
        assert_eq!(PwConfig::defaults_for(500).bandwidth, 4);
        assert!(PwConfig::from_tau(100, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn lambda_shape(t in -3.0f64..3.0) {
            let v = flat_top_lambda(t);
            prop_assert_eq!(v, flat_top_lambda(-t));
            prop_assert!((0.0..=1.0).contains(&v));
            if t.abs() <= 0.5 { prop_assert_eq!(v, 1.0); }
            // Lipschitz with constant 2
            prop_assert!((flat_top_lambda(t + 1e-6) - v).abs() <= 2.0e-6 + 1e-15);
        }

        #[test]
        fn location_and_scale_invariance(seed in 0u64..1000, shift in -100.0f64..100.0, scale in 0.2f64..5.0) {
            let s = ProcessModel::ar1(0.5, 1.0).generate(300, seed).unwrap();
            let cfg = PwConfig { bandwidth: 4 };
            let base = pw_estimates(&s, SmoothStatistic::Mean, 4).unwrap();
            let shifted = pw_estimates(&s.map(|x| x + shift).unwrap(), SmoothStatistic::Mean, 4).unwrap();
            prop_assert!((base.g_hat - shifted.g_hat).abs() < 1e-9 * base.g_hat.abs().max(1.0));
            prop_assert!((base.b0_hat - shifted.b0_hat).abs() < 1e-9 * base.b0_hat.abs().max(1.0));
            if let (Ok(a), Ok(b)) = (pw_select(&s, SmoothStatistic::Mean, &cfg), pw_select(&s.map(|x| x * scale).unwrap(), SmoothStatistic::Mean, &cfg)) {
                prop_assert!((a.unrounded - b.unrounded).abs() <= 1e-9 * a.unrounded);
            }
        }
    }
}
