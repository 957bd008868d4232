//! Synthetic stationary Gaussian processes with closed-form dependence constants.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};
use crate::series::TimeSeries;
use crate::statistic::SmoothStatistic;

/// Steps discarded after the stationary start of an AR(1) path.
pub const AR1_BURN_IN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    /// `X_t = phi X_{t-1} + e_t`, `e_t ~ N(0, sigma^2)`.
    Ar1 { phi: f64, sigma: f64 },
    /// `X_t = e_t + c_1 e_{t-1} + ... + c_q e_{t-q}`.
    Ma { coefficients: Vec<f64>, sigma: f64 },
    /// Moving sum of `order + 1` consecutive innovations; `order = 0` is white noise.
    MDependent { order: usize, sigma: f64 },
}

/// How a scalar process is lifted to the two-dimensional statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Two independent draws of the same process, one per coordinate.
    Independent,
    /// `Z_i = (X_i, X_{i+1})`. No closed-form constants.
    Lag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    #[serde(flatten)]
    pub kind: ProcessKind,
    /// Location added to every coordinate.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<Pairing>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalConstants {
    /// Long-run variance `sum_k r(k)`.
    pub sigma_inf_sq: f64,
    /// `sum_k |k| r(k)`.
    pub b0: f64,
    /// `(4/3) sigma_inf_sq^2`.
    pub v0: f64,
    /// `(2 b0^2 / v0)^(1/3)`.
    pub c0: f64,
}

impl TheoreticalConstants {
    /// Builds the constants from the two covariance sums.
    pub fn from_sums(sigma_inf_sq: f64, b0: f64) -> Result<Self> {
        if b0 == 0.0 {
            return Err(Error::ZeroBias);
        }
        if !(sigma_inf_sq > 0.0) {
            return Err(Error::Degenerate(format!(
                "long-run variance {sigma_inf_sq} is not positive"
            )));
        }
        let v0 = 4.0 / 3.0 * sigma_inf_sq * sigma_inf_sq;
        let c0 = (2.0 * b0 * b0 / v0).cbrt();
        Ok(Self {
            sigma_inf_sq,
            b0,
            v0,
            c0,
        })
    }

    /// `(b0, v0)` given directly, e.g. for the analytic MSE curve.
    pub fn from_b0_v0(b0: f64, v0: f64) -> Result<Self> {
        if !(v0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "V0 = {v0} must be positive"
            )));
        }
        Ok(Self {
            sigma_inf_sq: (0.75 * v0).sqrt(),
            b0,
            v0,
            c0: (2.0 * b0 * b0 / v0).cbrt(),
        })
    }
}

impl ProcessModel {
    pub fn new(kind: ProcessKind) -> Self {
        Self {
            kind,
            mean: 0.0,
            pairing: None,
        }
    }

    pub fn ar1(phi: f64, sigma: f64) -> Self {
        Self::new(ProcessKind::Ar1 { phi, sigma })
    }

    pub fn ma(coefficients: Vec<f64>, sigma: f64) -> Self {
        Self::new(ProcessKind::Ma {
            coefficients,
            sigma,
        })
    }

    pub fn m_dependent(order: usize, sigma: f64) -> Self {
        Self::new(ProcessKind::MDependent { order, sigma })
    }

    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean = mean;
        self
    }

    pub fn with_pairing(mut self, pairing: Pairing) -> Self {
        self.pairing = Some(pairing);
        self
    }

    pub fn dim(&self) -> usize {
        if self.pairing.is_some() {
            2
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sigma = match &self.kind {
            ProcessKind::Ar1 { phi, sigma } => {
                if !(phi.abs() < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "ar1 requires |phi| < 1, got {phi}"
                    )));
                }
                *sigma
            }
            ProcessKind::Ma {
                coefficients,
                sigma,
            } => {
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "ma coefficients must be finite".into(),
                    ));
                }
                *sigma
            }
            ProcessKind::MDependent { sigma, .. } => *sigma,
        };
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if !self.mean.is_finite() {
            return Err(Error::InvalidParameter("mean must be finite".into()));
        }
        Ok(())
    }

    /// MA weights `c_0 = 1, c_1, ..., c_q` for the moving-average kinds.
    fn ma_weights(&self) -> Option<(Vec<f64>, f64)> {
        match &self.kind {
            ProcessKind::Ar1 { .. } => None,
            ProcessKind::Ma {
                coefficients,
                sigma,
            } => {
                let mut w = vec![1.0];
                w.extend_from_slice(coefficients);
                Some((w, *sigma))
            }
            ProcessKind::MDependent { order, sigma } => Some((vec![1.0; order + 1], *sigma)),
        }
    }

    fn generate_scalar(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        let mut normal = move || -> f64 { rng.sample(StandardNormal) };
        match &self.kind {
            ProcessKind::Ar1 { phi, sigma } => {
                let mut x = normal() * sigma / (1.0 - phi * phi).sqrt();
                for _ in 0..AR1_BURN_IN {
                    x = phi * x + sigma * normal();
                }
                (0..n)
                    .map(|_| {
                        x = phi * x + sigma * normal();
                        x + self.mean
                    })
                    .collect()
            }
            _ => {
                let (w, sigma) = self.ma_weights().expect("moving-average kind");
                let q = w.len() - 1;
                let eps: Vec<f64> = (0..n + q).map(|_| sigma * normal()).collect();
                (0..n)
                    .map(|t| {
                        let s: f64 = w.iter().enumerate().map(|(j, c)| c * eps[t + q - j]).sum();
                        s + self.mean
                    })
                    .collect()
            }
        }
    }

    /// A length-`n` stationary draw; bit-identical for identical `(self, n, seed)`.
    pub fn generate(&self, n: usize, seed: u64) -> Result<TimeSeries> {
        self.validate()?;
        if n < 2 {
            return Err(Error::SeriesTooShort(n));
        }
        match self.pairing {
            None => TimeSeries::scalar(self.generate_scalar(n, seed)),
            Some(Pairing::Independent) => {
                let a = self.generate_scalar(n, derive_seed(seed, &[0]));
                let b = self.generate_scalar(n, derive_seed(seed, &[1]));
                let data = a.into_iter().zip(b).flat_map(|(x, y)| [x, y]).collect();
                TimeSeries::new(data, 2)
            }
            Some(Pairing::Lag) => {
                let x = self.generate_scalar(n + 1, seed);
                let data = x.windows(2).flat_map(|w| [w[0], w[1]]).collect();
                TimeSeries::new(data, 2)
            }
        }
    }

    /// Autocovariance `r(k)` of one scalar coordinate (the mean statistic's projection).
    pub fn true_autocovariance(&self, k: i64) -> f64 {
        let k = k.unsigned_abs() as usize;
        match &self.kind {
            ProcessKind::Ar1 { phi, sigma } => {
                sigma * sigma * phi.powi(k as i32) / (1.0 - phi * phi)
            }
            _ => {
                let (w, sigma) = self.ma_weights().expect("moving-average kind");
                if k >= w.len() {
                    return 0.0;
                }
                sigma * sigma * w.iter().zip(&w[k..]).map(|(a, b)| a * b).sum::<f64>()
            }
        }
    }

    fn scalar_sums(&self) -> (f64, f64) {
        match &self.kind {
            ProcessKind::Ar1 { phi, sigma } => {
                let s2 = sigma * sigma;
                let lrv = s2 / ((1.0 - phi) * (1.0 - phi));
                let b0 = 2.0 * s2 * phi / ((1.0 - phi * phi) * (1.0 - phi) * (1.0 - phi));
                (lrv, b0)
            }
            _ => {
                let (w, sigma) = self.ma_weights().expect("moving-average kind");
                let total: f64 = w.iter().sum();
                let lrv = sigma * sigma * total * total;
                let b0 = 2.0
                    * (1..w.len())
                        .map(|k| k as f64 * self.true_autocovariance(k as i64))
                        .sum::<f64>();
                (lrv, b0)
            }
        }
    }

    /// Closed-form constants for the scalar process under the mean statistic.
    pub fn theoretical_constants(&self) -> Result<TheoreticalConstants> {
        self.validate()?;
        let (lrv, b0) = self.scalar_sums();
        let r0 = self.true_autocovariance(0);
        if b0.abs() <= 1e-14 * r0 {
            return Err(Error::ZeroBias);
        }
        TheoreticalConstants::from_sums(lrv, b0)
    }

    /// Constants for the projected series `Y = grad H(mu)' X` under `stat`.
    ///
    /// With independent pairing the coordinates are uncorrelated copies, so
    /// `r_Y(k) = |grad|^2 r(k)` and both covariance sums scale by `|grad|^2`.
    pub fn theoretical_constants_for(&self, stat: SmoothStatistic) -> Result<TheoreticalConstants> {
        if stat.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: stat.dim(),
                found: self.dim(),
            });
        }
        match self.pairing {
            None => self.theoretical_constants(),
            Some(Pairing::Lag) => Err(Error::NoAnalyticTruth),
            Some(Pairing::Independent) => {
                self.validate()?;
                let g = stat.gradient(&[self.mean, self.mean])?;
                let scale: f64 = g.iter().map(|x| x * x).sum();
                let (lrv, b0) = self.scalar_sums();
                if scale == 0.0 || b0.abs() <= 1e-14 * self.true_autocovariance(0) {
                    return Err(Error::ZeroBias);
                }
                TheoreticalConstants::from_sums(scale * lrv, scale * b0)
            }
        }
    }

    /// The true mean vector `mu`.
    pub fn true_mean(&self) -> Vec<f64> {
        vec![self.mean; self.dim()]
    }
}

/// `C0 n^(1/3)`, not rounded.
pub fn optimal_block_approx(constants: &TheoreticalConstants, n: usize) -> f64 {
    constants.c0 * (n as f64).cbrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truncated_sums(model: &ProcessModel, k_max: i64) -> (f64, f64) {
        let mut lrv = 0.0;
        let mut b0 = 0.0;
        for k in -k_max..=k_max {
            let r = model.true_autocovariance(k);
            lrv += r;
            b0 += k.abs() as f64 * r;
        }
        (lrv, b0)
    }

    #[test]
    fn ar1_constants() {
        let model = ProcessModel::ar1(0.5, 1.0);
        let c = model.theoretical_constants().unwrap();
        assert!((c.sigma_inf_sq - 4.0).abs() < 1e-12);
        assert!((c.b0 - 16.0 / 3.0).abs() < 1e-12);
        assert!((c.v0 - 64.0 / 3.0).abs() < 1e-12);
        assert!((c.c0 - (8.0f64 / 3.0).cbrt()).abs() < 1e-12);
        let (lrv, b0) = truncated_sums(&model, 10_000);
        assert!((lrv - c.sigma_inf_sq).abs() < 1e-8);
        assert!((b0 - c.b0).abs() < 1e-8);
    }

    #[test]
    fn ar1_autocovariance() {
        let model = ProcessModel::ar1(0.5, 1.0);
        assert!((model.true_autocovariance(0) - 4.0 / 3.0).abs() < 1e-15);
        assert!((model.true_autocovariance(2) - 1.0 / 3.0).abs() < 1e-15);
        for k in 0..20 {
            assert_eq!(model.true_autocovariance(k), model.true_autocovariance(-k));
        }
    }

    #[test]
    fn ma_constants_match_truncated_sums() {
        for model in [
            ProcessModel::ma(vec![0.6, -0.3, 0.2], 1.5),
            ProcessModel::m_dependent(3, 0.7),
        ] {
            let c = model.theoretical_constants().unwrap();
            let (lrv, b0) = truncated_sums(&model, 50);
            assert!((lrv - c.sigma_inf_sq).abs() < 1e-12, "{model:?}");
            assert!((b0 - c.b0).abs() < 1e-12, "{model:?}");
        }
        let m = ProcessModel::m_dependent(2, 1.0);
        assert_eq!(m.true_autocovariance(1), 2.0);
        assert_eq!(m.true_autocovariance(3), 0.0);
    }

    #[test]
    fn white_noise_violates_bias_condition() {
        assert!(matches!(
            ProcessModel::ar1(0.0, 1.0).theoretical_constants(),
            Err(Error::ZeroBias)
        ));
        assert!(matches!(
            ProcessModel::m_dependent(0, 1.0).theoretical_constants(),
            Err(Error::ZeroBias)
        ));
    }

    #[test]
    fn invalid_parameters() {
        assert!(ProcessModel::ar1(1.0, 1.0).generate(10, 0).is_err());
        assert!(ProcessModel::ar1(0.5, 0.0).generate(10, 0).is_err());
        assert!(ProcessModel::ar1(0.5, 1.0).generate(1, 0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let model = ProcessModel::ar1(0.5, 1.0);
        assert_eq!(
            model.generate(500, 9).unwrap(),
            model.generate(500, 9).unwrap()
        );
        assert_ne!(
            model.generate(500, 9).unwrap(),
            model.generate(500, 10).unwrap()
        );
    }

    #[test]
    fn white_noise_lag_one_covariance_vanishes() {
        let x = ProcessModel::ar1(0.0, 1.0).generate(100_000, 1).unwrap();
        let v = x.as_slice();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let lag1 = v.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / v.len() as f64;
        assert!(lag1.abs() < 0.02, "{lag1}");
    }

    #[test]
    fn ar1_sample_variance() {
        let x = ProcessModel::ar1(0.5, 1.0).generate(100_000, 2).unwrap();
        let v = x.as_slice();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
        assert!((var - 4.0 / 3.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn sample_means_are_centered() {
        let model = ProcessModel::ar1(0.5, 1.0);
        let bound = 4.0 * 2.0 / (2000f64).sqrt();
        for seed in 0..20 {
            let x = model.generate(2000, seed).unwrap();
            assert!(x.mean()[0].abs() < bound);
        }
    }

    #[test]
    fn block_approx_scales_as_cube_root() {
        let c = TheoreticalConstants::from_b0_v0(1.0, 2.0).unwrap();
        assert!((optimal_block_approx(&c, 1000) - 10.0).abs() < 1e-12);
        assert!(
            (optimal_block_approx(&c, 8000) / optimal_block_approx(&c, 1000) - 2.0).abs() < 1e-12
        );
        let ar = ProcessModel::ar1(0.5, 1.0).theoretical_constants().unwrap();
        for n in [100, 1000, 10_000] {
            let r = optimal_block_approx(&ar, n) / (n as f64).cbrt();
            assert!((r - ar.c0).abs() < 1e-12);
        }
    }

    #[test]
    fn paired_models() {
        let model = ProcessModel::ar1(0.5, 1.0)
            .with_mean(2.0)
            .with_pairing(Pairing::Independent);
        let x = model.generate(50, 3).unwrap();
        assert_eq!(x.dim(), 2);
        // grad of x1*x2 at (2,2) is (2,2): |g|^2 = 8
        let c = model
            .theoretical_constants_for(SmoothStatistic::CoordinateProduct)
            .unwrap();
        assert!((c.sigma_inf_sq - 32.0).abs() < 1e-12);
        assert!(model
            .theoretical_constants_for(SmoothStatistic::Mean)
            .is_err());

        let lag = ProcessModel::ar1(0.5, 1.0).with_pairing(Pairing::Lag);
        let z = lag.generate(10, 1).unwrap();
        for i in 0..9 {
            assert_eq!(z.row(i)[1], z.row(i + 1)[0]);
        }
        assert!(matches!(
            lag.theoretical_constants_for(SmoothStatistic::Ratio),
            Err(Error::NoAnalyticTruth)
        ));
    }

    #[test]
    fn config_form_round_trips() {
        let model: ProcessModel =
            serde_json::from_str(r#"{"kind":"ar1","phi":0.5,"sigma":1.0}"#).unwrap();
        assert_eq!(model, ProcessModel::ar1(0.5, 1.0));
        let json = serde_json::to_string(&model).unwrap();
        assert_eq!(json, r#"{"kind":"ar1","phi":0.5,"sigma":1.0}"#);
    }
}
