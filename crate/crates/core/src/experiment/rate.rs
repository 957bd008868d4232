use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub se: f64,
    pub intercept: f64,
}

/// Least-squares fit of `log(error)` on `log(n)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientPoints(points.len()));
    }
    if let Some((index, &(_, value))) = points.iter().enumerate().find(|(_, p)| !(p.1 > 0.0)) {
        return Err(Error::NonPositiveError { index, value });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let x_bar = xs.iter().sum::<f64>() / k;
    let y_bar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "rate fit needs distinct n values".into(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_bar) * (y - y_bar))
        .sum();
    let slope = sxy / sxx;
    let intercept = y_bar - slope * x_bar;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = (ssr / (k - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        se,
        intercept,
    })
}

/// Linear-interpolation quantile of sorted data (`p` in `[0, 1]`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let pos = p.clamp(0.0, 1.0) * (len - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        }
    }
}
