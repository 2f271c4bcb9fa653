//! Least-squares slope fitting for log-log scaling measurements.

use crate::error::{Error, Result};

/// Ordinary least-squares fit through `(log ε, log value)` points.
#[derive(Debug, Clone)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_abs_residual: f64,
    pub points: Vec<(f64, f64)>,
}

/// OLS on raw `(x, y)` pairs. At least 3 points with distinct abscissae.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx < 1e-24 {
        return Err(Error::DegenerateFit("coincident abscissae".into()));
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let max_abs_residual = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).abs())
        .fold(0.0, f64::max);
    if !slope.is_finite() || !max_abs_residual.is_finite() {
        return Err(Error::FitUnstable("non-finite fit".into()));
    }
    Ok(SlopeFit {
        slope,
        intercept,
        max_abs_residual,
        points: points.to_vec(),
    })
}

/// Fits `log value ~ slope · log ε` for positive samples; refuses zeros.
pub fn fit_log_slope(eps_values: &[(f64, f64)]) -> Result<SlopeFit> {
    let mut pts = Vec::with_capacity(eps_values.len());
    for &(e, v) in eps_values {
        if !(v > 0.0) || !(e > 0.0) {
            return Err(Error::FitUnstable(format!(
                "log of non-positive sample (eps={e}, value={v})"
            )));
        }
        pts.push((e.ln(), v.ln()));
    }
    fit_slope(&pts)
}
