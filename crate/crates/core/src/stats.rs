//! Batch means and log-log regression.

use crate::error::{Error, Result};

/// Mean of `series` and its standard error from `batches` contiguous batch
/// means. Trailing samples that do not fill a batch are dropped from the
/// error estimate but kept in the mean.
pub fn batch_means(series: &[f64], batches: usize) -> (f64, f64) {
    let n = series.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let batches = batches.min(n);
    if batches < 2 {
        return (mean, f64::NAN);
    }
    let len = n / batches;
    let means: Vec<f64> = series
        .chunks_exact(len)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    (mean, pooled_se(&means))
}

/// Standard error of the mean of `means`, treated as independent draws.
pub fn pooled_se(means: &[f64]) -> f64 {
    let k = means.len();
    if k < 2 {
        return f64::NAN;
    }
    let m = means.iter().sum::<f64>() / k as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1) as f64;
    (var / k as f64).sqrt()
}

/// Sample variance with the `n − 1` denominator.
pub fn variance(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = series.iter().sum::<f64>() / n as f64;
    series.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; `NaN` with exactly two points.
    pub slope_se: f64,
    pub points: usize,
}

/// Fits `ln y = intercept + slope · ln x`. Needs at least three points with
/// positive coordinates and distinct `x`.
pub fn log_log_fit(x: &[f64], y: &[f64]) -> Result<LogLogFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} x values but {} y values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "a fit needs at least 3 points, got {}",
            x.len()
        )));
    }
    if let Some(bad) = x.iter().chain(y).find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "log-log fit needs positive finite values, got {bad}"
        )));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 1e-24 * (1.0 + mx * mx) {
        return Err(Error::InvalidInput("all x values coincide; slope undefined".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let slope_se = if lx.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(LogLogFit {
        slope,
        intercept,
        slope_se,
        points: lx.len(),
    })
}
