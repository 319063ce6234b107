//! Log-log least-squares rate fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Errors below this are treated as exact zeros.
pub const ZERO_ERROR_THRESHOLD: f64 = 1e-14;

/// Fitted power law `y = exp(intercept) x^slope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(log x, log y, standard error of y)`.
    pub points: Vec<(f64, f64, f64)>,
}

impl RateFit {
    pub fn predict(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Ordinary least squares of `log y` on `log x`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    let stderr = vec![0.0; points.len()];
    fit_rate_with_stderr(points, &stderr)
}

/// As [`fit_rate`], carrying a standard error per point into the result.
pub fn fit_rate_with_stderr(points: &[(f64, f64)], stderr: &[f64]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "a rate fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if stderr.len() != points.len() {
        return Err(Error::SizeMismatch { left: points.len(), right: stderr.len() });
    }
    for &(x, y) in points {
        if !(x > 0.0 && x.is_finite()) || !(y >= 0.0 && y.is_finite()) {
            return Err(Error::invalid(format!("rate fit needs positive finite points, got ({x}, {y})")));
        }
    }
    if points.iter().any(|&(_, y)| y < ZERO_ERROR_THRESHOLD) {
        return Err(Error::ZeroErrorSweep { threshold: ZERO_ERROR_THRESHOLD });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("rate fit needs at least two distinct x values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: logs.iter().zip(stderr).map(|(&(lx, ly), &se)| (lx, ly, se)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, x * x)).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);

        let pts: Vec<(f64, f64)> = [1.0f64, 3.0, 10.0, 30.0].iter().map(|&x| (x, 3.0 / x.sqrt())).collect();
        let f = fit_rate(&pts).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.predict(100.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn noisy_slope_distribution() {
        let mut s = Stream::from_seed(3);
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        for _ in 0..100 {
            let pts: Vec<(f64, f64)> =
                xs.iter().map(|&x| (x, x * x * (1.0 + 0.01 * s.uniform(-1.0, 1.0)))).collect();
            let f = fit_rate(&pts).unwrap();
            assert!((f.slope - 2.0).abs() <= 0.1, "slope {}", f.slope);
        }
    }

    #[test]
    fn rejections() {
        assert!(matches!(fit_rate(&[(1.0, 1.0), (2.0, 2.0)]), Err(Error::InvalidParameter(_))));
        assert!(fit_rate(&[(0.0, 1.0), (2.0, 2.0), (3.0, 1.0)]).is_err());
        assert!(fit_rate(&[(1.0, -1.0), (2.0, 2.0), (3.0, 1.0)]).is_err());
        assert!(matches!(
            fit_rate(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]),
            Err(Error::ZeroErrorSweep { .. })
        ));
        assert!(matches!(
            fit_rate(&[(1.0, 1.0), (2.0, 1e-15), (3.0, 1.0)]),
            Err(Error::ZeroErrorSweep { .. })
        ));
    }
}
