//! Replication statistics.

use serde::Serialize;

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    /// `s / sqrt(R)` with the unbiased sample deviation `s`; zero when `R < 2`.
    pub stderr: f64,
    pub count: usize,
}

/// Two-pass mean and standard error.
pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { mean: f64::NAN, stderr: f64::NAN, count: 0 };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Summary { mean, stderr: 0.0, count: n };
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    Summary { mean, stderr: sd / (n as f64).sqrt(), count: n }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        // s^2 = 5/3, se = sqrt(5/3)/2
        assert!((s.stderr - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(summarize(&[7.0]).stderr, 0.0);
        assert!(summarize(&[]).mean.is_nan());
    }

    #[test]
    fn large_offset_is_stable() {
        let base = 1e9;
        let s = summarize(&[base + 1.0, base + 2.0, base + 3.0]);
        assert!((s.stderr - 1.0 / 3f64.sqrt()).abs() < 1e-6);
    }
}
