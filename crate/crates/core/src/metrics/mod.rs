//! Empirical moments, Wasserstein-1 distances and the Monte Carlo rate function.

mod assignment;
mod wasserstein;

pub use assignment::min_cost_assignment;
pub use wasserstein::{
    w1_1d, w1_auto, w1_exact_1d, w1_exact_matching, w1_exact_matching_with_limit, w1_sliced,
    Estimator, W1Value, DEFAULT_MATCHING_LIMIT, DEFAULT_SLICED_DIRECTIONS,
};

use serde::Serialize;

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::models::ModelId;

/// `((1/N) sum |X_i|^q)^(1/q)` with the Euclidean norm.
pub fn empirical_moment(x: &[f64], dim: usize, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::invalid(format!("moment order must be >= 1, got {q}")));
    }
    if dim == 0 || x.is_empty() || x.len() % dim != 0 {
        return Err(Error::invalid("moment needs a non-empty sample"));
    }
    let n = x.len() / dim;
    let total: f64 = x
        .chunks_exact(dim)
        .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt().powf(q))
        .sum();
    Ok((total / n as f64).powf(1.0 / q))
}

/// Expected W1 rate of `n` i.i.d. samples in dimension `dim`, given a finite
/// moment of order `q`:
///
/// * `n^(-1/2)` for `dim = 1`, `q > 2`
/// * `n^(-1/2) log(1 + n)` for `dim = 2`, `q > 2`
/// * `n^(-1/dim)` for `dim > 2`, `q > dim / (dim - 1)`
pub fn epsilon_rate(n: usize, dim: usize, q: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::RateUndefined("N must be >= 1".into()));
    }
    let nf = n as f64;
    match dim {
        0 => Err(Error::RateUndefined("dimension must be >= 1".into())),
        1 | 2 if !(q > 2.0) => Err(Error::RateUndefined(format!(
            "d = {dim} requires q > 2, got q = {q}"
        ))),
        1 => Ok(nf.powf(-0.5)),
        2 => Ok(nf.powf(-0.5) * (1.0 + nf).ln()),
        d => {
            let bound = d as f64 / (d as f64 - 1.0);
            if q > bound {
                Ok(nf.powf(-1.0 / d as f64))
            } else {
                Err(Error::RateUndefined(format!(
                    "d = {d} requires q > d/(d-1) = {bound}, got q = {q}"
                )))
            }
        }
    }
}

/// Names and values of the quantities a model conserves (at least in expectation).
pub fn tracked_quantities(model_id: ModelId, ens: &Ensemble) -> Vec<(&'static str, f64)> {
    let mean = mean_vector(ens);
    let energy = energy(ens);
    match model_id {
        ModelId::Kac => vec![("energy", energy)],
        ModelId::Wealth => vec![("mean", mean[0])],
        ModelId::Morgenstern => vec![
            ("momentum_x", mean[0]),
            ("momentum_y", mean[1]),
            ("momentum_z", mean[2]),
            ("energy", energy),
        ],
        ModelId::Opinion | ModelId::KineticOpt => Vec::new(),
    }
}

pub fn mean_vector(ens: &Ensemble) -> Vec<f64> {
    let mut m = vec![0.0; ens.dim()];
    for s in ens.iter() {
        for (acc, v) in m.iter_mut().zip(s) {
            *acc += v;
        }
    }
    let n = ens.len() as f64;
    m.iter_mut().for_each(|v| *v /= n);
    m
}

/// Second raw moment `(1/N) sum |V_i|^2`.
pub fn energy(ens: &Ensemble) -> f64 {
    ens.as_flat().iter().map(|v| v * v).sum::<f64>() / ens.len() as f64
}

/// Per-snapshot diagnostics of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub step_index: u64,
    pub time: f64,
    /// `(q, M_q^(1/q))` in ascending `q`.
    pub moments: Vec<(f64, f64)>,
    pub mean_vector: Vec<f64>,
    pub energy: f64,
    /// `(name, current - initial)` for each tracked quantity.
    pub conserved_drift: Vec<(String, f64)>,
    pub w1_to_reference: Option<W1Value>,
    /// Cumulative clamp events of the opinion map up to this step.
    pub clamp_events: u64,
}

impl MetricReport {
    /// Computes the report; `initial` holds the tracked quantities at step 0.
    pub fn compute(
        ens: &Ensemble,
        moment_orders: &[f64],
        initial: &[(&'static str, f64)],
    ) -> Result<Self> {
        let mut orders = moment_orders.to_vec();
        orders.sort_by(f64::total_cmp);
        let moments = orders
            .iter()
            .map(|&q| Ok((q, empirical_moment(ens.as_flat(), ens.dim(), q)?)))
            .collect::<Result<Vec<_>>>()?;
        let current = tracked_quantities(ens.model_id(), ens);
        let conserved_drift = current
            .iter()
            .zip(initial)
            .map(|((name, now), (_, then))| (name.to_string(), now - then))
            .collect();
        Ok(MetricReport {
            step_index: ens.step_index(),
            time: ens.time(),
            moments,
            mean_vector: mean_vector(ens),
            energy: energy(ens),
            conserved_drift,
            w1_to_reference: None,
            clamp_events: 0,
        })
    }

    pub fn moment(&self, q: f64) -> Option<f64> {
        self.moments.iter().find(|(p, _)| *p == q).map(|(_, v)| *v)
    }

    pub fn drift(&self, name: &str) -> Option<f64> {
        self.conserved_drift.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    #[test]
    fn moment_examples() {
        assert_eq!(empirical_moment(&[0.0; 5], 1, 2.0).unwrap(), 0.0);
        assert!((empirical_moment(&[1.0, -1.0], 1, 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((empirical_moment(&[0.0, 2.0], 1, 3.0).unwrap() - 4f64.powf(1.0 / 3.0)).abs() < 1e-12);
        assert!(empirical_moment(&[1.0], 1, 0.5).is_err());
        // Euclidean norm in d = 2
        assert!((empirical_moment(&[3.0, 4.0], 2, 1.0).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn rate_cases() {
        assert!((epsilon_rate(10_000, 1, 3.0).unwrap() - 0.01).abs() < 1e-15);
        assert!((epsilon_rate(1000, 3, 2.0).unwrap() - 0.1).abs() < 1e-12);
        let e = epsilon_rate(100, 2, 3.0).unwrap();
        assert!((e - 0.1 * 101f64.ln()).abs() < 1e-12);
        let err = epsilon_rate(100, 1, 2.0).unwrap_err();
        assert!(err.to_string().contains("q > 2"));
        assert!(epsilon_rate(100, 3, 1.5).is_err());
        assert!(epsilon_rate(100, 4, 1.4).is_ok());
    }

    #[test]
    fn power_mean_monotone() {
        let x = [0.5, -2.0, 3.0, 0.0, 1.25];
        let r = MetricReport::compute(
            &Ensemble::new(&ModelSpec::kac(), x.to_vec()).unwrap(),
            &[3.0, 1.0, 2.0, 4.5],
            &[("energy", 0.0)],
        )
        .unwrap();
        assert!(r.moments.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        assert_eq!(r.drift("energy"), Some(r.energy));
    }
}
