//! Closed-form moment references.
//!
//! Integrating the collision operator against `phi(v) = v` and `phi(v) = |v|^2`
//! closes the moment hierarchy for a few models:
//!
//! * Kac: the mean obeys `m' = -m` and the Euler chain `m_{n+1} = (1 - dt) m_n`;
//!   the energy is conserved by both.
//! * Wealth: the mean is conserved.
//! * Morgenstern: momentum and energy are conserved.
//!
//! [`moment_envelope`] is the exponential upper bound on `M_q^(1/q)` of the
//! Euler iterates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelId;

pub fn kac_mean(t: f64, m0: f64) -> f64 {
    m0 * (-t).exp()
}

pub fn kac_mean_discrete(n: u64, dt: f64, m0: f64) -> f64 {
    m0 * (1.0 - dt).powf(n as f64)
}

pub fn kac_energy(_t: f64, e0: f64) -> f64 {
    e0
}

pub fn kac_energy_discrete(_n: u64, _dt: f64, e0: f64) -> f64 {
    e0
}

pub fn wealth_mean(_t: f64, m0: f64) -> f64 {
    m0
}

pub fn morgenstern_invariants(_t: f64, p0: [f64; 3], e0: f64) -> ([f64; 3], f64) {
    (p0, e0)
}

/// `exp(C n dt) M0`.
pub fn moment_envelope(q: f64, c: f64, n: u64, dt: f64, m0: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::invalid(format!("moment order must be >= 1, got {q}")));
    }
    if !(c >= 0.0) {
        return Err(Error::invalid(format!("envelope constant must be >= 0, got {c}")));
    }
    Ok((c * n as f64 * dt).exp() * m0)
}

/// Certified envelope constant, where one is known.
///
/// Kac conserves energy, so `C = 0` holds for `q = 2`.
pub fn certified_envelope_constant(model: ModelId, q: f64) -> Option<f64> {
    match (model, q) {
        (ModelId::Kac, q) if q == 2.0 => Some(0.0),
        (ModelId::Morgenstern, q) if q == 2.0 => Some(0.0),
        _ => None,
    }
}

/// Smallest `C >= 0` with `M(t) <= exp(C t) M(0)` on the observed series
/// `(t, M_q^(1/q)(t))`. This is a fitted value, not a certificate.
pub fn fitted_envelope_constant(series: &[(f64, f64)]) -> Result<f64> {
    let Some(&(t0, m0)) = series.first() else {
        return Err(Error::invalid("empty moment series"));
    };
    if !(m0 > 0.0) {
        return Err(Error::invalid("initial moment must be positive"));
    }
    Ok(series
        .iter()
        .filter(|(t, _)| *t > t0)
        .map(|(t, m)| (m / m0).ln() / (t - t0))
        .fold(0.0, f64::max))
}

/// Moment functional with a closed-form reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Mean,
    Energy,
    Momentum,
}

/// Continuous and Euler-discrete reference values of one moment functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOracle {
    pub model_id: ModelId,
    pub quantity: Quantity,
}

impl MomentOracle {
    /// Fails when the moment hierarchy of `model_id` does not close for `quantity`.
    pub fn new(model_id: ModelId, quantity: Quantity) -> Result<Self> {
        let ok = matches!(
            (model_id, quantity),
            (ModelId::Kac, Quantity::Mean | Quantity::Energy)
                | (ModelId::Wealth, Quantity::Mean)
                | (ModelId::Morgenstern, Quantity::Momentum | Quantity::Energy)
        );
        if ok {
            Ok(MomentOracle { model_id, quantity })
        } else {
            Err(Error::invalid(format!(
                "no {quantity:?} oracle for the {model_id} model"
            )))
        }
    }

    /// Value of the functional along the exact solution, from the initial value `v0`.
    pub fn continuous_value(&self, t: f64, v0: &[f64]) -> Vec<f64> {
        match (self.model_id, self.quantity) {
            (ModelId::Kac, Quantity::Mean) => vec![kac_mean(t, v0[0])],
            (ModelId::Kac, Quantity::Energy) => vec![kac_energy(t, v0[0])],
            (ModelId::Wealth, _) => vec![wealth_mean(t, v0[0])],
            _ => v0.to_vec(),
        }
    }

    /// Value after `n` forward-Euler steps of size `dt`.
    pub fn discrete_value(&self, n: u64, dt: f64, v0: &[f64]) -> Vec<f64> {
        match (self.model_id, self.quantity) {
            (ModelId::Kac, Quantity::Mean) => vec![kac_mean_discrete(n, dt, v0[0])],
            (ModelId::Kac, Quantity::Energy) => vec![kac_energy_discrete(n, dt, v0[0])],
            _ => v0.to_vec(),
        }
    }
}
