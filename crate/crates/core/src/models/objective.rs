use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ModelKind, ModelSpec};

/// Objective functions for the kinetic optimization model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    /// `|v - center|^2`.
    ShiftedQuadratic { center: Vec<f64> },
    /// Separable Rastrigin benchmark centred at `center`:
    /// `sum_k (x_k^2 - A cos(2 pi x_k) + A)` with `x = v - center`.
    Rastrigin { center: Vec<f64>, amplitude: f64 },
}

impl Objective {
    pub fn dim(&self) -> Option<usize> {
        match self {
            Objective::ShiftedQuadratic { center } | Objective::Rastrigin { center, .. } => {
                Some(center.len())
            }
        }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Objective::ShiftedQuadratic { center } => {
                v.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum()
            }
            Objective::Rastrigin { center, amplitude } => v
                .iter()
                .zip(center)
                .map(|(x, c)| {
                    let y = x - c;
                    y * y - amplitude * (2.0 * PI * y).cos() + amplitude
                })
                .sum(),
        }
    }
}

/// Gibbs-weighted average of two states, shifted by the larger exponent so
/// neither weight overflows or underflows to zero together.
pub(crate) fn weighted_average_into(
    objective: &Objective,
    beta_weight: f64,
    v: &[f64],
    v_star: &[f64],
    out: &mut [f64],
) {
    let a = -beta_weight * objective.eval(v);
    let b = -beta_weight * objective.eval(v_star);
    let m = a.max(b);
    let wa = (a - m).exp();
    let wb = (b - m).exp();
    let total = wa + wb;
    for k in 0..v.len() {
        out[k] = (wa * v[k] + wb * v_star[k]) / total;
    }
}

/// `v_beta(v, v*)` for a kinetic optimization model.
pub fn weighted_average(model: &ModelSpec, v: &[f64], v_star: &[f64]) -> Result<Vec<f64>> {
    let ModelKind::KineticOpt { beta_weight, objective, .. } = model.kind() else {
        return Err(Error::invalid(format!(
            "weighted average is defined for kinetic optimization only, not {}",
            model.id()
        )));
    };
    let d = model.dim();
    for len in [v.len(), v_star.len()] {
        if len != d {
            return Err(Error::DimensionMismatch { expected: d, got: len });
        }
    }
    let mut out = vec![0.0; d];
    weighted_average_into(objective, *beta_weight, v, v_star, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(beta: f64) -> ModelSpec {
        let obj = Objective::ShiftedQuadratic { center: vec![0.0, 0.0] };
        ModelSpec::kinetic_opt(2, 1.0, 0.5, beta, obj).unwrap()
    }

    #[test]
    fn equal_energies_give_midpoint() {
        let m = model(3.0);
        let out = weighted_average(&m, &[0.6, -0.8], &[-0.8, 0.6]).unwrap();
        let mid = [(0.6 + -0.8) / 2.0, (-0.8 + 0.6) / 2.0];
        assert_eq!(out, mid.to_vec());
    }

    #[test]
    fn identical_inputs() {
        let m = model(7.0);
        assert_eq!(weighted_average(&m, &[0.3, 0.2], &[0.3, 0.2]).unwrap(), vec![0.3, 0.2]);
    }

    #[test]
    fn large_beta_selects_minimizer() {
        // E(v) = 0.01, E(v*) = 1.01, beta * gap = 50 -> weight ratio e^-50.
        let m = model(50.0);
        let v = [0.1, 0.0];
        let w = [0.1, 1.0];
        let out = weighted_average(&m, &v, &w).unwrap();
        assert!((out[0] - v[0]).abs() <= 1e-9 && (out[1] - v[1]).abs() <= 1e-9);
        // no overflow for huge weights
        let m = model(1e6);
        let out = weighted_average(&m, &v, &w).unwrap();
        assert!(out.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn lies_on_segment() {
        let m = model(2.0);
        let v = [0.9, -0.4];
        let w = [-0.2, 0.7];
        let out = weighted_average(&m, &v, &w).unwrap();
        let t = (out[0] - v[0]) / (w[0] - v[0]);
        assert!((0.0..=1.0).contains(&t));
        assert!((out[1] - (v[1] + t * (w[1] - v[1]))).abs() < 1e-12);
        let n = |x: &[f64]| x.iter().map(|y| y * y).sum::<f64>().sqrt();
        assert!(n(&out) <= n(&v) + n(&w));
    }

    #[test]
    fn rejects_other_models() {
        assert!(weighted_average(&ModelSpec::kac(), &[0.0], &[0.0]).is_err());
    }
}
