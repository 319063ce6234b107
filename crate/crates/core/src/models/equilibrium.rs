use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::rng::Stream;

use super::{InitialCondition, ModelId, ModelSpec};

/// Steady state used by the TRMC resampling branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EquilibriumKind {
    /// Centred Gaussian on the line with the given variance.
    GaussianMatchingEnergy { variance: f64 },
    /// Isotropic Maxwellian in three dimensions.
    MaxwellianMatchingMomentumEnergy { mean: Vec<f64>, variance: f64 },
    Unavailable { model: ModelId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EquilibriumSpec {
    pub kind: EquilibriumKind,
}

impl EquilibriumSpec {
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::invalid(format!("equilibrium variance must be >= 0, got {variance}")));
        }
        Ok(EquilibriumSpec { kind: EquilibriumKind::GaussianMatchingEnergy { variance } })
    }

    pub fn maxwellian(mean: Vec<f64>, variance: f64) -> Result<Self> {
        if mean.len() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: mean.len() });
        }
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::invalid(format!("equilibrium variance must be >= 0, got {variance}")));
        }
        Ok(EquilibriumSpec {
            kind: EquilibriumKind::MaxwellianMatchingMomentumEnergy { mean, variance },
        })
    }

    /// Equilibrium parameters estimated from the empirical moments of `initial`.
    ///
    /// Kac: zero mean and variance equal to the second moment.
    /// Morgenstern: mean equal to the momentum and per-component variance equal
    /// to one third of the centred energy. Other models have no sampler.
    pub fn from_initial(model: &ModelSpec, initial: &Ensemble) -> Self {
        let n = initial.len() as f64;
        match model.id() {
            ModelId::Kac => {
                let m2 = initial.as_flat().iter().map(|x| x * x).sum::<f64>() / n;
                EquilibriumSpec { kind: EquilibriumKind::GaussianMatchingEnergy { variance: m2 } }
            }
            ModelId::Morgenstern => {
                let mut mean = vec![0.0; 3];
                for s in initial.iter() {
                    for k in 0..3 {
                        mean[k] += s[k];
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n);
                let centred = initial
                    .iter()
                    .map(|s| (0..3).map(|k| (s[k] - mean[k]).powi(2)).sum::<f64>())
                    .sum::<f64>()
                    / n;
                EquilibriumSpec {
                    kind: EquilibriumKind::MaxwellianMatchingMomentumEnergy {
                        mean,
                        variance: centred / 3.0,
                    },
                }
            }
            id => EquilibriumSpec { kind: EquilibriumKind::Unavailable { model: id } },
        }
    }

    /// Same matching rule as [`EquilibriumSpec::from_initial`], applied to the
    /// exact moments of the initial law instead of a sample.
    pub fn from_law(model: &ModelSpec, ic: &InitialCondition) -> Self {
        match model.id() {
            ModelId::Kac => EquilibriumSpec {
                kind: EquilibriumKind::GaussianMatchingEnergy { variance: ic.second_moment() },
            },
            ModelId::Morgenstern => {
                let mean = ic.mean();
                let centred = ic.second_moment() - mean.iter().map(|m| m * m).sum::<f64>();
                EquilibriumSpec {
                    kind: EquilibriumKind::MaxwellianMatchingMomentumEnergy {
                        mean,
                        variance: (centred / 3.0).max(0.0),
                    },
                }
            }
            id => EquilibriumSpec { kind: EquilibriumKind::Unavailable { model: id } },
        }
    }

    pub fn is_available(&self) -> bool {
        !matches!(self.kind, EquilibriumKind::Unavailable { .. })
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            EquilibriumKind::GaussianMatchingEnergy { .. } => Some(1),
            EquilibriumKind::MaxwellianMatchingMomentumEnergy { .. } => Some(3),
            EquilibriumKind::Unavailable { .. } => None,
        }
    }

    pub(crate) fn sample_into(&self, stream: &mut Stream, out: &mut [f64]) -> Result<()> {
        match &self.kind {
            EquilibriumKind::GaussianMatchingEnergy { variance } => {
                let z: f64 = StandardNormal.sample(stream);
                out[0] = variance.sqrt() * z;
            }
            EquilibriumKind::MaxwellianMatchingMomentumEnergy { mean, variance } => {
                let sd = variance.sqrt();
                for k in 0..3 {
                    let z: f64 = StandardNormal.sample(stream);
                    out[k] = mean[k] + sd * z;
                }
            }
            EquilibriumKind::Unavailable { model } => {
                return Err(Error::EquilibriumUnavailable(model.to_string()))
            }
        }
        Ok(())
    }
}

/// One draw from the equilibrium.
pub fn sample_equilibrium(eq: &EquilibriumSpec, stream: &mut Stream) -> Result<Vec<f64>> {
    let mut out = vec![0.0; eq.dim().unwrap_or(0)];
    eq.sample_into(stream, &mut out)?;
    Ok(out)
}
