use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::rng::Stream;

use super::{Domain, ModelSpec};

/// Law of the initial particle states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    PointMass {
        center: Vec<f64>,
    },
    /// Independent uniform components on `[lo_k, hi_k]`.
    UniformBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Independent Gaussian components.
    Gaussian {
        mean: Vec<f64>,
        variance: Vec<f64>,
    },
    /// `first` with probability `weight`, otherwise `second`.
    TwoPointMixture {
        first: Vec<f64>,
        second: Vec<f64>,
        weight: f64,
    },
    /// Uniform over a user-supplied list of atoms.
    Custom {
        atoms: Vec<Vec<f64>>,
    },
}

impl InitialCondition {
    pub fn dim(&self) -> usize {
        match self {
            InitialCondition::PointMass { center } => center.len(),
            InitialCondition::UniformBox { lo, .. } => lo.len(),
            InitialCondition::Gaussian { mean, .. } => mean.len(),
            InitialCondition::TwoPointMixture { first, .. } => first.len(),
            InitialCondition::Custom { atoms } => atoms.first().map_or(0, Vec::len),
        }
    }

    /// Checks that the law is well formed and supported inside the model domain.
    pub fn check_admissible(&self, model: &ModelSpec) -> Result<()> {
        let d = model.dim();
        let domain = model.domain();
        let outside = |s: &[f64]| Error::OutsideDomain {
            state: s.to_vec(),
            domain: domain.to_string(),
        };
        let check_dim = |len: usize| {
            if len == d {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: d, got: len })
            }
        };
        let check_point = |p: &[f64]| {
            check_dim(p.len())?;
            if domain.contains(p) {
                Ok(())
            } else {
                Err(outside(p))
            }
        };
        match self {
            InitialCondition::PointMass { center } => check_point(center),
            InitialCondition::UniformBox { lo, hi } => {
                check_dim(lo.len())?;
                check_dim(hi.len())?;
                if lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
                    return Err(Error::invalid("uniform box needs lo <= hi componentwise"));
                }
                check_point(lo)?;
                check_point(hi)
            }
            InitialCondition::Gaussian { mean, variance } => {
                check_dim(mean.len())?;
                check_dim(variance.len())?;
                if variance.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(Error::invalid("Gaussian variances must be finite and >= 0"));
                }
                if mean.iter().any(|m| !m.is_finite()) {
                    return Err(Error::invalid("Gaussian mean must be finite"));
                }
                match domain {
                    Domain::FullSpace { .. } => Ok(()),
                    _ if variance.iter().all(|v| *v == 0.0) => check_point(mean),
                    _ => Err(Error::invalid(format!(
                        "Gaussian initial data has unbounded support, which exits {domain}"
                    ))),
                }
            }
            InitialCondition::TwoPointMixture { first, second, weight } => {
                if !(0.0..=1.0).contains(weight) {
                    return Err(Error::invalid(format!("mixture weight must lie in [0, 1], got {weight}")));
                }
                check_point(first)?;
                check_point(second)
            }
            InitialCondition::Custom { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::invalid("custom initial data needs at least one atom"));
                }
                atoms.iter().try_for_each(|a| check_point(a))
            }
        }
    }

    /// Expected state vector.
    pub fn mean(&self) -> Vec<f64> {
        match self {
            InitialCondition::PointMass { center } => center.clone(),
            InitialCondition::UniformBox { lo, hi } => {
                lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect()
            }
            InitialCondition::Gaussian { mean, .. } => mean.clone(),
            InitialCondition::TwoPointMixture { first, second, weight } => first
                .iter()
                .zip(second)
                .map(|(a, b)| weight * a + (1.0 - weight) * b)
                .collect(),
            InitialCondition::Custom { atoms } => {
                let n = atoms.len() as f64;
                (0..self.dim()).map(|k| atoms.iter().map(|a| a[k]).sum::<f64>() / n).collect()
            }
        }
    }

    /// Expected squared norm `E|V|^2`.
    pub fn second_moment(&self) -> f64 {
        let sq = |p: &[f64]| p.iter().map(|x| x * x).sum::<f64>();
        match self {
            InitialCondition::PointMass { center } => sq(center),
            InitialCondition::UniformBox { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| (a * a + a * b + b * b) / 3.0)
                .sum(),
            InitialCondition::Gaussian { mean, variance } => sq(mean) + variance.iter().sum::<f64>(),
            InitialCondition::TwoPointMixture { first, second, weight } => {
                weight * sq(first) + (1.0 - weight) * sq(second)
            }
            InitialCondition::Custom { atoms } => {
                atoms.iter().map(|a| sq(a)).sum::<f64>() / atoms.len() as f64
            }
        }
    }

    fn sample_into(&self, stream: &mut Stream, out: &mut [f64]) {
        match self {
            InitialCondition::PointMass { center } => out.copy_from_slice(center),
            InitialCondition::UniformBox { lo, hi } => {
                for k in 0..out.len() {
                    out[k] = stream.uniform(lo[k], hi[k]);
                }
            }
            InitialCondition::Gaussian { mean, variance } => {
                for k in 0..out.len() {
                    let z: f64 = StandardNormal.sample(stream);
                    out[k] = mean[k] + variance[k].sqrt() * z;
                }
            }
            InitialCondition::TwoPointMixture { first, second, weight } => {
                let pick = if stream.next_f64() < *weight { first } else { second };
                out.copy_from_slice(pick);
            }
            InitialCondition::Custom { atoms } => {
                let i = ((stream.next_f64() * atoms.len() as f64) as usize).min(atoms.len() - 1);
                out.copy_from_slice(&atoms[i]);
            }
        }
    }
}

/// Draws `n` i.i.d. states. Particle `i` (1-based) uses `stream.fork(i)`, so
/// the result does not depend on the thread count.
pub fn sample_initial(
    model: &ModelSpec,
    ic: &InitialCondition,
    n: usize,
    stream: &Stream,
) -> Result<Ensemble> {
    ic.check_admissible(model)?;
    if n == 0 {
        return Err(Error::invalid("initial ensemble needs N >= 1"));
    }
    let d = model.dim();
    let mut states = vec![0.0; n * d];
    states
        .par_chunks_mut(d)
        .with_min_len(1024)
        .enumerate()
        .for_each(|(i, out)| {
            let mut s = stream.fork(i as u64 + 1);
            ic.sample_into(&mut s, out);
        });
    Ensemble::new(model, states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass() {
        let m = ModelSpec::morgenstern();
        let ic = InitialCondition::PointMass { center: vec![1.0, 2.0, 3.0] };
        let e = sample_initial(&m, &ic, 50, &Stream::from_seed(1)).unwrap();
        assert_eq!(e.step_index(), 0);
        assert!(e.iter().all(|s| s == [1.0, 2.0, 3.0]));
    }

    #[test]
    fn gaussian_mean() {
        let m = ModelSpec::kac();
        let ic = InitialCondition::Gaussian { mean: vec![1.0], variance: vec![1.0] };
        let e = sample_initial(&m, &ic, 1_000_000, &Stream::from_seed(2)).unwrap();
        let mean = e.as_flat().iter().sum::<f64>() / 1e6;
        assert!((mean - 1.0).abs() <= 0.004, "mean {mean}");
    }

    #[test]
    fn rejects_support_outside_domain() {
        let m = ModelSpec::opinion(0.3, 0.1).unwrap();
        let ic = InitialCondition::UniformBox { lo: vec![-1.5], hi: vec![1.0] };
        assert!(sample_initial(&m, &ic, 10, &Stream::from_seed(3)).is_err());
        let g = InitialCondition::Gaussian { mean: vec![0.0], variance: vec![0.1] };
        assert!(sample_initial(&m, &g, 10, &Stream::from_seed(3)).is_err());
        let w = ModelSpec::wealth(0.2).unwrap();
        let neg = InitialCondition::PointMass { center: vec![-0.1] };
        assert!(sample_initial(&w, &neg, 10, &Stream::from_seed(3)).is_err());
        let wrong_dim = InitialCondition::PointMass { center: vec![0.0, 0.0] };
        assert!(sample_initial(&ModelSpec::kac(), &wrong_dim, 10, &Stream::from_seed(3)).is_err());
    }

    #[test]
    fn analytic_moments() {
        let ic = InitialCondition::UniformBox { lo: vec![0.0, -1.0], hi: vec![2.0, 1.0] };
        assert_eq!(ic.mean(), vec![1.0, 0.0]);
        assert!((ic.second_moment() - (4.0 / 3.0 + 1.0 / 3.0)).abs() < 1e-15);
        let g = InitialCondition::Gaussian { mean: vec![1.0], variance: vec![1.0] };
        assert_eq!(g.second_moment(), 2.0);
    }

    #[test]
    fn custom_atoms_resampled() {
        let m = ModelSpec::kac();
        let ic = InitialCondition::Custom { atoms: vec![vec![-1.0], vec![2.0]] };
        let e = sample_initial(&m, &ic, 1000, &Stream::from_seed(4)).unwrap();
        assert!(e.as_flat().iter().all(|x| *x == -1.0 || *x == 2.0));
    }
}
