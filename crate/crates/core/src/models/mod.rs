//! Collision models: maps `C(v, v*, theta)`, parameter laws, domains and the
//! samplers that feed the solvers.

mod equilibrium;
mod initial;
mod objective;

pub use equilibrium::{sample_equilibrium, EquilibriumKind, EquilibriumSpec};
pub use initial::{sample_initial, InitialCondition};
pub use objective::{weighted_average, Objective};

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::rng::{sample_unit_sphere, Stream};

/// Collision parameter. Scalar models store one entry.
pub type Theta = SmallVec<[f64; 4]>;

/// Model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    Kac,
    Wealth,
    Opinion,
    Morgenstern,
    KineticOpt,
}

impl ModelId {
    pub const ALL: [ModelId; 5] = [
        ModelId::Kac,
        ModelId::Wealth,
        ModelId::Opinion,
        ModelId::Morgenstern,
        ModelId::KineticOpt,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelId::Kac => "kac",
            ModelId::Wealth => "wealth",
            ModelId::Opinion => "opinion",
            ModelId::Morgenstern => "morgenstern",
            ModelId::KineticOpt => "kinetic_opt",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// State space of a model.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// The whole of R^dim.
    FullSpace { dim: usize },
    /// `[0, inf)`.
    HalfLine,
    /// The cube `[lo, hi]^dim`.
    Box { lo: f64, hi: f64, dim: usize },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::FullSpace { dim } | Domain::Box { dim, .. } => *dim,
            Domain::HalfLine => 1,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, Domain::Box { .. })
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        if v.len() != self.dim() || v.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self {
            Domain::FullSpace { .. } => true,
            Domain::HalfLine => v[0] >= 0.0,
            Domain::Box { lo, hi, .. } => v.iter().all(|x| (*lo..=*hi).contains(x)),
        }
    }

    /// Euclidean projection; componentwise clamp for a box.
    pub fn project(&self, v: &mut [f64]) {
        match self {
            Domain::FullSpace { .. } => {}
            Domain::HalfLine => v[0] = v[0].max(0.0),
            Domain::Box { lo, hi, .. } => v.iter_mut().for_each(|x| *x = x.clamp(*lo, *hi)),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::FullSpace { dim } => write!(f, "R^{dim}"),
            Domain::HalfLine => write!(f, "[0, inf)"),
            Domain::Box { lo, hi, dim } => write!(f, "[{lo}, {hi}]^{dim}"),
        }
    }
}

/// Law of the collision parameter. Every variant has bounded support.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaLaw {
    UniformInterval { lo: f64, hi: f64 },
    UnitSphere,
    UniformCube { dim: usize, half_width: f64 },
    /// Degenerate law, mainly for tests.
    PointMass(Vec<f64>),
}

impl ThetaLaw {
    pub fn dim(&self) -> usize {
        match self {
            ThetaLaw::UniformInterval { .. } => 1,
            ThetaLaw::UnitSphere => 3,
            ThetaLaw::UniformCube { dim, .. } => *dim,
            ThetaLaw::PointMass(p) => p.len(),
        }
    }

    /// `sup |theta|` over the support.
    pub fn sup_norm(&self) -> f64 {
        match self {
            ThetaLaw::UniformInterval { lo, hi } => lo.abs().max(hi.abs()),
            ThetaLaw::UnitSphere => 1.0,
            ThetaLaw::UniformCube { dim, half_width } => half_width * (*dim as f64).sqrt(),
            ThetaLaw::PointMass(p) => norm(p),
        }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        if theta.len() != self.dim() || theta.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self {
            ThetaLaw::UniformInterval { lo, hi } => (*lo..=*hi).contains(&theta[0]),
            ThetaLaw::UnitSphere => (norm(theta) - 1.0).abs() <= 1e-9,
            ThetaLaw::UniformCube { half_width, .. } => {
                theta.iter().all(|x| x.abs() <= *half_width)
            }
            ThetaLaw::PointMass(p) => p.as_slice() == theta,
        }
    }

    pub fn sample(&self, stream: &mut Stream) -> Theta {
        match self {
            ThetaLaw::UniformInterval { lo, hi } => smallvec::smallvec![stream.uniform(*lo, *hi)],
            ThetaLaw::UnitSphere => Theta::from_slice(&sample_unit_sphere(stream)),
            ThetaLaw::UniformCube { dim, half_width } => (0..*dim)
                .map(|_| stream.uniform(-half_width, *half_width))
                .collect(),
            ThetaLaw::PointMass(p) => Theta::from_slice(p),
        }
    }
}

impl fmt::Display for ThetaLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaLaw::UniformInterval { lo, hi } => write!(f, "Unif[{lo}, {hi}]"),
            ThetaLaw::UnitSphere => write!(f, "Unif(S^2)"),
            ThetaLaw::UniformCube { dim, half_width } => {
                write!(f, "Unif[-{half_width}, {half_width}]^{dim}")
            }
            ThetaLaw::PointMass(p) => write!(f, "delta{p:?}"),
        }
    }
}

/// Per-model constants.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Kac,
    Wealth {
        gamma: f64,
    },
    /// Opinion exchange with `P = 1`, `D(v, v*) = 1 - v^2` and noise
    /// half-width `sigma`.
    Opinion {
        gamma: f64,
        sigma: f64,
    },
    Morgenstern,
    KineticOpt {
        dim: usize,
        lambda: f64,
        sigma: f64,
        beta_weight: f64,
        objective: Objective,
    },
}

/// Which closed-form references exist for a model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct OracleFlags {
    pub mean_decay: bool,
    pub mean_conservation: bool,
    pub momentum_energy_conservation: bool,
    pub energy_conservation: bool,
    pub equilibrium_sampler: bool,
}

/// Form of a linear-growth bound `|C| <= c (1 + |theta|) g(v, v*)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthForm {
    /// `g = |v| + |v*|`.
    Homogeneous,
    /// `g = 1 + |v| + |v*|`.
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthBound {
    pub constant: f64,
    pub form: GrowthForm,
}

/// Outcome flags of a single collision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CollisionOutcome {
    /// The opinion map left `[-1, 1]` and the result was clamped back.
    pub clamped: bool,
}

/// A collision model together with its parameter law and domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    kind: ModelKind,
    theta_law: ThetaLaw,
    domain: Domain,
}

impl ModelSpec {
    /// Kac's caricature of a Maxwell gas on the line.
    pub fn kac() -> Self {
        ModelSpec {
            kind: ModelKind::Kac,
            theta_law: ThetaLaw::UniformInterval { lo: 0.0, hi: 2.0 * PI },
            domain: Domain::FullSpace { dim: 1 },
        }
    }

    /// Conservative wealth exchange, `eta ~ Unif[-gamma, gamma]`.
    pub fn wealth(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(Error::invalid(format!("wealth gamma must lie in (0, 1/2), got {gamma}")));
        }
        Ok(ModelSpec {
            kind: ModelKind::Wealth { gamma },
            theta_law: ThetaLaw::UniformInterval { lo: -gamma, hi: gamma },
            domain: Domain::HalfLine,
        })
    }

    /// Opinion formation on `[-1, 1]`.
    ///
    /// Requires `gamma in (0, 1/2)`, `sigma <= gamma` and `sigma <= (1 - gamma) / 2`;
    /// the last condition is what keeps `v'` inside `[-1, 1]` for every admissible input.
    pub fn opinion(gamma: f64, sigma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(Error::invalid(format!("opinion gamma must lie in (0, 1/2), got {gamma}")));
        }
        if !(sigma >= 0.0 && sigma <= gamma) {
            return Err(Error::invalid(format!(
                "opinion noise half-width must satisfy 0 <= sigma <= gamma, got sigma={sigma}, gamma={gamma}"
            )));
        }
        if sigma > (1.0 - gamma) / 2.0 {
            return Err(Error::invalid(format!(
                "opinion noise half-width must satisfy sigma <= (1 - gamma)/2 = {}, got {sigma}",
                (1.0 - gamma) / 2.0
            )));
        }
        Ok(Self::opinion_unchecked(gamma, sigma))
    }

    /// Opinion model without admissibility checks. Collisions that leave the
    /// domain are clamped and reported through [`CollisionOutcome::clamped`].
    pub fn opinion_unchecked(gamma: f64, sigma: f64) -> Self {
        ModelSpec {
            kind: ModelKind::Opinion { gamma, sigma },
            theta_law: ThetaLaw::UniformInterval { lo: -sigma, hi: sigma },
            domain: Domain::Box { lo: -1.0, hi: 1.0, dim: 1 },
        }
    }

    /// Boltzmann collisions in the Morgenstern parametrization.
    pub fn morgenstern() -> Self {
        ModelSpec {
            kind: ModelKind::Morgenstern,
            theta_law: ThetaLaw::UnitSphere,
            domain: Domain::FullSpace { dim: 3 },
        }
    }

    /// Kinetic consensus optimization on the box `[-1, 1]^dim`.
    pub fn kinetic_opt(
        dim: usize,
        lambda: f64,
        sigma: f64,
        beta_weight: f64,
        objective: Objective,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("kinetic optimization needs dim >= 1"));
        }
        if !(lambda > 0.0 && sigma > 0.0 && beta_weight > 0.0) {
            return Err(Error::invalid(format!(
                "kinetic optimization needs lambda, sigma, beta_weight > 0 (got {lambda}, {sigma}, {beta_weight})"
            )));
        }
        if let Some(center_dim) = objective.dim() {
            if center_dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: center_dim });
            }
        }
        Ok(ModelSpec {
            kind: ModelKind::KineticOpt { dim, lambda, sigma, beta_weight, objective },
            theta_law: ThetaLaw::UniformCube { dim, half_width: 1.0 },
            domain: Domain::Box { lo: -1.0, hi: 1.0, dim },
        })
    }

    /// Replaces the parameter law, e.g. by a point mass in tests.
    pub fn with_theta_law(mut self, law: ThetaLaw) -> Result<Self> {
        let expected = self.theta_law.dim();
        if law.dim() != expected {
            return Err(Error::DimensionMismatch { expected, got: law.dim() });
        }
        if let ThetaLaw::PointMass(p) = &law {
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("point-mass parameter must be finite"));
            }
        }
        self.theta_law = law;
        Ok(self)
    }

    pub fn id(&self) -> ModelId {
        match self.kind {
            ModelKind::Kac => ModelId::Kac,
            ModelKind::Wealth { .. } => ModelId::Wealth,
            ModelKind::Opinion { .. } => ModelId::Opinion,
            ModelKind::Morgenstern => ModelId::Morgenstern,
            ModelKind::KineticOpt { .. } => ModelId::KineticOpt,
        }
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn theta_law(&self) -> &ThetaLaw {
        &self.theta_law
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        self.domain.contains(v)
    }

    pub fn oracle_flags(&self) -> OracleFlags {
        match self.kind {
            ModelKind::Kac => OracleFlags {
                mean_decay: true,
                energy_conservation: true,
                equilibrium_sampler: true,
                ..Default::default()
            },
            ModelKind::Wealth { .. } => OracleFlags { mean_conservation: true, ..Default::default() },
            ModelKind::Morgenstern => OracleFlags {
                momentum_energy_conservation: true,
                energy_conservation: true,
                equilibrium_sampler: true,
                ..Default::default()
            },
            ModelKind::Opinion { .. } | ModelKind::KineticOpt { .. } => OracleFlags::default(),
        }
    }

    /// Certified Lipschitz constant, where one is known in closed form.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self.kind {
            ModelKind::Kac | ModelKind::Wealth { .. } => Some(1.0),
            ModelKind::Opinion { gamma, sigma } => Some(1.0 + gamma + 2.0 * sigma),
            ModelKind::Morgenstern => Some(2.0),
            ModelKind::KineticOpt { .. } => None,
        }
    }

    /// Certified growth bound.
    ///
    /// The opinion map has `C(0, 0, eta) = eta`, which no homogeneous bound
    /// can dominate, so it is certified in affine form.
    pub fn growth_bound(&self) -> GrowthBound {
        let homogeneous = |constant| GrowthBound { constant, form: GrowthForm::Homogeneous };
        match &self.kind {
            ModelKind::Kac | ModelKind::Wealth { .. } | ModelKind::Morgenstern => homogeneous(1.0),
            ModelKind::Opinion { .. } => GrowthBound { constant: 1.0, form: GrowthForm::Affine },
            ModelKind::KineticOpt { lambda, sigma, .. } => {
                homogeneous(((1.0 - lambda).abs() + lambda).max(2.0 * sigma))
            }
        }
    }

    /// Draws a collision parameter from the model's law.
    pub fn sample_theta(&self, stream: &mut Stream) -> Theta {
        self.theta_law.sample(stream)
    }

    fn check_inputs(&self, v: &[f64], v_star: &[f64], theta: &[f64], out: &[f64]) -> Result<()> {
        let d = self.dim();
        for len in [v.len(), v_star.len(), out.len()] {
            if len != d {
                return Err(Error::DimensionMismatch { expected: d, got: len });
            }
        }
        for s in [v, v_star] {
            if !self.domain.contains(s) {
                return Err(Error::OutsideDomain {
                    state: s.to_vec(),
                    domain: self.domain.to_string(),
                });
            }
        }
        if !self.theta_law.contains(theta) {
            return Err(Error::ThetaOutsideSupport {
                theta: theta.to_vec(),
                law: self.theta_law.to_string(),
            });
        }
        Ok(())
    }

    /// Writes `C(v, v*, theta)` into `out`.
    pub fn collide(
        &self,
        v: &[f64],
        v_star: &[f64],
        theta: &[f64],
        out: &mut [f64],
    ) -> Result<CollisionOutcome> {
        self.check_inputs(v, v_star, theta, out)?;
        let mut outcome = CollisionOutcome::default();
        match &self.kind {
            ModelKind::Kac => {
                let (s, c) = theta[0].sin_cos();
                out[0] = v[0] * c - v_star[0] * s;
            }
            ModelKind::Wealth { gamma } => {
                out[0] = v[0] - gamma * (v[0] - v_star[0]) + theta[0] * v_star[0];
                // (1 - gamma) v + (gamma + eta) v* >= 0 exactly; guard the sign of zero.
                out[0] = out[0].max(0.0);
            }
            ModelKind::Opinion { gamma, .. } => {
                let x = v[0];
                let y = x - gamma * (x - v_star[0]) + (1.0 - x * x) * theta[0];
                if y.abs() > 1.0 {
                    outcome.clamped = true;
                }
                out[0] = y.clamp(-1.0, 1.0);
            }
            ModelKind::Morgenstern => {
                let proj: f64 = (0..3).map(|k| theta[k] * (v_star[k] - v[k])).sum();
                for k in 0..3 {
                    out[k] = v[k] + theta[k] * proj;
                }
            }
            ModelKind::KineticOpt { lambda, sigma, beta_weight, objective, .. } => {
                let d = v.len();
                let mut avg: SmallVec<[f64; 8]> = smallvec::smallvec![0.0; d];
                objective::weighted_average_into(objective, *beta_weight, v, v_star, &mut avg);
                for k in 0..d {
                    let pull = avg[k] - v[k];
                    out[k] = v[k] + lambda * pull + sigma * pull * theta[k];
                }
                self.domain.project(out);
            }
        }
        Ok(outcome)
    }

    /// Allocating convenience wrapper around [`ModelSpec::collide`].
    pub fn collide_vec(&self, v: &[f64], v_star: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.collide(v, v_star, theta, &mut out)?;
        Ok(out)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn kac_examples() {
        let m = ModelSpec::kac();
        assert_eq!(m.collide_vec(&[1.0], &[2.0], &[0.0]).unwrap(), vec![1.0]);
        let out = m.collide_vec(&[1.0], &[2.0], &[PI / 2.0]).unwrap();
        assert!((out[0] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn wealth_example() {
        let m = ModelSpec::wealth(0.25).unwrap();
        assert_eq!(m.collide_vec(&[4.0], &[2.0], &[0.0]).unwrap(), vec![3.5]);
    }

    #[test]
    fn morgenstern_example() {
        let m = ModelSpec::morgenstern();
        let out = m.collide_vec(&[1.0, 0.0, 0.0], &[0.0; 3], &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn kinetic_opt_fixed_point() {
        let obj = Objective::ShiftedQuadratic { center: vec![0.0, 0.0] };
        let m = ModelSpec::kinetic_opt(2, 1.0, 0.5, 10.0, obj).unwrap();
        let out = m.collide_vec(&[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(out, vec![1.0, 1.0]);
    }

    #[test]
    fn morgenstern_pairwise_conservation() {
        let m = ModelSpec::morgenstern();
        let mut s = Stream::from_seed(17);
        for _ in 0..100 {
            let v: Vec<f64> = (0..3).map(|_| s.uniform(-3.0, 3.0)).collect();
            let w: Vec<f64> = (0..3).map(|_| s.uniform(-3.0, 3.0)).collect();
            let e = m.sample_theta(&mut s);
            let vp = m.collide_vec(&v, &w, &e).unwrap();
            let wp = m.collide_vec(&w, &v, &e).unwrap();
            let sum_before: Vec<f64> = (0..3).map(|k| v[k] + w[k]).collect();
            let sum_after: Vec<f64> = (0..3).map(|k| vp[k] + wp[k]).collect();
            assert!(close(&sum_before, &sum_after, 1e-10));
            let e0 = norm(&v).powi(2) + norm(&w).powi(2);
            let e1 = norm(&vp).powi(2) + norm(&wp).powi(2);
            assert!((e0 - e1).abs() <= 1e-10 * e0.max(1.0));
        }
    }

    #[test]
    fn kac_pairwise_energy() {
        let m = ModelSpec::kac();
        let mut s = Stream::from_seed(18);
        for _ in 0..100 {
            let (v, w) = (s.uniform(-4.0, 4.0), s.uniform(-4.0, 4.0));
            let th = m.sample_theta(&mut s)[0];
            let vp = m.collide_vec(&[v], &[w], &[th]).unwrap()[0];
            // partner parameter theta* = -theta, mapped back into [0, 2 pi]
            let wp = m.collide_vec(&[w], &[v], &[2.0 * PI - th]).unwrap()[0];
            let e0 = v * v + w * w;
            assert!((vp * vp + wp * wp - e0).abs() <= 1e-10 * e0.max(1.0));
        }
    }

    #[test]
    fn rejects_theta_outside_support() {
        let m = ModelSpec::wealth(0.25).unwrap();
        assert!(matches!(
            m.collide_vec(&[1.0], &[1.0], &[0.3]),
            Err(Error::ThetaOutsideSupport { .. })
        ));
        let k = ModelSpec::kac();
        assert!(k.collide_vec(&[1.0], &[1.0], &[-0.1]).is_err());
        assert!(ModelSpec::morgenstern()
            .collide_vec(&[0.0; 3], &[0.0; 3], &[1.0, 1.0, 0.0])
            .is_err());
    }

    #[test]
    fn rejects_state_outside_domain() {
        let m = ModelSpec::opinion(0.3, 0.1).unwrap();
        assert!(matches!(
            m.collide_vec(&[1.5], &[0.0], &[0.0]),
            Err(Error::OutsideDomain { .. })
        ));
        let w = ModelSpec::wealth(0.2).unwrap();
        assert!(w.collide_vec(&[-1.0], &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn constant_admissibility() {
        assert!(ModelSpec::wealth(0.5).is_err());
        assert!(ModelSpec::wealth(0.0).is_err());
        assert!(ModelSpec::opinion(0.3, 0.31).is_err());
        // sigma <= gamma alone does not keep v' in [-1, 1] once gamma > 1/3
        assert!(ModelSpec::opinion(0.45, 0.45).is_err());
        assert!(ModelSpec::opinion(0.45, 0.27).is_ok());
        let obj = Objective::ShiftedQuadratic { center: vec![0.0] };
        assert!(ModelSpec::kinetic_opt(1, 0.0, 1.0, 1.0, obj.clone()).is_err());
        assert!(ModelSpec::kinetic_opt(2, 1.0, 1.0, 1.0, obj).is_err());
    }

    #[test]
    fn opinion_clamp_is_reported() {
        let m = ModelSpec::opinion_unchecked(0.2, 0.9);
        let mut out = [0.0];
        let o = m.collide(&[0.5], &[1.0], &[0.9], &mut out).unwrap();
        assert!(o.clamped);
        assert_eq!(out[0], 1.0);
        let ok = ModelSpec::opinion(0.2, 0.2).unwrap();
        let o = ok.collide(&[0.5], &[1.0], &[0.2], &mut out).unwrap();
        assert!(!o.clamped);
    }

    #[test]
    fn theta_samples_respect_support() {
        let mut s = Stream::from_seed(5);
        let w = ModelSpec::wealth(0.25).unwrap();
        for _ in 0..10_000 {
            let t = w.sample_theta(&mut s);
            assert!((-0.25..=0.25).contains(&t[0]));
        }
        let m = ModelSpec::morgenstern();
        for _ in 0..1000 {
            assert!((norm(&m.sample_theta(&mut s)) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn kac_theta_mean() {
        let mut s = Stream::from_seed(6);
        let m = ModelSpec::kac();
        let n = 1_000_000;
        let mean = (0..n).map(|_| m.sample_theta(&mut s)[0]).sum::<f64>() / n as f64;
        let tol = 4.0 * (2.0 * PI / 12f64.sqrt()) / 1e3;
        assert!((mean - PI).abs() <= tol, "mean {mean}");
    }

    #[test]
    fn point_mass_override() {
        let m = ModelSpec::kac().with_theta_law(ThetaLaw::PointMass(vec![0.0])).unwrap();
        let mut s = Stream::from_seed(1);
        assert_eq!(m.sample_theta(&mut s).as_slice(), &[0.0]);
        assert!(ModelSpec::kac().with_theta_law(ThetaLaw::PointMass(vec![0.0, 1.0])).is_err());
    }
}
