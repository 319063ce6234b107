//! Sampling-based invariant suites.
//!
//! Each check draws random tuples, evaluates a bound and records the worst
//! case together with the number of violations. A report passes when every
//! entry passes.

use serde::{Deserialize, Serialize};

use crate::ensemble::SchemeParams;
use crate::error::Result;
use crate::metrics::{w1_1d, w1_exact_1d, w1_exact_matching, w1_sliced};
use crate::models::{
    Domain, GrowthForm, InitialCondition, ModelId, ModelKind, ModelSpec, Objective,
};
use crate::rng::{split_seed, Stream};
use crate::solvers::run;

/// Number of random tuples per check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Depth {
    Quick,
    Full,
}

impl Depth {
    pub fn samples(&self) -> usize {
        match self {
            Depth::Quick => 2_000,
            Depth::Full => 10_000,
        }
    }
}

/// Factor between the largest ratio seen on the fitting sample and the
/// reported constant of a model without a certified bound.
pub const FITTED_MARGIN: f64 = 1.25;

/// Relative slack for floating-point rounding in certified bounds.
const ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub model: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub measured: f64,
    pub bound: f64,
    /// `bound - measured`; negative on failure.
    pub margin: f64,
    pub violations: u64,
    pub samples: usize,
    pub detail: String,
}

impl CheckResult {
    fn new(suite: &str, model: &str, measured: f64, bound: f64, violations: u64, samples: usize) -> Self {
        CheckResult {
            suite: suite.into(),
            model: model.into(),
            passed: violations == 0 && measured.is_finite(),
            measured,
            bound,
            margin: bound - measured,
            violations,
            samples,
            detail: String::new(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub depth: Depth,
    pub entries: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.entries.iter().filter(|e| !e.passed)
    }
}

/// Parameters used when a model is validated without a configuration.
pub fn default_model(id: ModelId) -> ModelSpec {
    match id {
        ModelId::Kac => ModelSpec::kac(),
        ModelId::Wealth => ModelSpec::wealth(0.25).expect("valid"),
        ModelId::Opinion => ModelSpec::opinion(0.3, 0.1).expect("valid"),
        ModelId::Morgenstern => ModelSpec::morgenstern(),
        ModelId::KineticOpt => ModelSpec::kinetic_opt(
            2,
            0.5,
            0.3,
            5.0,
            Objective::Rastrigin { center: vec![0.2, -0.1], amplitude: 1.0 },
        )
        .expect("valid"),
    }
}

/// An initial law supported inside the model domain.
pub fn default_initial(model: &ModelSpec) -> InitialCondition {
    match model.domain() {
        Domain::FullSpace { dim } => InitialCondition::Gaussian { mean: vec![0.5; *dim], variance: vec![1.0; *dim] },
        Domain::HalfLine => InitialCondition::UniformBox { lo: vec![0.0], hi: vec![2.0] },
        Domain::Box { lo, hi, dim } => InitialCondition::UniformBox { lo: vec![*lo; *dim], hi: vec![*hi; *dim] },
    }
}

/// A state drawn uniformly from a bounded window of the domain.
fn sample_state(model: &ModelSpec, stream: &mut Stream) -> Vec<f64> {
    match model.domain() {
        Domain::FullSpace { dim } => (0..*dim).map(|_| stream.uniform(-5.0, 5.0)).collect(),
        Domain::HalfLine => vec![stream.uniform(0.0, 10.0)],
        Domain::Box { lo, hi, dim } => (0..*dim).map(|_| stream.uniform(*lo, *hi)).collect(),
    }
}

/// A second state, half the time a small perturbation of `v` to probe the
/// local Lipschitz ratio.
fn sample_partner_state(model: &ModelSpec, v: &[f64], stream: &mut Stream) -> Vec<f64> {
    if stream.next_f64() < 0.5 {
        return sample_state(model, stream);
    }
    let scale = 10f64.powf(stream.uniform(-6.0, -1.0));
    let mut w: Vec<f64> = v.iter().map(|x| x + scale * stream.uniform(-1.0, 1.0)).collect();
    model.domain().project(&mut w);
    w
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Every post-collision state lies in the domain and no clamp was needed.
pub fn domain_closure(model: &ModelSpec, samples: usize, seed: u64) -> Result<CheckResult> {
    let mut stream = Stream::from_seed(split_seed(seed, 11));
    let d = model.dim();
    let mut out = vec![0.0; d];
    let (mut clamps, mut escapes) = (0u64, 0u64);
    for _ in 0..samples {
        let v = sample_state(model, &mut stream);
        let w = sample_state(model, &mut stream);
        let theta = model.sample_theta(&mut stream);
        let outcome = model.collide(&v, &w, &theta, &mut out)?;
        clamps += outcome.clamped as u64;
        escapes += !model.contains(&out) as u64;
    }
    Ok(CheckResult::new("domain_closure", model.id().name(), (clamps + escapes) as f64, 0.0, clamps + escapes, samples)
        .with_detail(format!("{clamps} clamp events, {escapes} states outside {}", model.domain())))
}

/// Largest value of `|C(v,v*,t) - C(w,w*,t)| / ((1 + |t|)(|v - w| + |v* - w*|))`.
fn lipschitz_ratios(model: &ModelSpec, samples: usize, stream: &mut Stream) -> Result<Vec<f64>> {
    let mut ratios = Vec::with_capacity(samples);
    while ratios.len() < samples {
        let v = sample_state(model, stream);
        let vs = sample_state(model, stream);
        let w = sample_partner_state(model, &v, stream);
        let ws = sample_partner_state(model, &vs, stream);
        let theta = model.sample_theta(stream);
        let denom = (1.0 + norm(&theta)) * (dist(&v, &w) + dist(&vs, &ws));
        if denom == 0.0 {
            continue;
        }
        let a = model.collide_vec(&v, &vs, &theta)?;
        let b = model.collide_vec(&w, &ws, &theta)?;
        ratios.push(dist(&a, &b) / denom);
    }
    Ok(ratios)
}

/// Checks the Lipschitz bound on `samples` random tuples.
///
/// Models with a closed-form constant are checked against it. Otherwise the
/// constant is fitted as [`FITTED_MARGIN`] times the largest ratio on one
/// sample and checked on a second, disjoint sample.
pub fn lipschitz(model: &ModelSpec, samples: usize, seed: u64) -> Result<CheckResult> {
    let name = model.id().name();
    let mut check = Stream::from_seed(split_seed(seed, 21));
    match model.lipschitz_bound() {
        Some(l) => {
            let ratios = lipschitz_ratios(model, samples, &mut check)?;
            let worst = ratios.iter().copied().fold(0.0, f64::max);
            let violations = ratios.iter().filter(|&&r| r > l * (1.0 + ROUNDING)).count() as u64;
            Ok(CheckResult::new("lipschitz", name, worst, l, violations, samples)
                .with_detail(format!("certified L = {l}")))
        }
        None => {
            let mut fit = Stream::from_seed(split_seed(seed, 22));
            let fitted = FITTED_MARGIN * lipschitz_ratios(model, samples, &mut fit)?.into_iter().fold(0.0, f64::max);
            let ratios = lipschitz_ratios(model, samples, &mut check)?;
            let worst = ratios.iter().copied().fold(0.0, f64::max);
            let violations = ratios.iter().filter(|&&r| r > fitted).count() as u64;
            Ok(CheckResult::new("lipschitz", name, worst, fitted, violations, samples)
                .with_detail(format!("fitted L = {fitted:.6} on a disjoint sample (not certified)")))
        }
    }
}

/// Checks `|C(v,v*,t)| <= C (1 + |t|)(|v| + |v*|)`, or with `1 + |v| + |v*|`
/// for models whose bound is affine.
pub fn growth(model: &ModelSpec, samples: usize, seed: u64) -> Result<CheckResult> {
    let bound = model.growth_bound();
    let mut stream = Stream::from_seed(split_seed(seed, 31));
    let (mut worst, mut violations) = (0.0f64, 0u64);
    for _ in 0..samples {
        let v = sample_state(model, &mut stream);
        let vs = sample_state(model, &mut stream);
        let theta = model.sample_theta(&mut stream);
        let c = model.collide_vec(&v, &vs, &theta)?;
        let size = match bound.form {
            GrowthForm::Homogeneous => norm(&v) + norm(&vs),
            GrowthForm::Affine => 1.0 + norm(&v) + norm(&vs),
        };
        let denom = (1.0 + norm(&theta)) * size;
        let ratio = if denom > 0.0 { norm(&c) / denom } else if norm(&c) > 0.0 { f64::INFINITY } else { 0.0 };
        worst = worst.max(ratio);
        violations += (ratio > bound.constant * (1.0 + ROUNDING)) as u64;
    }
    Ok(CheckResult::new("growth", model.id().name(), worst, bound.constant, violations, samples)
        .with_detail(format!("{:?} form", bound.form).to_lowercase()))
}

/// Pairwise conservation laws, or the mean identity in expectation for the
/// wealth model. `None` for models without a conserved quantity.
pub fn conservation(model: &ModelSpec, samples: usize, seed: u64) -> Result<Option<CheckResult>> {
    let mut stream = Stream::from_seed(split_seed(seed, 41));
    let name = model.id().name();
    match model.kind() {
        ModelKind::Kac | ModelKind::Morgenstern => {
            let mut worst = 0.0f64;
            for _ in 0..samples {
                let v = sample_state(model, &mut stream);
                let vs = sample_state(model, &mut stream);
                let theta = model.sample_theta(&mut stream);
                // the partner collides with the reflected parameter
                let theta_star: Vec<f64> = match model.kind() {
                    ModelKind::Kac => vec![2.0 * std::f64::consts::PI - theta[0]],
                    _ => theta.to_vec(),
                };
                let a = model.collide_vec(&v, &vs, &theta)?;
                let b = model.collide_vec(&vs, &v, &theta_star)?;
                let scale = 1.0 + norm(&v).powi(2) + norm(&vs).powi(2);
                let energy = (norm(&a).powi(2) + norm(&b).powi(2) - norm(&v).powi(2) - norm(&vs).powi(2)).abs();
                worst = worst.max(energy / scale);
                if let ModelKind::Morgenstern = model.kind() {
                    for k in 0..3 {
                        worst = worst.max((a[k] + b[k] - v[k] - vs[k]).abs() / scale);
                    }
                }
            }
            let tol = 1e-12;
            Ok(Some(
                CheckResult::new("conservation", name, worst, tol, (worst > tol) as u64, samples)
                    .with_detail("pairwise, relative to 1 + |v|^2 + |v*|^2"),
            ))
        }
        ModelKind::Wealth { .. } => {
            let mut values = Vec::with_capacity(samples);
            for _ in 0..samples {
                let v = sample_state(model, &mut stream);
                let vs = sample_state(model, &mut stream);
                let a = model.collide_vec(&v, &vs, &model.sample_theta(&mut stream))?;
                let b = model.collide_vec(&vs, &v, &model.sample_theta(&mut stream))?;
                values.push(a[0] + b[0] - v[0] - vs[0]);
            }
            let s = super::stats::summarize(&values);
            let bound = 4.0 * s.stderr;
            Ok(Some(
                CheckResult::new("conservation", name, s.mean.abs(), bound, (s.mean.abs() > bound) as u64, samples)
                    .with_detail("mean of v' + v*' - v - v* within 4 standard errors"),
            ))
        }
        ModelKind::Opinion { .. } | ModelKind::KineticOpt { .. } => Ok(None),
    }
}

/// Identity, symmetry and triangle inequality of the W1 estimators, agreement
/// of the 1-D and matching solvers, and the sliced lower bound.
pub fn metric_axioms(samples: usize, seed: u64) -> Result<CheckResult> {
    let mut stream = Stream::from_seed(split_seed(seed, 51));
    let instances = (samples / 50).max(20);
    let mut worst = 0.0f64;
    let tol = 1e-10;
    for _ in 0..instances {
        let n = 1 + (stream.next_f64() * 16.0) as usize;
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| stream.uniform(-3.0, 3.0)).collect() };
        let (x, y, z) = (draw(n), draw(n), draw(n));
        let xy = w1_exact_1d(&x, &y)?;
        worst = worst.max(w1_exact_1d(&x, &x)?);
        worst = worst.max((xy - w1_exact_1d(&y, &x)?).abs());
        worst = worst.max(xy - w1_exact_1d(&x, &z)? - w1_exact_1d(&z, &y)?);
        worst = worst.max((xy - w1_exact_matching(&x, &y, 1)?).abs());
        let m = 1 + (stream.next_f64() * 12.0) as usize;
        let u: Vec<f64> = (0..m).map(|_| stream.uniform(-3.0, 3.0)).collect();
        worst = worst.max((w1_1d(&x, &u)? - w1_1d(&u, &x)?).abs());
        let (p, q) = ((0..3 * n).map(|_| stream.uniform(-1.0, 1.0)).collect::<Vec<_>>(), (0..3 * n).map(|_| stream.uniform(-1.0, 1.0)).collect::<Vec<_>>());
        let exact = w1_exact_matching(&p, &q, 3)?;
        let sliced = w1_sliced(&p, &q, 3, 16, &stream.fork(7))?;
        worst = worst.max(sliced - exact);
    }
    Ok(CheckResult::new("metric_axioms", "metrics", worst, tol, (worst > tol) as u64, instances)
        .with_detail("identity, symmetry, triangle, 1-D vs matching, sliced <= exact"))
}

/// A short run gives bitwise identical ensembles on one and four threads.
pub fn reproducibility(model: &ModelSpec, particles: usize, seed: u64) -> Result<CheckResult> {
    let ic = default_initial(model);
    let params = SchemeParams::nanbu(0.1, 0.5, particles, seed);
    let go = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(|| run(&params, model, &ic))
    };
    let a = go(1)?;
    let b = go(4)?;
    let differing = a
        .final_ensemble
        .as_flat()
        .iter()
        .zip(b.final_ensemble.as_flat())
        .filter(|(x, y)| x.to_bits() != y.to_bits())
        .count() as u64;
    Ok(CheckResult::new("reproducibility", model.id().name(), differing as f64, 0.0, differing, particles)
        .with_detail("1 vs 4 threads, bitwise"))
}

/// Which models to validate.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSelector {
    One(ModelSpec),
    All,
}

impl ModelSelector {
    fn models(&self) -> Vec<ModelSpec> {
        match self {
            ModelSelector::One(m) => vec![m.clone()],
            ModelSelector::All => ModelId::ALL.iter().map(|&id| default_model(id)).collect(),
        }
    }
}

/// Runs every suite on the selected models. Errors raised inside a suite are
/// recorded as failed entries.
pub fn validate(selector: &ModelSelector, depth: Depth, seed: u64) -> ValidationReport {
    let n = depth.samples();
    let mut entries = Vec::new();
    let mut push = |suite: &str, model: &str, r: Result<CheckResult>| {
        entries.push(r.unwrap_or_else(|e| {
            CheckResult::new(suite, model, f64::NAN, 0.0, 1, 0).with_detail(e.to_string())
        }))
    };
    for model in selector.models() {
        let name = model.id().name();
        push("domain_closure", name, domain_closure(&model, n, seed));
        push("lipschitz", name, lipschitz(&model, n, seed));
        push("growth", name, growth(&model, n, seed));
        match conservation(&model, n, seed) {
            Ok(Some(r)) => push("conservation", name, Ok(r)),
            Ok(None) => {}
            Err(e) => push("conservation", name, Err(e)),
        }
        push("reproducibility", name, reproducibility(&model, n, seed));
    }
    push("metric_axioms", "metrics", metric_axioms(n, seed));
    ValidationReport { depth, entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes_on_every_model() {
        let report = validate(&ModelSelector::All, Depth::Quick, 1);
        for e in &report.entries {
            assert!(e.passed, "{e:?}");
        }
        assert!(report.entries.iter().any(|e| e.suite == "conservation" && e.model == "wealth"));
    }

    #[test]
    fn corrupted_opinion_reports_clamps() {
        let bad = ModelSpec::opinion_unchecked(0.3, 0.6);
        let r = domain_closure(&bad, 2_000, 3).unwrap();
        assert!(!r.passed);
        assert!(r.violations > 0);
        assert!(r.detail.contains("clamp"));
        let report = validate(&ModelSelector::One(bad), Depth::Quick, 3);
        assert!(!report.passed());
    }

    #[test]
    fn kinetic_opt_uses_fitted_constant() {
        let m = default_model(ModelId::KineticOpt);
        let r = lipschitz(&m, 2_000, 5).unwrap();
        assert!(r.detail.contains("fitted"));
        assert!(r.passed, "{r:?}");
    }
}
