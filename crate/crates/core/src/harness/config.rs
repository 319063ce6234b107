//! JSON run configuration.
//!
//! A configuration is one JSON object with the sections `model`,
//! `initial_condition`, `scheme`, `sweep` and `output`. Unknown keys anywhere
//! are rejected.
//!
//! ```json
//! {
//!   "model": { "kind": "kac" },
//!   "initial_condition": { "kind": "gaussian", "mean": [1.0], "variance": [1.0] },
//!   "scheme": { "scheme": "nanbu", "dt": 0.05, "horizon": 0.5, "seed": 7 },
//!   "sweep": {
//!     "axis": "particle_count",
//!     "values": [250, 500, 1000, 2000],
//!     "replications": 40,
//!     "reference": { "kind": "large_n_run", "factor": 32 }
//!   },
//!   "output": { "prefix": "kac_n" }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::{Axis, Reference, SweepPlan};
use crate::ensemble::{Scheme, SchemeParams};
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_SLICED_DIRECTIONS;
use crate::models::{EquilibriumSpec, InitialCondition, ModelKind, ModelSpec, Objective};

/// The `model` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Kac {},
    Wealth {
        gamma: f64,
    },
    Opinion {
        gamma: f64,
        sigma: f64,
    },
    Morgenstern {},
    KineticOpt {
        dim: usize,
        lambda: f64,
        sigma: f64,
        beta_weight: f64,
        objective: Objective,
    },
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        match self {
            ModelConfig::Kac {} => Ok(ModelSpec::kac()),
            ModelConfig::Wealth { gamma } => ModelSpec::wealth(*gamma),
            ModelConfig::Opinion { gamma, sigma } => ModelSpec::opinion(*gamma, *sigma),
            ModelConfig::Morgenstern {} => Ok(ModelSpec::morgenstern()),
            ModelConfig::KineticOpt { dim, lambda, sigma, beta_weight, objective } => {
                ModelSpec::kinetic_opt(*dim, *lambda, *sigma, *beta_weight, objective.clone())
            }
        }
    }

    pub fn from_spec(model: &ModelSpec) -> Self {
        match model.kind() {
            ModelKind::Kac => ModelConfig::Kac {},
            ModelKind::Wealth { gamma } => ModelConfig::Wealth { gamma: *gamma },
            ModelKind::Opinion { gamma, sigma } => ModelConfig::Opinion { gamma: *gamma, sigma: *sigma },
            ModelKind::Morgenstern => ModelConfig::Morgenstern {},
            ModelKind::KineticOpt { dim, lambda, sigma, beta_weight, objective } => ModelConfig::KineticOpt {
                dim: *dim,
                lambda: *lambda,
                sigma: *sigma,
                beta_weight: *beta_weight,
                objective: objective.clone(),
            },
        }
    }
}

/// The `scheme` section. `n_particles` and `dt` may be omitted when a sweep
/// supplies them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    #[serde(default)]
    pub dt: Option<f64>,
    pub horizon: f64,
    #[serde(default)]
    pub n_particles: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub record_every: u64,
    /// TRMC equilibrium; matched to the initial law when omitted.
    #[serde(default)]
    pub equilibrium: Option<EquilibriumSpec>,
}

fn one() -> u64 {
    1
}

/// The `reference` entry of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceConfig {
    LargeNRun { factor: usize },
    MomentOracle { quantity: crate::oracles::Quantity },
}

/// The `sweep` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    pub values: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    pub reference: ReferenceConfig,
    #[serde(default = "default_directions")]
    pub sliced_directions: usize,
    /// Time-step sweeps only: also run the particle scheme at
    /// `scheme.n_particles` and compare its empirical moment with the oracle.
    #[serde(default)]
    pub monte_carlo: bool,
}

fn default_replications() -> usize {
    20
}

fn default_directions() -> usize {
    DEFAULT_SLICED_DIRECTIONS
}

/// Output format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Svg => "svg",
        }
    }
}

/// The `output` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_prefix")]
    pub prefix: String,
    /// Used when the command line names no format.
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default = "default_orders")]
    pub moment_orders: Vec<f64>,
}

fn default_prefix() -> String {
    "run".into()
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn default_orders() -> Vec<f64> {
    vec![1.0, 2.0, 3.0]
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { prefix: default_prefix(), formats: default_formats(), moment_orders: default_orders() }
    }
}

/// A whole configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelConfig,
    pub initial_condition: InitialCondition,
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        self.model.build().map_err(config_error)
    }

    /// Equilibrium for TRMC runs: the configured one, otherwise the one
    /// matched to the exact moments of the initial law.
    pub fn equilibrium(&self, model: &ModelSpec) -> Option<EquilibriumSpec> {
        match self.scheme.scheme {
            Scheme::Nanbu => None,
            Scheme::Trmc => Some(
                self.scheme
                    .equilibrium
                    .clone()
                    .unwrap_or_else(|| EquilibriumSpec::from_law(model, &self.initial_condition)),
            ),
        }
    }

    /// Parameters of a single run, as used by `simulate`.
    pub fn scheme_params(&self) -> Result<SchemeParams> {
        let s = &self.scheme;
        let params = SchemeParams {
            scheme: s.scheme,
            dt: s.dt.ok_or_else(|| Error::Config("scheme.dt is required".into()))?,
            horizon: s.horizon,
            n_particles: s
                .n_particles
                .ok_or_else(|| Error::Config("scheme.n_particles is required".into()))?,
            epsilon: s.epsilon,
            seed: s.seed,
            record_every: s.record_every,
        };
        params.validate().map_err(config_error)?;
        let model = self.model_spec()?;
        self.initial_condition.check_admissible(&model).map_err(config_error)?;
        Ok(params)
    }

    /// The sweep described by this configuration.
    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let sweep = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("the sweep section is required for this command".into()))?;
        let model = self.model_spec()?;
        let s = &self.scheme;
        // placeholders for the swept quantity; the plan overrides them per cell
        let dt = match (sweep.axis, s.dt) {
            (Axis::TimeStep, _) => sweep.values.first().copied().unwrap_or(f64::NAN),
            (Axis::ParticleCount, Some(dt)) => dt,
            (Axis::ParticleCount, None) => return Err(Error::Config("scheme.dt is required".into())),
        };
        let n_particles = match (sweep.axis, s.n_particles) {
            (Axis::ParticleCount, _) => sweep.values.first().map_or(1, |v| *v as usize),
            (Axis::TimeStep, Some(n)) => n,
            (Axis::TimeStep, None) if sweep.monte_carlo => {
                return Err(Error::Config("scheme.n_particles is required for monte_carlo".into()))
            }
            (Axis::TimeStep, None) => 1,
        };
        let base = SchemeParams {
            scheme: s.scheme,
            dt,
            horizon: s.horizon,
            n_particles,
            epsilon: s.epsilon,
            seed: s.seed,
            record_every: s.record_every,
        };
        let reference = match sweep.reference {
            ReferenceConfig::LargeNRun { factor } => Reference::LargeNRun { factor },
            ReferenceConfig::MomentOracle { quantity } => Reference::MomentOracle { quantity },
        };
        let plan = SweepPlan {
            axis: sweep.axis,
            values: sweep.values.clone(),
            replications: sweep.replications,
            reference,
            base,
            equilibrium: self.equilibrium(&model),
            model,
            initial: self.initial_condition.clone(),
            master_seed: s.seed,
            sliced_directions: sweep.sliced_directions,
            monte_carlo: sweep.monte_carlo,
        };
        plan.validate().map_err(config_error)?;
        Ok(plan)
    }
}

fn config_error(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KAC: &str = r#"{
        "model": { "kind": "kac" },
        "initial_condition": { "kind": "gaussian", "mean": [1.0], "variance": [1.0] },
        "scheme": { "scheme": "nanbu", "dt": 0.05, "horizon": 0.5, "n_particles": 100, "seed": 7 },
        "sweep": {
            "axis": "particle_count",
            "values": [250, 500, 1000],
            "replications": 4,
            "reference": { "kind": "large_n_run", "factor": 16 }
        },
        "output": { "prefix": "kac" }
    }"#;

    #[test]
    fn parses_and_builds() {
        let c = Config::from_json(KAC).unwrap();
        assert_eq!(c.scheme_params().unwrap().n_particles, 100);
        let plan = c.sweep_plan().unwrap();
        assert_eq!(plan.values, vec![250.0, 500.0, 1000.0]);
        assert_eq!(plan.master_seed, 7);
        let again = Config::from_json(&c.to_json()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let top = KAC.replacen("\"output\"", "\"outptu\"", 1);
        assert!(matches!(Config::from_json(&top), Err(Error::Config(_))));
        let nested = KAC.replacen("\"seed\": 7", "\"seed\": 7, \"sede\": 1", 1);
        let err = Config::from_json(&nested).unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
        let model = KAC.replacen("{ \"kind\": \"kac\" }", "{ \"kind\": \"kac\", \"gamma\": 1 }", 1);
        assert!(Config::from_json(&model).is_err());
        let ic = KAC.replacen("\"variance\": [1.0]", "\"variance\": [1.0], \"sd\": 1", 1);
        assert!(Config::from_json(&ic).is_err());
    }

    #[test]
    fn invalid_parameters_are_config_errors() {
        let bad = KAC.replacen("{ \"kind\": \"kac\" }", "{ \"kind\": \"wealth\", \"gamma\": 0.7 }", 1);
        let c = Config::from_json(&bad).unwrap();
        assert!(matches!(c.sweep_plan(), Err(Error::Config(_))));
        let dup = KAC.replacen("[250, 500, 1000]", "[500, 500, 1000]", 1);
        let err = Config::from_json(&dup).unwrap().sweep_plan().unwrap_err();
        assert!(err.to_string().contains("ascending"), "{err}");
    }

    #[test]
    fn trmc_equilibrium_defaults_to_law_moments() {
        let trmc = KAC.replacen("\"scheme\": \"nanbu\"", "\"scheme\": \"trmc\", \"epsilon\": 1.0", 1);
        let c = Config::from_json(&trmc).unwrap();
        let model = c.model_spec().unwrap();
        assert_eq!(c.equilibrium(&model), Some(EquilibriumSpec::gaussian(2.0).unwrap()));
    }
}
