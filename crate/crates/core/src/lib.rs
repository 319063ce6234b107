//! Stochastic particle solvers for spatially homogeneous Boltzmann-type
//! collision equations.
//!
//! The crate provides five collision models, the Nanbu and first-order
//! time-relaxed Monte Carlo (TRMC) schemes, Wasserstein-1 estimators for
//! empirical measures, closed-form moment references and a sweep harness that
//! measures convergence rates in the particle number and the time step.
//!
//! ```
//! use nanbu_core::{run, InitialCondition, ModelSpec, SchemeParams};
//!
//! let model = ModelSpec::kac();
//! let ic = InitialCondition::Gaussian { mean: vec![1.0], variance: vec![1.0] };
//! let traj = run(&SchemeParams::nanbu(0.1, 1.0, 1000, 7), &model, &ic).unwrap();
//! assert_eq!(traj.last().step_index, 10);
//! ```

pub mod ensemble;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod oracles;
pub mod rng;
pub mod solvers;

pub use ensemble::{Ensemble, Scheme, SchemeParams};
pub use error::{Error, Result};
pub use metrics::{
    empirical_moment, epsilon_rate, w1_1d, w1_auto, w1_exact_1d, w1_exact_matching, w1_sliced,
    Estimator, MetricReport, W1Value,
};
pub use models::{
    sample_equilibrium, sample_initial, Domain, EquilibriumKind, EquilibriumSpec, InitialCondition,
    ModelId, ModelKind, ModelSpec, Objective, ThetaLaw,
};
pub use oracles::{MomentOracle, Quantity};
pub use rng::{derive_stream, Stream, StreamKey};
pub use solvers::{nanbu_step, run, run_with, trmc_step, RunOptions, Simulation, StepKernel, Trajectory};
