//! Convergence sweeps, rate fits, validation suites and output writers.

pub mod config;
pub mod emit;
pub mod fit;
pub mod stats;
pub mod sweep;
pub mod validate;

pub use config::{Config, Format, ModelConfig};
pub use fit::{fit_rate, fit_rate_with_stderr, RateFit, ZERO_ERROR_THRESHOLD};
pub use stats::{summarize, Summary};
pub use sweep::{
    cell_seed, converge_in_dt, converge_in_n, row_seed, Axis, Reference, Statistic, SweepOutcome,
    SweepPlan, SweepRow, SweepTable,
};
pub use validate::{validate, CheckResult, Depth, ModelSelector, ValidationReport};
