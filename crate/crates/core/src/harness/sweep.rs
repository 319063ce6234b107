//! Convergence sweeps in the particle number and in the time step.
//!
//! Every cell `(axis value, replication)` is an independent job whose seed is
//! a pure function of `(master_seed, value, replication)`. Cells run on the
//! rayon pool and are gathered in key order before any statistic is formed,
//! so tables do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::fit::{fit_rate_with_stderr, RateFit};
use super::stats::summarize;
use crate::ensemble::{Scheme, SchemeParams};
use crate::error::{Error, Result};
use crate::metrics::{energy, epsilon_rate, mean_vector, w1_auto, Estimator};
use crate::models::{EquilibriumSpec, InitialCondition, ModelSpec};
use crate::oracles::{MomentOracle, Quantity};
use crate::rng::{split_seed, Stream};
use crate::solvers::Simulation;

/// Smallest admissible ratio between the reference size and the largest N.
pub const MIN_REFERENCE_FACTOR: usize = 16;

/// Largest reference ensemble a sweep may request.
pub const MAX_REFERENCE_PARTICLES: usize = 1 << 25;

const REFERENCE_LABEL: u64 = 0x5245_4652;
const PROJECTION_LABEL: u64 = 0x5052_4f4a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    ParticleCount,
    TimeStep,
}

/// What the swept runs are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    /// An independent run with `factor * max(values)` particles.
    LargeNRun { factor: usize },
    MomentOracle { quantity: Quantity },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub axis: Axis,
    /// Strictly ascending, positive.
    pub values: Vec<f64>,
    pub replications: usize,
    pub reference: Reference,
    /// Run parameters; the swept field is overridden per cell.
    pub base: SchemeParams,
    pub model: ModelSpec,
    pub initial: InitialCondition,
    /// TRMC equilibrium. `None` means "matched to the initial law".
    pub equilibrium: Option<EquilibriumSpec>,
    pub master_seed: u64,
    /// Projections for the sliced estimator when `dim > 1`.
    pub sliced_directions: usize,
    /// Time-step sweeps: also run the particle scheme.
    pub monte_carlo: bool,
}

impl SweepPlan {
    /// A particle-count sweep against a large-N reference run.
    pub fn particle_count(
        model: ModelSpec,
        initial: InitialCondition,
        base: SchemeParams,
        values: Vec<usize>,
        replications: usize,
        factor: usize,
    ) -> Self {
        SweepPlan {
            axis: Axis::ParticleCount,
            values: values.into_iter().map(|n| n as f64).collect(),
            replications,
            reference: Reference::LargeNRun { factor },
            master_seed: base.seed,
            base,
            model,
            initial,
            equilibrium: None,
            sliced_directions: crate::metrics::DEFAULT_SLICED_DIRECTIONS,
            monte_carlo: false,
        }
    }

    /// A time-step sweep against a moment oracle.
    pub fn time_step(
        model: ModelSpec,
        initial: InitialCondition,
        base: SchemeParams,
        values: Vec<f64>,
        quantity: Quantity,
    ) -> Self {
        SweepPlan {
            axis: Axis::TimeStep,
            values,
            replications: 2,
            reference: Reference::MomentOracle { quantity },
            master_seed: base.seed,
            base,
            model,
            initial,
            equilibrium: None,
            sliced_directions: crate::metrics::DEFAULT_SLICED_DIRECTIONS,
            monte_carlo: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("sweep values must be positive and finite"));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sweep values must be strictly ascending"));
        }
        if self.values.len() < 3 {
            return Err(Error::invalid(format!(
                "a sweep needs at least 3 values to fit a rate, got {}",
                self.values.len()
            )));
        }
        if self.replications < 2 {
            return Err(Error::invalid("a sweep needs at least 2 replications"));
        }
        if self.sliced_directions == 0 {
            return Err(Error::invalid("sliced_directions must be >= 1"));
        }
        self.initial.check_admissible(&self.model)?;
        match (self.axis, self.reference) {
            (Axis::ParticleCount, Reference::LargeNRun { factor }) => {
                if self.values.iter().any(|v| v.fract() != 0.0) {
                    return Err(Error::invalid("particle counts must be integers"));
                }
                if factor < MIN_REFERENCE_FACTOR {
                    return Err(Error::invalid(format!(
                        "reference factor must be >= {MIN_REFERENCE_FACTOR}, got {factor}"
                    )));
                }
                let n_ref = self.reference_size().expect("particle-count sweep");
                if n_ref > MAX_REFERENCE_PARTICLES {
                    return Err(Error::invalid(format!(
                        "reference size {n_ref} exceeds the limit of {MAX_REFERENCE_PARTICLES} particles"
                    )));
                }
                for &v in &self.values {
                    self.cell_params(v, 0).validate()?;
                }
            }
            (Axis::TimeStep, Reference::MomentOracle { quantity }) => {
                MomentOracle::new(self.model.id(), quantity)?;
                for &v in &self.values {
                    self.cell_params(v, 0).validate()?;
                }
            }
            (axis, reference) => {
                return Err(Error::invalid(format!(
                    "{axis:?} sweeps cannot use a {reference:?} reference"
                )))
            }
        }
        if self.base.scheme == Scheme::Trmc && !self.equilibrium().is_available() {
            return Err(Error::EquilibriumUnavailable(self.model.id().to_string()));
        }
        Ok(())
    }

    pub fn reference_size(&self) -> Option<usize> {
        match self.reference {
            Reference::LargeNRun { factor } => {
                self.values.last().map(|&n| (n as usize).saturating_mul(factor))
            }
            Reference::MomentOracle { .. } => None,
        }
    }

    pub fn equilibrium(&self) -> EquilibriumSpec {
        self.equilibrium
            .clone()
            .unwrap_or_else(|| EquilibriumSpec::from_law(&self.model, &self.initial))
    }

    /// Run parameters of one cell.
    pub fn cell_params(&self, value: f64, replication: usize) -> SchemeParams {
        let mut p = self.base.clone();
        match self.axis {
            Axis::ParticleCount => p.n_particles = value as usize,
            Axis::TimeStep => p.dt = value,
        }
        p.seed = cell_seed(self.master_seed, value, replication);
        p
    }

    /// Plan echo for the JSON output.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "axis": self.axis,
            "values": self.values,
            "replications": self.replications,
            "reference": self.reference,
            "reference_size": self.reference_size(),
            "base": self.base,
            "model": ModelConfig::from_spec(&self.model),
            "theta_law": self.model.theta_law().to_string(),
            "initial_condition": self.initial,
            "equilibrium": (self.base.scheme == Scheme::Trmc).then(|| self.equilibrium()),
            "master_seed": self.master_seed,
            "sliced_directions": self.sliced_directions,
            "monte_carlo": self.monte_carlo,
        })
    }
}

/// Seed printed in the `seed` column: shared by all replications of a row.
pub fn row_seed(master_seed: u64, value: f64) -> u64 {
    split_seed(master_seed, value.to_bits())
}

/// Seed of cell `(value, replication)`.
pub fn cell_seed(master_seed: u64, value: f64, replication: usize) -> u64 {
    split_seed(row_seed(master_seed, value), replication as u64)
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub n_steps: u64,
    pub mean_error: f64,
    pub stderr: f64,
    pub estimator_tag: String,
    pub replications: usize,
    pub seed: u64,
    /// The per-replication errors behind `mean_error` and `stderr`.
    pub per_replication: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// Error at the final time.
    Terminal,
    /// Largest error over the recorded snapshots.
    MaxOverSnapshots,
    /// Closed-form Euler chain against the exact moment.
    Oracle,
    /// Particle-scheme moment against the exact moment.
    MonteCarlo,
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Terminal => "terminal",
            Statistic::MaxOverSnapshots => "sup",
            Statistic::Oracle => "oracle",
            Statistic::MonteCarlo => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub statistic: Statistic,
    pub rows: Vec<SweepRow>,
    /// `None` when the fit was rejected; see the outcome diagnostics.
    pub fit: Option<RateFit>,
}

/// Theoretical slope drawn as a guide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuideSlope {
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub axis: Axis,
    pub plan: serde_json::Value,
    /// The first table is the primary one.
    pub tables: Vec<SweepTable>,
    pub guide: Option<GuideSlope>,
    pub diagnostics: Vec<String>,
}

impl SweepOutcome {
    pub fn primary(&self) -> &SweepTable {
        &self.tables[0]
    }

    pub fn rows(&self) -> &[SweepRow] {
        &self.primary().rows
    }

    pub fn fit(&self) -> Option<&RateFit> {
        self.primary().fit.as_ref()
    }

    pub fn table(&self, statistic: Statistic) -> Option<&SweepTable> {
        self.tables.iter().find(|t| t.statistic == statistic)
    }
}

fn fit_table(statistic: Statistic, rows: Vec<SweepRow>, diagnostics: &mut Vec<String>) -> SweepTable {
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.axis_value, r.mean_error)).collect();
    let stderr: Vec<f64> = rows.iter().map(|r| r.stderr).collect();
    let fit = match fit_rate_with_stderr(&points, &stderr) {
        Ok(f) => Some(f),
        Err(e) => {
            diagnostics.push(format!("{} fit rejected: {e}", statistic.name()));
            None
        }
    };
    SweepTable { statistic, rows, fit }
}

/// Guide slope of the i.i.d. rate over the swept particle counts.
fn n_guide(plan: &SweepPlan) -> Option<GuideSlope> {
    let points: Vec<(f64, f64)> = plan
        .values
        .iter()
        .map(|&n| Ok((n, epsilon_rate(n as usize, plan.model.dim(), 4.0)?)))
        .collect::<Result<_>>()
        .ok()?;
    crate::harness::fit::fit_rate(&points).ok().map(|f| GuideSlope { slope: f.slope })
}

/// Pairs of consecutive rows whose mean error grows by more than two combined
/// standard errors.
fn monotone_violations(rows: &[SweepRow]) -> Vec<String> {
    rows.windows(2)
        .filter(|w| {
            let tol = 2.0 * w[0].stderr.hypot(w[1].stderr);
            w[1].mean_error > w[0].mean_error + tol
        })
        .map(|w| {
            format!(
                "mean error rises from {:e} at {} to {:e} at {}",
                w[0].mean_error, w[0].axis_value, w[1].mean_error, w[1].axis_value
            )
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct CellError {
    terminal: f64,
    sup: f64,
    estimator: Estimator,
    n_steps: u64,
}

fn run_n_cell(plan: &SweepPlan, value: f64, replication: usize) -> Result<CellError> {
    let params = plan.cell_params(value, replication);
    let mut reference = params.clone();
    reference.n_particles = plan.reference_size().expect("particle-count sweep");
    reference.seed = split_seed(params.seed, REFERENCE_LABEL);
    let eq = (plan.base.scheme == Scheme::Trmc).then(|| plan.equilibrium());
    let mut run = Simulation::new(&params, &plan.model, &plan.initial, eq.as_ref())?;
    let mut reference = Simulation::new(&reference, &plan.model, &plan.initial, eq.as_ref())?;
    let projections = Stream::from_seed(split_seed(params.seed, PROJECTION_LABEL));
    let dim = plan.model.dim();
    let distance = |a: &Simulation, b: &Simulation| {
        w1_auto(a.ensemble().as_flat(), b.ensemble().as_flat(), dim, plan.sliced_directions, &projections)
    };
    let first = distance(&run, &reference)?;
    let (mut terminal, mut sup) = (first.value, first.value);
    while !run.is_finished() {
        run.step()?;
        reference.step()?;
        if run.is_record_step() {
            terminal = distance(&run, &reference)?.value;
            sup = sup.max(terminal);
        }
    }
    Ok(CellError { terminal, sup, estimator: first.estimator, n_steps: run.total_steps() })
}

fn cells(plan: &SweepPlan) -> Vec<(f64, usize)> {
    plan.values
        .iter()
        .flat_map(|&v| (0..plan.replications).map(move |r| (v, r)))
        .collect()
}

fn rows_from<F>(plan: &SweepPlan, results: &[CellError], pick: F) -> Vec<SweepRow>
where
    F: Fn(&CellError) -> f64,
{
    plan.values
        .iter()
        .zip(results.chunks(plan.replications))
        .map(|(&value, cell)| {
            let errors: Vec<f64> = cell.iter().map(&pick).collect();
            let s = summarize(&errors);
            SweepRow {
                axis_value: value,
                n_steps: cell[0].n_steps,
                mean_error: s.mean,
                stderr: s.stderr,
                estimator_tag: cell[0].estimator.to_string(),
                replications: plan.replications,
                seed: row_seed(plan.master_seed, value),
                per_replication: errors,
            }
        })
        .collect()
}

/// Mean W1 distance to an independent large-N reference, per particle count.
///
/// The primary table holds the terminal error; a second table holds the
/// largest error over the recorded snapshots.
pub fn converge_in_n(plan: &SweepPlan) -> Result<SweepOutcome> {
    if plan.axis != Axis::ParticleCount {
        return Err(Error::invalid("converge_in_n needs a particle-count sweep"));
    }
    plan.validate()?;
    let results = cells(plan)
        .par_iter()
        .map(|&(v, r)| run_n_cell(plan, v, r))
        .collect::<Result<Vec<_>>>()?;
    let terminal = rows_from(plan, &results, |c| c.terminal);
    let sup = rows_from(plan, &results, |c| c.sup);
    let mut diagnostics = Vec::new();
    if plan.replications >= 20 {
        diagnostics.extend(monotone_violations(&terminal).into_iter().map(|m| format!("monotone sanity: {m}")));
    }
    let tables = vec![
        fit_table(Statistic::Terminal, terminal, &mut diagnostics),
        fit_table(Statistic::MaxOverSnapshots, sup, &mut diagnostics),
    ];
    Ok(SweepOutcome { axis: Axis::ParticleCount, plan: plan.echo(), tables, guide: n_guide(plan), diagnostics })
}

/// Initial value of the oracle quantity under the initial law.
fn oracle_initial(quantity: Quantity, ic: &InitialCondition) -> Vec<f64> {
    match quantity {
        Quantity::Mean | Quantity::Momentum => ic.mean(),
        Quantity::Energy => vec![ic.second_moment()],
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn steps_for(horizon: f64, dt: f64) -> u64 {
    (horizon / dt).round() as u64
}

fn empirical_quantity(quantity: Quantity, sim: &Simulation) -> Vec<f64> {
    match quantity {
        Quantity::Mean | Quantity::Momentum => mean_vector(sim.ensemble()),
        Quantity::Energy => vec![energy(sim.ensemble())],
    }
}

/// Moment error of the forward-Euler chain against the exact solution, per
/// time step.
///
/// The primary table is pure oracle arithmetic at `n = round(T / dt)`. With
/// `plan.monte_carlo` a second table compares the replication-mean empirical
/// moment of the particle scheme with the exact moment at `n dt`.
pub fn converge_in_dt(plan: &SweepPlan) -> Result<SweepOutcome> {
    if plan.axis != Axis::TimeStep {
        return Err(Error::invalid("converge_in_dt needs a time-step sweep"));
    }
    plan.validate()?;
    let Reference::MomentOracle { quantity } = plan.reference else {
        unreachable!("validated plan")
    };
    let oracle = MomentOracle::new(plan.model.id(), quantity)?;
    let v0 = oracle_initial(quantity, &plan.initial);
    let tag = format!("oracle_{}", quantity_name(quantity));
    let oracle_rows: Vec<SweepRow> = plan
        .values
        .iter()
        .map(|&dt| {
            let n = steps_for(plan.base.horizon, dt);
            let err = max_abs_diff(&oracle.discrete_value(n, dt, &v0), &oracle.continuous_value(n as f64 * dt, &v0));
            SweepRow {
                axis_value: dt,
                n_steps: n,
                mean_error: err,
                stderr: 0.0,
                estimator_tag: tag.clone(),
                replications: 1,
                seed: row_seed(plan.master_seed, dt),
                per_replication: vec![err],
            }
        })
        .collect();
    let mut diagnostics = Vec::new();
    let mut tables = vec![fit_table(Statistic::Oracle, oracle_rows, &mut diagnostics)];
    if plan.monte_carlo {
        let mc = monte_carlo_rows(plan, &oracle, quantity, &v0)?;
        tables.push(fit_table(Statistic::MonteCarlo, mc, &mut diagnostics));
    }
    Ok(SweepOutcome {
        axis: Axis::TimeStep,
        plan: plan.echo(),
        tables,
        guide: Some(GuideSlope { slope: 1.0 }),
        diagnostics,
    })
}

fn monte_carlo_rows(plan: &SweepPlan, oracle: &MomentOracle, quantity: Quantity, v0: &[f64]) -> Result<Vec<SweepRow>> {
    let eq = (plan.base.scheme == Scheme::Trmc).then(|| plan.equilibrium());
    let samples = cells(plan)
        .par_iter()
        .map(|&(dt, r)| {
            let mut params = plan.cell_params(dt, r);
            params.horizon = steps_for(plan.base.horizon, dt) as f64 * dt;
            let mut sim = Simulation::new(&params, &plan.model, &plan.initial, eq.as_ref())?;
            while !sim.is_finished() {
                sim.step()?;
            }
            Ok((empirical_quantity(quantity, &sim), sim.total_steps()))
        })
        .collect::<Result<Vec<_>>>()?;
    let tag = format!("mc_{}", quantity_name(quantity));
    Ok(plan
        .values
        .iter()
        .zip(samples.chunks(plan.replications))
        .map(|(&dt, cell)| {
            let n = cell[0].1;
            let exact = oracle.continuous_value(n as f64 * dt, v0);
            // component with the largest replication-mean error
            let (k, _) = (0..exact.len())
                .map(|k| {
                    let m = cell.iter().map(|c| c.0[k]).sum::<f64>() / cell.len() as f64;
                    (k, (m - exact[k]).abs())
                })
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            let signed: Vec<f64> = cell.iter().map(|c| c.0[k] - exact[k]).collect();
            let s = summarize(&signed);
            SweepRow {
                axis_value: dt,
                n_steps: n,
                mean_error: s.mean.abs(),
                stderr: s.stderr,
                estimator_tag: tag.clone(),
                replications: plan.replications,
                seed: row_seed(plan.master_seed, dt),
                per_replication: signed,
            }
        })
        .collect())
}

fn quantity_name(q: Quantity) -> &'static str {
    match q {
        Quantity::Mean => "mean",
        Quantity::Energy => "energy",
        Quantity::Momentum => "momentum",
    }
}
