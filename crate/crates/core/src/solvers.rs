//! Nanbu and first-order time-relaxed Monte Carlo steps, and the run driver.
//!
//! Both schemes update every particle synchronously from the previous
//! ensemble. Particle `i` (1-based) at step `n` draws from
//! `derive_stream(seed, i, n)` with a fixed slot layout:
//!
//! | slot / lane        | variable                                  |
//! |--------------------|-------------------------------------------|
//! | counter 0          | first Bernoulli (collide / relax)         |
//! | counter 1          | second Bernoulli (TRMC only)              |
//! | counter 2          | partner `alpha`                           |
//! | fork lane 1        | collision parameter `theta`               |
//! | fork lane 2        | equilibrium sample (TRMC only)            |
//!
//! Slots are addressed by seeking, so an unused branch never shifts any
//! later draw.

use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{Ensemble, Scheme, SchemeParams};
use crate::error::{Error, Result};
use crate::metrics::{tracked_quantities, MetricReport};
use crate::models::{sample_initial, EquilibriumSpec, InitialCondition, ModelSpec, Theta};
use crate::rng::{derive_stream, sample_bernoulli, sample_partner, split_seed, Stream};

pub const SLOT_FIRST_BERNOULLI: u64 = 0;
pub const SLOT_SECOND_BERNOULLI: u64 = 1;
pub const SLOT_PARTNER: u64 = 2;
pub const LANE_THETA: u64 = 1;
pub const LANE_EQUILIBRIUM: u64 = 2;

/// Seed labels used by [`run`] to split the run seed.
pub const SEED_LABEL_INITIAL: u64 = 1;
pub const SEED_LABEL_DYNAMICS: u64 = 2;

/// Minimum particles per parallel work item.
const PAR_MIN_LEN: usize = 512;

/// `1 - exp(-dt / epsilon)`, evaluated without cancellation for small ratios.
pub fn relaxation_tau(dt: f64, epsilon: f64) -> Result<f64> {
    if !(dt > 0.0 && epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "relaxation needs dt > 0 and epsilon > 0, got dt={dt}, epsilon={epsilon}"
        )));
    }
    Ok(-(-dt / epsilon).exp_m1())
}

/// What happened to one particle during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Keep,
    /// Collided with the particle labelled `partner` (1-based).
    Collide { partner: usize, clamped: bool },
    Equilibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParticleEvent {
    pub first: bool,
    /// Always `false` for Nanbu steps.
    pub second: bool,
    pub branch: Branch,
}

/// Per-particle record of a step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepTrace {
    pub events: Vec<ParticleEvent>,
}

impl StepTrace {
    pub fn stats(&self) -> StepStats {
        let mut s = StepStats::default();
        for e in &self.events {
            match e.branch {
                Branch::Keep => s.kept += 1,
                Branch::Collide { clamped, .. } => {
                    s.collisions += 1;
                    s.clamp_events += clamped as u64;
                }
                Branch::Equilibrate => s.equilibrations += 1,
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepStats {
    pub kept: u64,
    pub collisions: u64,
    pub equilibrations: u64,
    pub clamp_events: u64,
}

/// One time step of either scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum StepKernel {
    Nanbu { dt: f64 },
    Trmc { dt: f64, tau: f64, equilibrium: EquilibriumSpec },
}

impl StepKernel {
    pub fn nanbu(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt <= 1.0) {
            return Err(Error::invalid(format!("dt must lie in (0, 1], got {dt}")));
        }
        Ok(StepKernel::Nanbu { dt })
    }

    pub fn trmc(dt: f64, epsilon: f64, equilibrium: EquilibriumSpec) -> Result<Self> {
        let tau = relaxation_tau(dt, epsilon)?;
        if let crate::models::EquilibriumKind::Unavailable { model } = &equilibrium.kind {
            return Err(Error::EquilibriumUnavailable(model.to_string()));
        }
        Ok(StepKernel::Trmc { dt, tau, equilibrium })
    }

    pub fn dt(&self) -> f64 {
        match self {
            StepKernel::Nanbu { dt } | StepKernel::Trmc { dt, .. } => *dt,
        }
    }

    pub fn step(&self, ens: &Ensemble, model: &ModelSpec, seed: u64) -> Result<Ensemble> {
        Ok(self.apply(ens, model, seed, None)?.0)
    }

    pub fn step_traced(&self, ens: &Ensemble, model: &ModelSpec, seed: u64) -> Result<(Ensemble, StepTrace)> {
        self.apply(ens, model, seed, None)
    }

    /// Step where the particle stored at position `p` draws from the stream of
    /// particle `labels[p]` (a permutation of `1..=N`), and partner draws are
    /// resolved through the same labelling. Stepping a permuted ensemble with
    /// the matching labels yields the identically permuted result.
    pub fn step_relabeled(
        &self,
        ens: &Ensemble,
        model: &ModelSpec,
        seed: u64,
        labels: &[usize],
    ) -> Result<(Ensemble, StepTrace)> {
        self.apply(ens, model, seed, Some(labels))
    }

    fn apply(
        &self,
        ens: &Ensemble,
        model: &ModelSpec,
        seed: u64,
        labels: Option<&[usize]>,
    ) -> Result<(Ensemble, StepTrace)> {
        if ens.dim() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: ens.dim() });
        }
        if let StepKernel::Trmc { equilibrium, .. } = self {
            if equilibrium.dim() != Some(model.dim()) {
                return Err(Error::invalid("equilibrium dimension does not match the model"));
            }
        }
        let n = ens.len();
        let position_of_label = match labels {
            Some(l) => Some(inverse_labels(l, n)?),
            None => None,
        };
        let d = ens.dim();
        let mut next = vec![0.0; n * d];
        let events = next
            .par_chunks_mut(d)
            .with_min_len(PAR_MIN_LEN)
            .enumerate()
            .map(|(p, out)| {
                let label = labels.map_or(p + 1, |l| l[p]);
                let resolve = |j: usize| position_of_label.as_ref().map_or(j - 1, |inv| inv[j - 1]);
                self.update_particle(ens, model, seed, p, label, resolve, out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((ens.successor(next, self.dt()), StepTrace { events }))
    }

    #[allow(clippy::too_many_arguments)]
    fn update_particle(
        &self,
        ens: &Ensemble,
        model: &ModelSpec,
        seed: u64,
        position: usize,
        label: usize,
        resolve: impl Fn(usize) -> usize,
        out: &mut [f64],
    ) -> Result<ParticleEvent> {
        let mut stream = derive_stream(seed, label as u64, ens.step_index());
        let current = ens.state(position);
        let (p_first, p_second) = match self {
            StepKernel::Nanbu { dt } => (*dt, None),
            StepKernel::Trmc { tau, .. } => (*tau, Some(*tau)),
        };
        stream.seek(SLOT_FIRST_BERNOULLI);
        let first = sample_bernoulli(&mut stream, p_first)?;
        let second = match p_second {
            Some(p) => {
                stream.seek(SLOT_SECOND_BERNOULLI);
                sample_bernoulli(&mut stream, p)?
            }
            None => false,
        };
        let branch = match (first, second) {
            (false, _) => {
                out.copy_from_slice(current);
                Branch::Keep
            }
            (true, false) => {
                stream.seek(SLOT_PARTNER);
                let partner = sample_partner(&mut stream, ens.len());
                let theta = model.sample_theta(&mut stream.fork(LANE_THETA));
                let partner_state = ens.state(resolve(partner.j));
                let outcome = model.collide(current, partner_state, &theta, out)?;
                Branch::Collide { partner: partner.j, clamped: outcome.clamped }
            }
            (true, true) => {
                let StepKernel::Trmc { equilibrium, .. } = self else {
                    unreachable!("second Bernoulli is only drawn by TRMC")
                };
                equilibrium.sample_into(&mut stream.fork(LANE_EQUILIBRIUM), out)?;
                Branch::Equilibrate
            }
        };
        Ok(ParticleEvent { first, second, branch })
    }
}

fn inverse_labels(labels: &[usize], n: usize) -> Result<Vec<usize>> {
    if labels.len() != n {
        return Err(Error::SizeMismatch { left: labels.len(), right: n });
    }
    let mut inv = vec![usize::MAX; n];
    for (p, &l) in labels.iter().enumerate() {
        if l == 0 || l > n || inv[l - 1] != usize::MAX {
            return Err(Error::invalid("labels must be a permutation of 1..=N"));
        }
        inv[l - 1] = p;
    }
    Ok(inv)
}

/// The collision parameter particle `label` draws at step `step_index`.
/// Exposed so tests can replay a traced collision.
pub fn replay_theta(model: &ModelSpec, seed: u64, label: usize, step_index: u64) -> Theta {
    model.sample_theta(&mut derive_stream(seed, label as u64, step_index).fork(LANE_THETA))
}

/// The equilibrium sample particle `label` draws at step `step_index`.
pub fn replay_equilibrium(eq: &EquilibriumSpec, seed: u64, label: usize, step_index: u64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; eq.dim().unwrap_or(0)];
    eq.sample_into(&mut derive_stream(seed, label as u64, step_index).fork(LANE_EQUILIBRIUM), &mut out)?;
    Ok(out)
}

/// One Nanbu step.
pub fn nanbu_step(ens: &Ensemble, model: &ModelSpec, dt: f64, seed: u64) -> Result<Ensemble> {
    StepKernel::nanbu(dt)?.step(ens, model, seed)
}

/// One first-order TRMC step.
pub fn trmc_step(
    ens: &Ensemble,
    model: &ModelSpec,
    dt: f64,
    epsilon: f64,
    eq: &EquilibriumSpec,
    seed: u64,
) -> Result<Ensemble> {
    StepKernel::trmc(dt, epsilon, eq.clone())?.step(ens, model, seed)
}

/// Extra knobs for [`run_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Store a copy of the ensemble with every snapshot.
    pub keep_ensembles: bool,
    pub moment_orders: Vec<f64>,
    /// Replaces the equilibrium estimated from the initial ensemble.
    pub equilibrium: Option<EquilibriumSpec>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { keep_ensembles: false, moment_orders: vec![1.0, 2.0, 3.0], equilibrium: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step_index: u64,
    pub report: MetricReport,
    pub ensemble: Option<Ensemble>,
}

/// Metric-annotated output of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub params: SchemeParams,
    pub model: ModelSpec,
    pub final_ensemble: Ensemble,
}

impl Trajectory {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a trajectory always holds the initial snapshot")
    }
}

/// A run in progress; [`run`] drives one to completion.
#[derive(Debug, Clone)]
pub struct Simulation {
    model: ModelSpec,
    params: SchemeParams,
    kernel: StepKernel,
    ensemble: Ensemble,
    initial_tracked: Vec<(&'static str, f64)>,
    dynamics_seed: u64,
    n_steps: u64,
    clamp_events: u64,
}

impl Simulation {
    /// Samples the initial ensemble and prepares the stepping kernel.
    pub fn new(
        params: &SchemeParams,
        model: &ModelSpec,
        ic: &InitialCondition,
        equilibrium: Option<&EquilibriumSpec>,
    ) -> Result<Self> {
        params.validate()?;
        let init_stream = Stream::from_seed(split_seed(params.seed, SEED_LABEL_INITIAL));
        let ensemble = sample_initial(model, ic, params.n_particles, &init_stream)?;
        Self::from_ensemble(params, model, ensemble, equilibrium)
    }

    /// Starts from a given ensemble; `params.n_particles` is ignored.
    pub fn from_ensemble(
        params: &SchemeParams,
        model: &ModelSpec,
        ensemble: Ensemble,
        equilibrium: Option<&EquilibriumSpec>,
    ) -> Result<Self> {
        params.validate()?;
        let kernel = match params.scheme {
            Scheme::Nanbu => StepKernel::nanbu(params.dt)?,
            Scheme::Trmc => {
                let eq = match equilibrium {
                    Some(eq) => eq.clone(),
                    None => EquilibriumSpec::from_initial(model, &ensemble),
                };
                StepKernel::trmc(params.dt, params.epsilon.unwrap_or(f64::NAN), eq)?
            }
        };
        Ok(Simulation {
            model: model.clone(),
            params: params.clone(),
            kernel,
            initial_tracked: tracked_quantities(model.id(), &ensemble),
            ensemble,
            dynamics_seed: split_seed(params.seed, SEED_LABEL_DYNAMICS),
            n_steps: params.n_steps(),
            clamp_events: 0,
        })
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn kernel(&self) -> &StepKernel {
        &self.kernel
    }

    pub fn is_finished(&self) -> bool {
        self.ensemble.step_index() >= self.n_steps
    }

    pub fn total_steps(&self) -> u64 {
        self.n_steps
    }

    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    pub fn step(&mut self) -> Result<StepStats> {
        let n = self.ensemble.step_index();
        let (next, trace) = self
            .kernel
            .step_traced(&self.ensemble, &self.model, self.dynamics_seed)
            .map_err(|e| e.at_step(n))?;
        let stats = trace.stats();
        self.clamp_events += stats.clamp_events;
        self.ensemble = next;
        Ok(stats)
    }

    pub fn report(&self, moment_orders: &[f64]) -> Result<MetricReport> {
        let mut r = MetricReport::compute(&self.ensemble, moment_orders, &self.initial_tracked)?;
        r.clamp_events = self.clamp_events;
        Ok(r)
    }

    /// Whether the current step is recorded under `record_every`.
    pub fn is_record_step(&self) -> bool {
        let n = self.ensemble.step_index();
        n % self.params.record_every == 0 || n == self.n_steps
    }
}

/// Runs `while n dt < T` with default options.
pub fn run(params: &SchemeParams, model: &ModelSpec, ic: &InitialCondition) -> Result<Trajectory> {
    run_with(params, model, ic, &RunOptions::default())
}

pub fn run_with(
    params: &SchemeParams,
    model: &ModelSpec,
    ic: &InitialCondition,
    opts: &RunOptions,
) -> Result<Trajectory> {
    let mut sim = Simulation::new(params, model, ic, opts.equilibrium.as_ref())?;
    let mut snapshots = Vec::new();
    let mut record = |sim: &Simulation| -> Result<()> {
        snapshots.push(Snapshot {
            step_index: sim.ensemble().step_index(),
            report: sim.report(&opts.moment_orders)?,
            ensemble: opts.keep_ensembles.then(|| sim.ensemble().clone()),
        });
        Ok(())
    };
    record(&sim)?;
    while !sim.is_finished() {
        sim.step()?;
        if sim.is_record_step() {
            record(&sim)?;
        }
    }
    Ok(Trajectory {
        snapshots,
        params: params.clone(),
        model: model.clone(),
        final_ensemble: sim.ensemble,
    })
}
