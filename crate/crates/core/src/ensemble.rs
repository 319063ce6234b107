use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelId, ModelSpec};

/// Particle states at one discrete step, stored row-major (`n_particles x dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    states: Vec<f64>,
    dim: usize,
    step_index: u64,
    time: f64,
    model_id: ModelId,
}

impl Ensemble {
    /// Builds an ensemble at step 0, checking every state against the model domain.
    pub fn new(model: &ModelSpec, states: Vec<f64>) -> Result<Self> {
        let dim = model.dim();
        if states.is_empty() || states.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "ensemble needs a positive multiple of dim={dim} values, got {}",
                states.len()
            )));
        }
        let ens = Ensemble { states, dim, step_index: 0, time: 0.0, model_id: model.id() };
        if let Some(bad) = ens.iter().find(|s| !model.contains(s)) {
            return Err(Error::OutsideDomain {
                state: bad.to_vec(),
                domain: model.domain().to_string(),
            });
        }
        Ok(ens)
    }

    /// Builds an ensemble from per-particle vectors.
    pub fn from_rows(model: &ModelSpec, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = model.dim();
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
        }
        Self::new(model, rows.concat())
    }

    pub(crate) fn successor(&self, states: Vec<f64>, dt: f64) -> Self {
        let step_index = self.step_index + 1;
        Ensemble {
            states,
            dim: self.dim,
            step_index,
            // recomputed from the integer step, never accumulated
            time: step_index as f64 * dt,
            model_id: self.model_id,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn model_id(&self) -> ModelId {
        self.model_id
    }

    /// State of particle `i` (0-based storage index).
    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.states
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.states.chunks_exact(self.dim)
    }

    /// Component `k` of every particle.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.iter().map(|s| s[k]).collect()
    }

    /// Reorders particles so that new position `p` holds old particle `perm[p]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut states = Vec::with_capacity(self.states.len());
        for &i in perm {
            states.extend_from_slice(self.state(i));
        }
        Ensemble { states, ..self.clone() }
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Nanbu,
    Trmc,
}

/// Parameters of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeParams {
    pub scheme: Scheme,
    pub dt: f64,
    pub horizon: f64,
    pub n_particles: usize,
    /// Relaxation scale, TRMC only.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
}

fn default_record_every() -> u64 {
    1
}

impl SchemeParams {
    pub fn nanbu(dt: f64, horizon: f64, n_particles: usize, seed: u64) -> Self {
        SchemeParams {
            scheme: Scheme::Nanbu,
            dt,
            horizon,
            n_particles,
            epsilon: None,
            seed,
            record_every: 1,
        }
    }

    pub fn trmc(dt: f64, epsilon: f64, horizon: f64, n_particles: usize, seed: u64) -> Self {
        SchemeParams { scheme: Scheme::Trmc, epsilon: Some(epsilon), ..Self::nanbu(dt, horizon, n_particles, seed) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(Error::invalid(format!("dt must lie in (0, 1], got {}", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid(format!(
                "horizon must be finite and nonnegative, got {}",
                self.horizon
            )));
        }
        if self.n_particles == 0 {
            return Err(Error::invalid("n_particles must be >= 1"));
        }
        if self.n_particles > u32::MAX as usize {
            return Err(Error::invalid("n_particles exceeds 2^32 - 1"));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be >= 1"));
        }
        if self.scheme == Scheme::Trmc {
            match self.epsilon {
                Some(e) if e > 0.0 => {}
                other => {
                    return Err(Error::invalid(format!(
                        "TRMC requires epsilon > 0, got {other:?}"
                    )))
                }
            }
        }
        Ok(())
    }

    /// Number of steps taken by the loop `while n dt < T`.
    pub fn n_steps(&self) -> u64 {
        let mut n = 0u64;
        while (n as f64) * self.dt < self.horizon {
            n += 1;
        }
        n
    }
}
