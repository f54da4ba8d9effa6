//! Leapfrog time stepping with implicit nodal damping and two memory backends.

mod checkpoint;
mod memory;
mod state;

pub use checkpoint::{dump_checkpoint, restore_checkpoint};
pub use memory::{MemoryBackend, MemoryState, PronyMode, QuadratureMemory};
pub use state::{init_state, step, HistoryState, StepReport};

use serde::{Deserialize, Serialize};

use crate::diag::{EnergyTrace, TraceRecord};
use crate::error::SimError;
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub memory_backend: MemoryBackend,
    /// Run stops once `||grad u||_2` reaches this value.
    pub blowup_threshold: f64,
    /// Relative energy level below which decay fits ignore samples.
    pub energy_floor: f64,
    pub sample_every: usize,
    pub quadrature_nodes: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            memory_backend: MemoryBackend::Prony,
            blowup_threshold: 1e6,
            energy_floor: 1e-14,
            sample_every: 1,
            quadrature_nodes: 512,
        }
    }
}

impl SolverConfig {
    /// Default settings with the given step and horizon, checked against `model`.
    pub fn new(model: &Model, dt: f64, t_end: f64) -> Result<Self, SimError> {
        let c = Self { dt, t_end, ..Self::default() };
        c.validate(model)?;
        Ok(c)
    }

    /// `dt <= 0.5 h / sqrt(k(0))`
    pub fn cfl_bound(model: &Model) -> f64 {
        0.5 * model.grid.min_spacing() / model.k0().sqrt()
    }

    pub fn validate(&self, model: &Model) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(SimError::InvalidConfig(format!("dt = {} and t_end = {} must be positive and finite", self.dt, self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(SimError::InvalidConfig("sample_every must be at least 1".into()));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(SimError::InvalidConfig("blowup_threshold must be positive".into()));
        }
        if self.memory_backend == MemoryBackend::Quadrature && self.quadrature_nodes < 3 {
            return Err(SimError::InvalidConfig("quadrature_nodes must be at least 3".into()));
        }
        let bound = Self::cfl_bound(model);
        if self.dt > bound {
            return Err(SimError::Cfl { dt: self.dt, bound });
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Completed,
    BlowupThreshold,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: EnergyTrace,
    pub state: HistoryState,
    pub stop: StopReason,
    /// Largest scaled residual of the nodal damping solves.
    pub solve_residual: f64,
}

/// Steps `model` from its history to `config.t_end`, the blow-up threshold,
/// or the first non-finite value.
///
/// Dissipation is accumulated by the trapezoid rule at every step; the trace
/// keeps every `sample_every`-th level plus the last one.
pub fn run(model: &Model, config: &SolverConfig) -> Result<RunOutcome, SimError> {
    let mut state = init_state(model, config)?;
    let n_steps = config.steps();
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut dissipation = 0.0;
    let mut prev_rate: Option<f64> = None;
    let mut solve_residual: f64 = 0.0;
    let mut stop = StopReason::Completed;

    for n in 0..=n_steps {
        // the last level only needs its diagnostics; step a copy so the
        // returned state sits at t_end
        let mut probe;
        let target = if n == n_steps {
            probe = state.clone();
            &mut probe
        } else {
            &mut state
        };
        let report = match step(target, config, model) {
            Ok(r) => r,
            Err(SimError::NonFinite { t }) => {
                log::info!("non-finite values at t = {t}");
                stop = StopReason::NonFinite;
                break;
            }
            Err(e) => return Err(e),
        };
        solve_residual = solve_residual.max(report.solve_residual);
        let mut rec = report.sample;
        let rate = rec.damp_power + rec.memory_dissipation;
        if let Some(p) = prev_rate {
            dissipation += 0.5 * config.dt * (p + rate);
        }
        prev_rate = Some(rate);
        rec.dissipation = dissipation;
        let finite = [rec.quad_energy, rec.total_energy, rec.grad_norm].iter().all(|x| x.is_finite());
        if !finite {
            stop = StopReason::NonFinite;
            break;
        }
        let crossed = rec.grad_norm >= config.blowup_threshold;
        if n % config.sample_every == 0 || n == n_steps || crossed {
            records.push(rec);
        }
        if crossed {
            log::info!("blow-up threshold reached at t = {}", rec.t);
            stop = StopReason::BlowupThreshold;
            break;
        }
    }
    Ok(RunOutcome { trace: EnergyTrace::new(records), state, stop, solve_residual })
}
