use crate::diag::TraceRecord;
use crate::error::SimError;
use crate::grid::SpatialGrid;
use crate::model::Model;
use crate::well::NehariForm;

use super::memory::MemoryState;
use super::SolverConfig;

/// Discrete solution state at time `t`: `u = u^n`, `u_prev = u^{n-1}`, and
/// `v`, the centered velocity of the last completed step (the initial
/// velocity before the first step).
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryState {
    pub t: f64,
    pub steps: u64,
    pub u: Vec<f64>,
    pub u_prev: Vec<f64>,
    pub v: Vec<f64>,
    pub memory: MemoryState,
}

/// Diagnostics at the time level `t_n` of a step, plus solver health.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// `dissipation` is left at zero; the run loop accumulates it.
    pub sample: TraceRecord,
    /// Largest scaled residual of the nodal damping equations.
    pub solve_residual: f64,
}

/// Right-hand side `k(0) Lap u - int mu Lap u(t-s) ds + f(u)` at the current level.
fn forcing(model: &Model, memory: &MemoryState, u: &[f64], lap: &[f64]) -> Vec<f64> {
    let k0 = model.k0();
    let mut rhs: Vec<f64> = lap.iter().zip(u).map(|(l, &x)| k0 * l + model.f(x)).collect();
    memory.add_force(&model.grid, &mut rhs);
    rhs
}

/// Builds the state at `t = 0` from the model's history. The fictitious level
/// `u^{-1}` comes from a second-order Taylor expansion with the initial
/// acceleration.
pub fn init_state(model: &Model, config: &SolverConfig) -> Result<HistoryState, SimError> {
    config.validate(model)?;
    let grid = &model.grid;
    let memory = MemoryState::new(grid, model.kernel.as_ref(), &model.history, config.memory_backend, config.dt, config.quadrature_nodes)
        .map_err(SimError::InvalidConfig)?;
    let u = model.history.displacement().to_vec();
    let v = model.history.velocity().to_vec();
    let lap = grid.laplacian(&u);
    let rhs = forcing(model, &memory, &u, &lap);
    let dt = config.dt;
    let u_prev = u
        .iter()
        .zip(&v)
        .zip(&rhs)
        .map(|((&x, &vx), &r)| x - dt * vx + 0.5 * dt * dt * (r - model.damping(vx)))
        .collect();
    Ok(HistoryState { t: 0.0, steps: 0, u, u_prev, v, memory })
}

/// Solves `2 v / dt + |v|^(m-1) v = b` for `v`. The map is odd, increasing
/// and convex on `v > 0`, so Newton started above the root decreases
/// monotonically onto it; bisection takes over if rounding stalls it.
pub(crate) fn solve_damped(b: f64, dt: f64, m: Option<f64>) -> f64 {
    let target = b.abs();
    let v = match m {
        None => 0.5 * dt * target,
        Some(1.0) => target / (2.0 / dt + 1.0),
        Some(m) => {
            let phi = |v: f64| 2.0 * v / dt + v.powf(m);
            let mut hi = (0.5 * dt * target).min(target.powf(1.0 / m));
            let mut lo = 0.0;
            let mut v = hi;
            for _ in 0..200 {
                let r = phi(v) - target;
                if r == 0.0 {
                    break;
                }
                if r > 0.0 {
                    hi = v;
                } else {
                    lo = v;
                }
                let newton = v - r / (2.0 / dt + m * v.powf(m - 1.0));
                let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                if (next - v).abs() <= 1e-16 * v {
                    v = next;
                    break;
                }
                v = next;
            }
            v
        }
    };
    v.copysign(b)
}

/// Advances `state` by one leapfrog step and reports diagnostics at the
/// level the step started from.
pub fn step(state: &mut HistoryState, config: &SolverConfig, model: &Model) -> Result<StepReport, SimError> {
    let grid: &SpatialGrid = &model.grid;
    let dt = config.dt;
    let lap = grid.laplacian(&state.u);
    let rhs = forcing(model, &state.memory, &state.u, &lap);

    let mut next = vec![0.0; state.u.len()];
    let mut v = vec![0.0; state.u.len()];
    let mut solve_residual: f64 = 0.0;
    for i in 0..next.len() {
        let b = rhs[i] + 2.0 * (state.u[i] - state.u_prev[i]) / (dt * dt);
        let vi = solve_damped(b, dt, model.damping_m);
        let w = state.u_prev[i] + 2.0 * dt * vi;
        let res = 2.0 * vi / dt + model.damping(vi) - b;
        solve_residual = solve_residual.max(res.abs() / (1.0 + w.abs() / (dt * dt)));
        v[i] = vi;
        next[i] = w;
    }
    if next.iter().any(|x| !x.is_finite()) {
        return Err(SimError::NonFinite { t: state.t + dt });
    }

    let u = &state.u;
    let grad_sq = grid.grad_norm_sq(u);
    let (memory_norm, memory_dissipation) = state.memory.norms(grid, u);
    let quad_energy = 0.5 * (grid.l2_norm_sq(&v) + grad_sq + memory_norm);
    let i0 = match &model.source {
        Some(s) => NehariForm::new(grid, u, s, memory_norm).i0(),
        None => grad_sq + memory_norm,
    };
    let sample = TraceRecord {
        t: state.t,
        quad_energy,
        total_energy: quad_energy - model.potential(u),
        memory_norm,
        dissipation: 0.0,
        i0,
        grad_norm: grad_sq.sqrt(),
        damp_power: model.damping_power(&v),
        memory_dissipation,
        n_prime: grid.inner(u, &v),
    };

    state.memory.advance(grid, &state.u, &lap, &next);
    state.u_prev = std::mem::replace(&mut state.u, next);
    state.v = v;
    state.steps += 1;
    state.t = state.steps as f64 * dt;
    Ok(StepReport { sample, solve_residual })
}
