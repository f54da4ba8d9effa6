use serde::Serialize;

use crate::model::Model;
use crate::sim::HistoryState;
use crate::well::NehariForm;

/// `1/2 (||v||^2 + ||grad u||^2 + int mu ||grad w||^2)` of a stepper state.
///
/// Uses the stored velocity, which is exact at `t = 0` and the centered
/// velocity of the previous level afterwards; traces sample the consistent
/// level-`t_n` value inside the step instead.
pub fn quad_energy(model: &Model, state: &HistoryState) -> f64 {
    let grid = &model.grid;
    let (memory, _) = state.memory.norms(grid, &state.u);
    0.5 * (grid.l2_norm_sq(&state.v) + grid.grad_norm_sq(&state.u) + memory)
}

/// Quadratic energy minus the source potential `int F(u)`.
pub fn total_energy(model: &Model, state: &HistoryState) -> f64 {
    quad_energy(model, state) - model.potential(&state.u)
}

/// Energies of the initial history, evaluated in closed form from the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialEnergies {
    pub quad_energy: f64,
    pub total_energy: f64,
    pub memory_norm: f64,
    pub grad_norm: f64,
    /// Nehari functional `I0`; the quadratic part when there is no source.
    pub i0: f64,
}

pub fn initial_energies(model: &Model) -> InitialEnergies {
    let grid = &model.grid;
    let u = model.history.displacement();
    let memory_norm = model.kernel.as_ref().map_or(0.0, |k| model.history.memory_quadratic(k, grid));
    let grad_sq = grid.grad_norm_sq(u);
    let quad_energy = 0.5 * (grid.l2_norm_sq(model.history.velocity()) + grad_sq + memory_norm);
    let i0 = match &model.source {
        Some(s) => NehariForm::new(grid, u, s, memory_norm).i0(),
        None => grad_sq + memory_norm,
    };
    InitialEnergies {
        quad_energy,
        total_energy: quad_energy - model.potential(u),
        memory_norm,
        grad_norm: grad_sq.sqrt(),
        i0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::model::{HistoryKind, HistoryProfile, RelaxationKernel, SourceSpec, TimeProfile};
    use crate::sim::{init_state, SolverConfig};
    use std::f64::consts::PI;

    fn sine_model(amp: f64, kind: HistoryKind, kernel: Option<RelaxationKernel>, source: Option<SourceSpec>) -> Model {
        let grid = SpatialGrid::new_1d(PI, 400).unwrap();
        let u: Vec<f64> = grid.sine_mode(&[1]).iter().map(|x| amp * x).collect();
        let history = HistoryProfile::new(kind, u, grid.zeros(), &grid).unwrap();
        Model::new(grid, kernel, source, Some(1.0), history).unwrap()
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let grid = SpatialGrid::new_1d(PI, 20).unwrap();
        let model = Model::new(
            grid.clone(),
            Some(RelaxationKernel::exponential(1.0, 1.0).unwrap()),
            Some(SourceSpec::single(1.0, 3.0).unwrap()),
            Some(1.0),
            HistoryProfile::zero(&grid),
        )
        .unwrap();
        let state = init_state(&model, &SolverConfig::new(&model, 0.01, 1.0).unwrap()).unwrap();
        assert_eq!(quad_energy(&model, &state), 0.0);
        assert_eq!(total_energy(&model, &state), 0.0);
        assert_eq!(initial_energies(&model).total_energy, 0.0);
    }

    #[test]
    fn sine_profile_energies() {
        let model = sine_model(1.0, HistoryKind::Constant, Some(RelaxationKernel::exponential(1.0, 1.0).unwrap()), None);
        let e = initial_energies(&model);
        assert!((e.quad_energy - PI / 4.0).abs() < 1e-4);
        let state = init_state(&model, &SolverConfig::new(&model, 1e-3, 1.0).unwrap()).unwrap();
        assert!((quad_energy(&model, &state) - e.quad_energy).abs() < 1e-12);

        // separable e^t history against mu = e^-s: memory weight 1/3
        let sep = HistoryKind::Separable { g: TimeProfile::Exponential { rate: 1.0 } };
        let model = sine_model(1.0, sep, Some(RelaxationKernel::exponential(1.0, 1.0).unwrap()), None);
        let e = initial_energies(&model);
        let grad = model.grid.grad_norm_sq(model.history.displacement());
        assert!((e.quad_energy - 0.5 * grad * (1.0 + 1.0 / 3.0)).abs() < 1e-12);
        let state = init_state(&model, &SolverConfig::new(&model, 1e-3, 1.0).unwrap()).unwrap();
        assert!((quad_energy(&model, &state) - e.quad_energy).abs() < 1e-10);
    }

    #[test]
    fn cubic_total_energy_matches_continuum_integrals() {
        for c in [0.5, 1.0, 2.0] {
            let model = sine_model(c, HistoryKind::Constant, None, Some(SourceSpec::single(1.0, 3.0).unwrap()));
            let exact = c * c * PI / 4.0 - c.powi(4) / 4.0 * 3.0 * PI / 8.0;
            assert!((initial_energies(&model).total_energy - exact).abs() < 1e-4, "c = {c}");
        }
        let model = sine_model(2.0, HistoryKind::Constant, None, Some(SourceSpec::single(1.0, 3.0).unwrap()));
        assert!((initial_energies(&model).total_energy + PI / 2.0).abs() < 1e-4);
    }
}
