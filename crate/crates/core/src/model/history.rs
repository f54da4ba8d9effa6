use serde::{Deserialize, Serialize};

use super::kernel::{KernelFamily, RelaxationKernel};
use crate::error::ModelError;
use crate::grid::SpatialGrid;
use crate::numerics::{integrate_half_line, GaussLegendre};

/// Time profile `g(t)`, `t <= 0`, of a separable history `u0(x, t) = g(t) u0(x, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeProfile {
    /// `g(t) = exp(rate * t)`, rate >= 0
    Exponential { rate: f64 },
    /// `g(t) = cos(frequency * t)`
    Cosine { frequency: f64 },
}

impl TimeProfile {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Exponential { rate } => (rate * t).exp(),
            TimeProfile::Cosine { frequency } => (frequency * t).cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HistoryKind {
    /// `u0(., t) = u0(., 0)` for all `t <= 0`
    Constant,
    Separable { g: TimeProfile },
}

/// Initial history on `t <= 0`: a spatial profile, its time dependence, and
/// the velocity at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryProfile {
    kind: HistoryKind,
    displacement: Vec<f64>,
    velocity: Vec<f64>,
}

impl HistoryProfile {
    pub fn new(kind: HistoryKind, displacement: Vec<f64>, velocity: Vec<f64>, grid: &SpatialGrid) -> Result<Self, ModelError> {
        grid.check_len(&displacement)?;
        grid.check_len(&velocity)?;
        if displacement.iter().chain(&velocity).any(|x| !x.is_finite()) {
            return Err(ModelError::InvalidHistory("initial fields must be finite".into()));
        }
        if let HistoryKind::Separable { g } = kind {
            match g {
                TimeProfile::Exponential { rate } if !(rate >= 0.0 && rate.is_finite()) => {
                    return Err(ModelError::InvalidHistory(format!("history rate must be >= 0 so g stays bounded, got {rate}")));
                }
                TimeProfile::Cosine { frequency } if !frequency.is_finite() => {
                    return Err(ModelError::InvalidHistory("history frequency must be finite".into()));
                }
                _ => {}
            }
        }
        Ok(Self { kind, displacement, velocity })
    }

    pub fn constant(displacement: Vec<f64>, velocity: Vec<f64>, grid: &SpatialGrid) -> Result<Self, ModelError> {
        Self::new(HistoryKind::Constant, displacement, velocity, grid)
    }

    pub fn zero(grid: &SpatialGrid) -> Self {
        Self { kind: HistoryKind::Constant, displacement: grid.zeros(), velocity: grid.zeros() }
    }

    pub fn kind(&self) -> HistoryKind {
        self.kind
    }

    /// `u0(., 0)`
    pub fn displacement(&self) -> &[f64] {
        &self.displacement
    }

    /// `d/dt u0(., 0)`
    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    /// Scalar factor `g(t)` with `u0(., t) = g(t) u0(., 0)`, `t <= 0`.
    pub fn factor(&self, t: f64) -> f64 {
        match self.kind {
            HistoryKind::Constant => 1.0,
            HistoryKind::Separable { g } => g.at(t.min(0.0)),
        }
    }

    /// `int_0^inf c exp(-lambda s) g(-s) ds`; closed form for constant and
    /// exponential profiles, 64-point Gauss-Legendre otherwise.
    pub fn mode_weight(&self, c: f64, lambda: f64) -> f64 {
        match self.kind {
            HistoryKind::Constant => c / lambda,
            HistoryKind::Separable { g: TimeProfile::Exponential { rate } } => c / (lambda + rate),
            HistoryKind::Separable { g } => mode_quadrature(lambda, |s| c * g.at(-s)),
        }
    }

    /// `int_0^inf c exp(-lambda s) g(-s)^2 ds`
    pub fn mode_weight_sq(&self, c: f64, lambda: f64) -> f64 {
        match self.kind {
            HistoryKind::Constant => c / lambda,
            HistoryKind::Separable { g: TimeProfile::Exponential { rate } } => c / (lambda + 2.0 * rate),
            HistoryKind::Separable { g } => mode_quadrature(lambda, |s| c * g.at(-s).powi(2)),
        }
    }

    /// `int mu(s) (1 - g(-s))^2 ds`, the memory weight of the initial history.
    pub fn memory_factor(&self, kernel: &RelaxationKernel) -> f64 {
        match (self.kind, kernel.family()) {
            (HistoryKind::Constant, _) => 0.0,
            (HistoryKind::Separable { g: TimeProfile::Exponential { rate } }, KernelFamily::ExponentialSum { terms }) => terms
                .iter()
                .map(|t| t.c * (1.0 / t.lambda - 2.0 / (t.lambda + rate) + 1.0 / (t.lambda + 2.0 * rate)))
                .sum(),
            (HistoryKind::Separable { g }, _) => {
                integrate_half_line(|s| kernel.mu(s) * (1.0 - g.at(-s)).powi(2), 1e-3, kernel.horizon())
            }
        }
    }

    /// `int mu(s) ||grad u0(0) - grad u0(-s)||^2 ds`
    pub fn memory_quadratic(&self, kernel: &RelaxationKernel, grid: &SpatialGrid) -> f64 {
        let f = self.memory_factor(kernel);
        if f == 0.0 {
            return 0.0;
        }
        f * grid.grad_norm_sq(&self.displacement)
    }

    /// Weighted history norm `int mu(s) ||grad u0(-s)||^2 ds`.
    pub fn weighted_norm(&self, kernel: &RelaxationKernel, grid: &SpatialGrid) -> f64 {
        let factor = match (self.kind, kernel.family()) {
            (HistoryKind::Constant, _) => kernel.mass(),
            (_, KernelFamily::ExponentialSum { terms }) => terms.iter().map(|t| self.mode_weight_sq(t.c, t.lambda)).sum(),
            (HistoryKind::Separable { g }, _) => {
                integrate_half_line(|s| kernel.mu(s) * g.at(-s).powi(2), 1e-3, kernel.horizon())
            }
        };
        factor * grid.grad_norm_sq(&self.displacement)
    }
}

fn mode_quadrature<F: Fn(f64) -> f64>(lambda: f64, f: F) -> f64 {
    // exp(-37) ~ 1e-16 beyond the cut
    let cut = 37.0 / lambda;
    GaussLegendre::new(64).integrate(0.0, cut, |s| (-lambda * s).exp() * f(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> SpatialGrid {
        SpatialGrid::new_1d(std::f64::consts::PI, 50).unwrap()
    }

    #[test]
    fn separable_exponential_memory_weight_is_one_third() {
        let g = grid();
        let k = RelaxationKernel::exponential(1.0, 1.0).unwrap();
        let h = HistoryProfile::new(
            HistoryKind::Separable { g: TimeProfile::Exponential { rate: 1.0 } },
            g.sine_mode(&[1]),
            g.zeros(),
            &g,
        )
        .unwrap();
        assert_relative_eq!(h.memory_factor(&k), 1.0 / 3.0, max_relative = 1e-14);
        // quadrature oracle
        let quad = integrate_half_line(|s| (-s).exp() * (1.0 - (-s).exp()).powi(2), 1e-3, 60.0);
        assert!((quad - 1.0 / 3.0).abs() < 1e-6);
        assert_relative_eq!(h.mode_weight(1.0, 1.0), 0.5);
    }

    #[test]
    fn cosine_profile_uses_quadrature() {
        let g = grid();
        let h = HistoryProfile::new(
            HistoryKind::Separable { g: TimeProfile::Cosine { frequency: 2.0 } },
            g.sine_mode(&[1]),
            g.zeros(),
            &g,
        )
        .unwrap();
        // int exp(-3s) cos(2s) ds = 3 / (9 + 4)
        assert_relative_eq!(h.mode_weight(1.0, 3.0), 3.0 / 13.0, max_relative = 1e-10);
        // cos^2 = (1 + cos 4s)/2 -> (1/3 + 3/25)/2
        assert_relative_eq!(h.mode_weight_sq(1.0, 3.0), 0.5 * (1.0 / 3.0 + 3.0 / 25.0), max_relative = 1e-10);
    }

    #[test]
    fn constant_history_has_no_memory_energy() {
        let g = grid();
        let k = RelaxationKernel::power_law(1.0, 2.0).unwrap();
        let h = HistoryProfile::constant(g.sine_mode(&[1]), g.zeros(), &g).unwrap();
        assert_eq!(h.memory_quadratic(&k, &g), 0.0);
        assert_relative_eq!(h.weighted_norm(&k, &g), g.grad_norm_sq(h.displacement()));
    }

    #[test]
    fn rejects_growing_or_misshaped_histories() {
        let g = grid();
        let kind = HistoryKind::Separable { g: TimeProfile::Exponential { rate: -1.0 } };
        assert!(HistoryProfile::new(kind, g.zeros(), g.zeros(), &g).is_err());
        assert!(matches!(
            HistoryProfile::constant(vec![0.0; 3], g.zeros(), &g),
            Err(ModelError::ShapeMismatch { .. })
        ));
    }
}
