//! Problem data: relaxation kernels, source nonlinearities, initial histories.

mod assumptions;
mod history;
mod kernel;
mod source;

pub use assumptions::{validate_assumptions, AssumptionReport, ClauseCheck, ClauseStatus};
pub use history::{HistoryKind, HistoryProfile, TimeProfile};
pub use kernel::{DecayClass, KernelFamily, PronyTerm, RelaxationKernel};
pub use source::{PowerTerm, SourceSpec};

use crate::error::ModelError;
use crate::grid::SpatialGrid;

/// A fully specified initial-boundary value problem on a grid.
///
/// `kernel`, `source` and `damping_m` are optional so that the conservative
/// and linear limits can be run through the same stepper; a problem read from
/// a configuration document always carries all three.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: SpatialGrid,
    pub kernel: Option<RelaxationKernel>,
    pub source: Option<SourceSpec>,
    pub damping_m: Option<f64>,
    pub history: HistoryProfile,
}

impl Model {
    pub fn new(
        grid: SpatialGrid,
        kernel: Option<RelaxationKernel>,
        source: Option<SourceSpec>,
        damping_m: Option<f64>,
        history: HistoryProfile,
    ) -> Result<Self, ModelError> {
        grid.check_len(history.displacement())?;
        if let Some(m) = damping_m {
            if !(m >= 1.0 && m.is_finite()) {
                return Err(ModelError::AssumptionViolated(format!("m >= 1 required, got {m}")));
            }
        }
        Ok(Self { grid, kernel, source, damping_m, history })
    }

    /// `k(0)`; 1 without memory.
    pub fn k0(&self) -> f64 {
        self.kernel.as_ref().map_or(1.0, RelaxationKernel::k0)
    }

    pub fn f(&self, u: f64) -> f64 {
        self.source.as_ref().map_or(0.0, |s| s.f(u))
    }

    /// `int F(u) dx`
    pub fn potential(&self, u: &[f64]) -> f64 {
        match &self.source {
            Some(s) => self.grid.cell_volume() * u.iter().map(|&x| s.big_f(x)).sum::<f64>(),
            None => 0.0,
        }
    }

    /// `|v|^(m-1) v`
    pub fn damping(&self, v: f64) -> f64 {
        match self.damping_m {
            Some(1.0) => v,
            Some(m) => v.abs().powf(m - 1.0) * v,
            None => 0.0,
        }
    }

    /// `||v||_{m+1}^{m+1}`, the damping power.
    pub fn damping_power(&self, v: &[f64]) -> f64 {
        match self.damping_m {
            Some(m) => self.grid.lp_pow(v, m + 1.0),
            None => 0.0,
        }
    }
}
