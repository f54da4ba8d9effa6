//! JSON problem documents: kernel, source, domain, history, damping exponent,
//! solver settings and diagnostics options. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, ModelError};
use crate::grid::SpatialGrid;
use crate::model::{validate_assumptions, ClauseStatus, HistoryKind, HistoryProfile, KernelFamily, Model, PowerTerm, RelaxationKernel, SourceSpec};
use crate::sim::SolverConfig;
use crate::sobolev::SobolevOptions;
use crate::well::{NehariOptions, WellOptions};
use crate::diag::{initial_energies, DecayModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub positive: Vec<PowerTerm>,
    #[serde(default)]
    pub negative: Vec<PowerTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lengths: Vec<f64>,
    pub nodes: Vec<usize>,
}

/// A grid field given by sine modes or explicit interior values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
#[derive(Default)]
pub enum FieldSpec {
    #[default]
    Zero,
    /// `amplitude * prod_k sin(modes[k] pi x_k / L_k)`
    Sine { amplitude: f64, modes: Vec<usize> },
    Values { values: Vec<f64> },
}


impl FieldSpec {
    pub fn build(&self, grid: &SpatialGrid) -> Result<Vec<f64>, ModelError> {
        match self {
            Self::Zero => Ok(grid.zeros()),
            Self::Sine { amplitude, modes } => {
                if modes.len() != grid.dimension() || modes.contains(&0) {
                    return Err(ModelError::InvalidHistory(format!("need one positive mode per axis, got {modes:?}")));
                }
                Ok(grid.sine_mode(modes).into_iter().map(|x| amplitude * x).collect())
            }
            Self::Values { values } => {
                grid.check_len(values)?;
                Ok(values.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryConfig {
    #[serde(default = "constant_history")]
    pub time: HistoryKind,
    pub displacement: FieldSpec,
    #[serde(default)]
    pub velocity: FieldSpec,
}

fn constant_history() -> HistoryKind {
    HistoryKind::Constant
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Reject exponent caps instead of warning about them.
    pub strict: bool,
    /// Use this value for every embedding constant instead of estimating it.
    pub gamma_override: Option<f64>,
    pub sobolev: SobolevOptions,
    pub nehari: NehariOptions,
    /// Decay model fitted to completed runs.
    pub decay_model: DecayModel,
    /// Fit window `[t0, t1]`; the default drops the initial transient.
    pub fit_window: Option<(f64, f64)>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            strict: false,
            gamma_override: None,
            sobolev: SobolevOptions::default(),
            nehari: NehariOptions::default(),
            decay_model: DecayModel::Exponential,
            fit_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kernel: KernelFamily,
    pub source: SourceConfig,
    pub domain: DomainConfig,
    pub history: HistoryConfig,
    pub damping_m: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn grid(&self) -> Result<SpatialGrid, ModelError> {
        SpatialGrid::new(self.domain.lengths.clone(), self.domain.nodes.clone())
    }

    pub fn source_spec(&self) -> Result<SourceSpec, ModelError> {
        SourceSpec::new(self.source.positive.clone(), self.source.negative.clone())
    }

    /// Builds and validates the model. Violated standing assumptions are
    /// errors; relaxed-only clauses are logged by the validator.
    pub fn build_model(&self) -> Result<Model, ModelError> {
        let grid = self.grid()?;
        let kernel = RelaxationKernel::new(self.kernel.clone())?;
        let source = self.source_spec()?;
        let report = validate_assumptions(&source, self.damping_m, &kernel, self.diagnostics.strict)?;
        if let Some(c) = report.clauses.iter().find(|c| c.status == ClauseStatus::Fail) {
            return Err(ModelError::AssumptionViolated(format!("{} ({})", c.clause, c.detail)));
        }
        let history = HistoryProfile::new(
            self.history.time,
            self.history.displacement.build(&grid)?,
            self.history.velocity.build(&grid)?,
            &grid,
        )?;
        Model::new(grid, Some(kernel), Some(source), Some(self.damping_m), history)
    }

    /// Model plus the solver settings checked against it.
    pub fn build(&self) -> Result<(Model, SolverConfig), ConfigError> {
        let model = self.build_model()?;
        self.solver.validate(&model)?;
        Ok((model, self.solver))
    }

    pub fn well_options(&self) -> WellOptions {
        WellOptions {
            sobolev: self.diagnostics.sobolev,
            nehari: self.diagnostics.nehari,
            gamma_override: self.diagnostics.gamma_override,
        }
    }

    /// Copy with the sine displacement rescaled to `amplitude`.
    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self, ConfigError> {
        let mut out = self.clone();
        match &mut out.history.displacement {
            FieldSpec::Sine { amplitude: a, .. } => *a = amplitude,
            _ => return Err(ConfigError::Invalid("amplitude only applies to a sine displacement".into())),
        }
        Ok(out)
    }

    /// Sine amplitude on the branch beyond the energy maximum whose initial
    /// total energy equals `target`, found by bisection.
    pub fn amplitude_for_energy(&self, target: f64) -> Result<f64, ConfigError> {
        let energy = |a: f64| -> Result<f64, ConfigError> { Ok(initial_energies(&self.with_amplitude(a)?.build_model()?).total_energy) };
        // E(a) rises from 0, peaks, then falls for superquadratic sources
        let mut peak = (0.0, 0.0);
        let mut a = 1e-3;
        let mut hi = None;
        while a < 1e6 {
            let e = energy(a)?;
            if e > peak.1 {
                peak = (a, e);
            } else if e < target {
                hi = Some(a);
                break;
            }
            a *= 1.05;
        }
        let (Some(hi), true) = (hi, target < peak.1) else {
            return Err(ConfigError::Invalid(format!("energy {target} is not attained beyond the maximum {}", peak.1)));
        };
        let (mut lo, mut hi) = (peak.0, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if energy(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "kernel": {"type": "exponential_sum", "terms": [{"c": 1.0, "lambda": 1.0}]},
        "source": {"positive": [{"coef": 1.0, "exponent": 3.0}]},
        "domain": {"lengths": [3.141592653589793], "nodes": [100]},
        "history": {"displacement": {"type": "sine", "amplitude": 0.1, "modes": [1]}},
        "damping_m": 1.0,
        "solver": {"dt": 0.001, "t_end": 1.0}
    }"#;

    #[test]
    fn parses_and_builds() {
        let cfg = ProblemConfig::from_json(DOC).unwrap();
        let (model, solver) = cfg.build().unwrap();
        assert_eq!(model.k0(), 2.0);
        assert_eq!(solver.dt, 1e-3);
        assert_eq!(model.grid.len(), 100);
        let again = ProblemConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_models() {
        let extra = DOC.replace("\"damping_m\"", "\"colour\": 1, \"damping_m\"");
        assert!(matches!(ProblemConfig::from_json(&extra), Err(ConfigError::Json(_))));
        let bad_m = ProblemConfig::from_json(&DOC.replace("\"damping_m\": 1.0", "\"damping_m\": 0.5")).unwrap();
        assert!(bad_m.build().is_err());
        let cfl = ProblemConfig::from_json(&DOC.replace("\"dt\": 0.001", "\"dt\": 0.1")).unwrap();
        assert!(matches!(cfl.build(), Err(ConfigError::Solver(_))));
        let mut strict = ProblemConfig::from_json(DOC).unwrap();
        strict.diagnostics.strict = true;
        assert!(strict.build_model().is_err());
    }

    #[test]
    fn energy_targets_land_on_the_upper_branch() {
        let cfg = ProblemConfig::from_json(DOC).unwrap();
        let a = cfg.amplitude_for_energy(0.25).unwrap();
        let e = initial_energies(&cfg.with_amplitude(a).unwrap().build_model().unwrap()).total_energy;
        assert!((e - 0.25).abs() < 1e-10);
        assert!(a > (4.0f64 / 3.0).sqrt());
        assert!(cfg.amplitude_for_energy(10.0).is_err());
    }
}
