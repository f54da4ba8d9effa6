//! Library half of the `viscowell` executable: configuration loading, the
//! subcommand pipelines and the bundled presets.

pub mod presets;
pub mod sweep;

use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use viscowell::config::ProblemConfig;
use viscowell::diag::{
    blowup_functional, choose_alpha_eps, classify_regime, detect_blowup, energy_identity_residual, fit_decay,
    initial_energies, is_strictly_increasing, max_energy_increase, BlowupBase, BlowupDetection, DecayFit, DecayModel,
    EnergyTrace, InitialEnergies, RegimePrediction,
};
use viscowell::error::ConfigError;
use viscowell::model::{validate_assumptions, AssumptionReport, Model};
use viscowell::sim::{dump_checkpoint, run, RunOutcome, SolverConfig, StopReason};
use viscowell::well::WellConstants;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Reads a problem from a file or a preset name; exactly one must be given.
pub fn load_config(path: Option<&Path>, preset: Option<&str>, strict: bool) -> Result<ProblemConfig, CliError> {
    let mut cfg = match (path, preset) {
        (Some(p), None) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            ProblemConfig::from_json(&text)?
        }
        (None, Some(name)) => presets::preset(name).ok_or_else(|| {
            CliError::Config(format!("unknown preset `{name}`; known: {}", presets::names().collect::<Vec<_>>().join(", ")))
        })?,
        _ => return Err(CliError::Config("pass exactly one of --config and --preset".into())),
    };
    cfg.diagnostics.strict |= strict;
    Ok(cfg)
}

fn build(cfg: &ProblemConfig) -> Result<(Model, SolverConfig), CliError> {
    Ok(cfg.build()?)
}

fn constants_for(cfg: &ProblemConfig, model: &Model) -> Result<WellConstants, CliError> {
    let source = model.source.as_ref().expect("configured models carry a source");
    WellConstants::compute(&model.grid, source, model.k0(), &cfg.well_options()).map_err(runtime)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub constants: WellConstants,
    pub assumptions: AssumptionReport,
}

pub fn cmd_constants(cfg: &ProblemConfig) -> Result<ConstantsReport, CliError> {
    let model = cfg.build_model().map_err(ConfigError::from)?;
    let assumptions = validate_assumptions(
        model.source.as_ref().expect("source"),
        cfg.damping_m,
        model.kernel.as_ref().expect("kernel"),
        cfg.diagnostics.strict,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(ConstantsReport { constants: constants_for(cfg, &model)?, assumptions })
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupSummary {
    pub base: Option<BlowupBase>,
    pub alpha: Option<f64>,
    pub eps: Option<f64>,
    pub detection: BlowupDetection,
    /// `Y` strictly increasing on the resolved window.
    pub y_increasing: Option<bool>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub stop: StopReason,
    pub t_final: f64,
    pub samples: usize,
    pub initial: InitialEnergies,
    /// `max |E(t) + D(t) - E(0)|`
    pub max_residual: f64,
    pub max_energy_increase: f64,
    pub solve_residual: f64,
    pub decay_fit: Option<DecayFit>,
    pub decay_note: Option<String>,
    pub blowup: Option<BlowupSummary>,
}

pub struct Simulation {
    pub model: Model,
    pub solver: SolverConfig,
    pub outcome: RunOutcome,
    pub summary: RunSummary,
}

/// Runs a problem and summarizes it: identity residual and decay fit for
/// completed runs, the blow-up functional and detection otherwise.
pub fn simulate(cfg: &ProblemConfig) -> Result<Simulation, CliError> {
    let (model, solver) = build(cfg)?;
    let outcome = run(&model, &solver).map_err(runtime)?;
    let trace = &outcome.trace;
    let initial = initial_energies(&model);
    let (decay_fit, decay_note) = if outcome.stop == StopReason::Completed {
        match fit_decay(trace, cfg.diagnostics.decay_model, cfg.diagnostics.fit_window, solver.energy_floor) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let blowup = if outcome.stop == StopReason::Completed { None } else { Some(blowup_summary(cfg, &model, &solver, trace)?) };
    let summary = RunSummary {
        stop: outcome.stop,
        t_final: trace.last().map_or(0.0, |r| r.t),
        samples: trace.len(),
        initial,
        max_residual: energy_identity_residual(trace),
        max_energy_increase: max_energy_increase(trace),
        solve_residual: outcome.solve_residual,
        decay_fit,
        decay_note,
        blowup,
    };
    Ok(Simulation { model, solver, outcome, summary })
}

fn blowup_summary(cfg: &ProblemConfig, model: &Model, solver: &SolverConfig, trace: &EnergyTrace) -> Result<BlowupSummary, CliError> {
    let first = trace.first().expect("a stopped run has samples");
    let e0 = first.total_energy;
    let base = if e0 < 0.0 {
        Ok(BlowupBase::NegativeEnergy)
    } else {
        match constants_for(cfg, model)?.m_threshold {
            Some(m) if e0 < m => Ok(BlowupBase::PositiveEnergy { m_threshold: m }),
            Some(m) => Err(format!("E(0) = {e0} is not below M = {m}")),
            None => Err("M is undefined for these exponents".to_string()),
        }
    };
    let m = model.damping_m.expect("configured models carry m");
    let source = model.source.as_ref().expect("source");
    let picked = base.and_then(|b| {
        choose_alpha_eps(source, m, b.gap(e0), first.n_prime).map(|(a, e)| (b, a, e)).map_err(|e| e.to_string())
    });
    Ok(match picked {
        Ok((b, alpha, eps)) => {
            let y = blowup_functional(trace, b, alpha, eps);
            let detection = detect_blowup(trace, &y, alpha, solver.blowup_threshold);
            BlowupSummary {
                base: Some(b),
                alpha: Some(alpha),
                eps: Some(eps),
                y_increasing: Some(is_strictly_increasing(&y[..=detection.resolved_end])),
                detection,
                note: None,
            }
        }
        Err(note) => BlowupSummary {
            base: None,
            alpha: None,
            eps: None,
            detection: detect_blowup(trace, &[], f64::NAN, solver.blowup_threshold),
            y_increasing: None,
            note: Some(note),
        },
    })
}

/// Writes `trace.csv`, `checkpoint.bin` and `summary.json` into `out`.
pub fn write_simulation(sim: &Simulation, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(runtime)?;
    let file = fs::File::create(out.join("trace.csv")).map_err(runtime)?;
    sim.outcome.trace.write_csv(file).map_err(runtime)?;
    fs::write(out.join("checkpoint.bin"), dump_checkpoint(&sim.outcome.state, &sim.model)).map_err(runtime)?;
    write_json(&sim.summary, Some(&out.join("summary.json")))
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub constants: WellConstants,
    pub prediction: RegimePrediction,
}

pub fn cmd_classify(cfg: &ProblemConfig) -> Result<ClassifyReport, CliError> {
    let model = cfg.build_model().map_err(ConfigError::from)?;
    let constants = constants_for(cfg, &model)?;
    let prediction = classify_regime(&model, &constants, &initial_energies(&model), cfg.diagnostics.strict);
    Ok(ClassifyReport { constants, prediction })
}

/// Fits a decay law to a CSV trace.
pub fn cmd_fit(trace_path: &Path, model: DecayModel, window: Option<(f64, f64)>, floor: f64) -> Result<DecayFit, CliError> {
    let file = fs::File::open(trace_path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", trace_path.display())))?;
    let trace = EnergyTrace::read_csv(file).map_err(|e| CliError::Config(e.to_string()))?;
    fit_decay(&trace, model, window, floor).map_err(runtime)
}

/// Pretty JSON to `path`, or to stdout without one.
pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    match path {
        Some(p) => fs::write(p, text + "\n").map_err(runtime),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
