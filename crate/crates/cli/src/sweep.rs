//! Parameter sweeps: predicted regime against observed outcome per point.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use viscowell::config::ProblemConfig;
use viscowell::diag::{RegimePrediction, Verdict};
use viscowell::sim::StopReason;
use viscowell::well::WellLabel;

use crate::{cmd_classify, simulate, CliError, RunSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Amplitude,
    /// Damping exponent.
    M,
    /// Exponent of the `i`-th source term (0-based).
    P(usize),
    /// Initial total energy, reached by tuning the amplitude.
    Energy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub kind: AxisKind,
    pub name: String,
    pub values: Vec<f64>,
}

impl FromStr for Axis {
    type Err = CliError;

    /// `name=start:stop:count` (inclusive linear grid) or `name=v1,v2,...`
    /// with `name` one of `amplitude`, `m`, `p`, `p1`, `p2`, ..., `energy`.
    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Config(format!("axis `{s}`: {why}"));
        let (name, spec) = s.split_once('=').ok_or_else(|| bad("expected name=values"))?;
        let kind = match name {
            "amplitude" => AxisKind::Amplitude,
            "m" => AxisKind::M,
            "energy" => AxisKind::Energy,
            "p" => AxisKind::P(0),
            _ => match name.strip_prefix('p').and_then(|i| i.parse::<usize>().ok()) {
                Some(i) if i >= 1 => AxisKind::P(i - 1),
                _ => return Err(bad("unknown axis name")),
            },
        };
        let spec = spec.trim();
        if spec.is_empty() {
            return Err(bad("empty axis"));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("`{t}` is not a number")));
        let values = if let [a, b, n] = spec.split(':').collect::<Vec<_>>()[..] {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.trim().parse().map_err(|_| bad("count must be an integer"))?;
            match n {
                0 => return Err(bad("empty axis")),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            }
        } else {
            spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad("values must be finite"));
        }
        Ok(Self { kind, name: name.to_string(), values })
    }
}

/// Applies one axis value; energy targets are resolved last by the caller.
fn apply(cfg: &ProblemConfig, kind: AxisKind, value: f64) -> Result<ProblemConfig, CliError> {
    let mut out = cfg.clone();
    match kind {
        AxisKind::Amplitude => out = out.with_amplitude(value)?,
        AxisKind::M => out.damping_m = value,
        AxisKind::P(i) => {
            let terms = out.source.positive.len();
            let term = out.source.positive.get_mut(i).ok_or_else(|| CliError::Config(format!("source has {terms} terms, no p{}", i + 1)))?;
            term.exponent = value;
        }
        AxisKind::Energy => {
            let a = out.amplitude_for_energy(value)?;
            out = out.with_amplitude(a)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Bounded,
    Blowup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    Match,
    Mismatch,
    NoPrediction,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub index: usize,
    pub params: Vec<(String, f64)>,
    pub e0: Option<f64>,
    pub quad_energy0: Option<f64>,
    pub label: Option<WellLabel>,
    pub verdicts: Vec<Verdict>,
    pub predicted: Option<Outcome>,
    pub observed: Option<Outcome>,
    pub stop: Option<StopReason>,
    pub t_final: Option<f64>,
    pub agreement: Agreement,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub point: SweepPoint,
    pub summary: Option<RunSummary>,
    pub prediction: Option<RegimePrediction>,
}

/// Observed outcome of a stop reason; non-finite values count as blow-up.
pub fn observed(stop: StopReason) -> Outcome {
    match stop {
        StopReason::Completed => Outcome::Bounded,
        StopReason::BlowupThreshold | StopReason::NonFinite => Outcome::Blowup,
    }
}

fn grid_points(axes: &[Axis]) -> Vec<Vec<(usize, f64)>> {
    axes.iter().enumerate().fold(vec![vec![]], |acc, (i, axis)| {
        acc.iter().flat_map(|prefix| axis.values.iter().map(move |&v| [prefix.clone(), vec![(i, v)]].concat())).collect()
    })
}

fn run_point(cfg: &ProblemConfig, axes: &[Axis], index: usize, coords: &[(usize, f64)]) -> PointReport {
    let params: Vec<(String, f64)> = coords.iter().map(|&(i, v)| (axes[i].name.clone(), v)).collect();
    let mut point = SweepPoint {
        index,
        params,
        e0: None,
        quad_energy0: None,
        label: None,
        verdicts: vec![],
        predicted: None,
        observed: None,
        stop: None,
        t_final: None,
        agreement: Agreement::Failed,
        error: None,
    };
    // energy targets depend on every other axis, so they go last
    let mut ordered = coords.to_vec();
    ordered.sort_by_key(|&(i, _)| axes[i].kind == AxisKind::Energy);
    let result = ordered.iter().try_fold(cfg.clone(), |c, &(i, v)| apply(&c, axes[i].kind, v)).and_then(|c| {
        let report = cmd_classify(&c)?;
        let sim = simulate(&c)?;
        Ok((report.prediction, sim.summary))
    });
    match result {
        Ok((prediction, summary)) => {
            point.e0 = Some(prediction.initial.total_energy);
            point.quad_energy0 = Some(prediction.initial.quad_energy);
            point.label = prediction.membership.map(|m| m.label);
            point.verdicts = prediction.verdicts.clone();
            point.predicted = prediction.predicts_blowup().map(|b| if b { Outcome::Blowup } else { Outcome::Bounded });
            point.observed = Some(observed(summary.stop));
            point.stop = Some(summary.stop);
            point.t_final = Some(summary.t_final);
            point.agreement = match point.predicted {
                None => Agreement::NoPrediction,
                Some(p) if Some(p) == point.observed => Agreement::Match,
                Some(_) => Agreement::Mismatch,
            };
            PointReport { point, summary: Some(summary), prediction: Some(prediction) }
        }
        Err(e) => {
            log::warn!("sweep point {index} failed: {e}");
            point.error = Some(e.to_string());
            PointReport { point, summary: None, prediction: None }
        }
    }
}

/// Runs every grid point of the axes (row-major, first axis slowest) on
/// `jobs` threads. Per-point failures are recorded, not propagated.
pub fn run_sweep(cfg: &ProblemConfig, axes: &[Axis], jobs: Option<usize>) -> Result<Vec<PointReport>, CliError> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(CliError::Config("a sweep needs at least one non-empty axis".into()));
    }
    let points = grid_points(axes);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(pool.install(|| points.par_iter().enumerate().map(|(k, c)| run_point(cfg, axes, k, c)).collect()))
}

fn fmt_opt<T: std::fmt::Debug>(v: Option<T>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn snake<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|x| x.as_str().map(str::to_string)).unwrap_or_default()
}

/// Writes `point_NNN.json` per point and `aggregate.csv`.
pub fn write_sweep(reports: &[PointReport], out: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Runtime(e.to_string());
    fs::create_dir_all(out).map_err(io)?;
    for r in reports {
        crate::write_json(r, Some(&out.join(format!("point_{:03}.json", r.point.index))))?;
    }
    let mut w = csv::Writer::from_path(out.join("aggregate.csv")).map_err(|e| CliError::Runtime(e.to_string()))?;
    let names: Vec<String> = reports.first().map(|r| r.point.params.iter().map(|(n, _)| n.clone()).collect()).unwrap_or_default();
    let mut header = vec!["index".to_string()];
    header.extend(names);
    header.extend(["e0", "quad_energy0", "label", "verdicts", "predicted", "observed", "stop", "t_final", "agreement", "error"].map(String::from));
    w.write_record(&header).map_err(|e| CliError::Runtime(e.to_string()))?;
    for r in reports {
        let p = &r.point;
        let mut row = vec![p.index.to_string()];
        row.extend(p.params.iter().map(|(_, v)| v.to_string()));
        row.push(p.e0.map(|v| v.to_string()).unwrap_or_default());
        row.push(p.quad_energy0.map(|v| v.to_string()).unwrap_or_default());
        row.push(fmt_opt(p.label));
        row.push(p.verdicts.iter().map(snake).collect::<Vec<_>>().join("+"));
        row.push(p.predicted.map(|o| snake(&o)).unwrap_or_default());
        row.push(p.observed.map(|o| snake(&o)).unwrap_or_default());
        row.push(fmt_opt(p.stop));
        row.push(p.t_final.map(|v| v.to_string()).unwrap_or_default());
        row.push(snake(&p.agreement));
        row.push(p.error.clone().unwrap_or_default());
        w.write_record(&row).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.flush().map_err(io)
}
