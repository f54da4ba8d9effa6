use serde::{Deserialize, Serialize};

use super::trace::EnergyTrace;
use crate::error::DiagError;
use crate::numerics::linear_fit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `E = K exp(-rate t)`
    Exponential,
    /// `E = K (1 + t)^rate`
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Decay constant `kappa > 0` for exponential fits, the (signed) exponent for power fits.
    pub rate: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Share of the run treated as the initial transient by default.
pub const TRANSIENT_FRACTION: f64 = 0.2;
/// Allowed rise of `E` above its running minimum, relative to the energy scale.
pub const MONOTONE_TOL: f64 = 1e-6;
const MIN_POINTS: usize = 4;

/// Least-squares fit of `log E` against `t` or `log(1 + t)`.
///
/// The default window drops the first [`TRANSIENT_FRACTION`] of the run.
/// Samples with `E <= floor * scale` are ignored, where the scale is
/// `max(|E(0)|, quad_energy(0))`.
pub fn fit_decay(trace: &EnergyTrace, model: DecayModel, window: Option<(f64, f64)>, floor: f64) -> Result<DecayFit, DiagError> {
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
        return Err(DiagError::InsufficientDecay("empty trace".into()));
    };
    let (t0, t1) = window.unwrap_or((first.t + TRANSIENT_FRACTION * (last.t - first.t), last.t));
    let scale = first.total_energy.abs().max(first.quad_energy);
    let level = floor * scale;
    let picked: Vec<(f64, f64)> = trace
        .records
        .iter()
        .filter(|r| r.t >= t0 && r.t <= t1 && r.total_energy > level)
        .map(|r| (r.t, r.total_energy))
        .collect();
    if picked.len() < MIN_POINTS {
        return Err(DiagError::InsufficientDecay(format!("{} samples above the floor in [{t0}, {t1}]", picked.len())));
    }
    let mut low = f64::INFINITY;
    for &(t, e) in &picked {
        if e - low > MONOTONE_TOL * scale {
            return Err(DiagError::InsufficientDecay(format!("energy rises by {} at t = {t}", e - low)));
        }
        low = low.min(e);
    }
    let x: Vec<f64> = picked
        .iter()
        .map(|&(t, _)| match model {
            DecayModel::Exponential => t,
            DecayModel::Power => t.ln_1p(),
        })
        .collect();
    let y: Vec<f64> = picked.iter().map(|&(_, e)| e.ln()).collect();
    let fit = linear_fit(&x, &y).ok_or_else(|| DiagError::InsufficientDecay("degenerate window".into()))?;
    let rate = match model {
        DecayModel::Exponential => -fit.slope,
        DecayModel::Power => fit.slope,
    };
    Ok(DecayFit {
        model,
        rate,
        amplitude: fit.intercept.exp(),
        r_squared: fit.r_squared,
        window: (picked[0].0, picked[picked.len() - 1].0),
        points: picked.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::TraceRecord;

    fn synthetic(e: impl Fn(f64) -> f64) -> EnergyTrace {
        EnergyTrace::new(
            (0..=500)
                .map(|k| {
                    let t = k as f64 * 0.02;
                    let v = e(t);
                    TraceRecord {
                        t,
                        quad_energy: v,
                        total_energy: v,
                        memory_norm: 0.0,
                        dissipation: 0.0,
                        i0: 0.0,
                        grad_norm: 0.0,
                        damp_power: 0.0,
                        memory_dissipation: 0.0,
                        n_prime: 0.0,
                    }
                })
                .collect(),
        )
    }

    #[test]
    fn exact_exponential() {
        let fit = fit_decay(&synthetic(|t| 3.0 * (-2.0 * t).exp()), DecayModel::Exponential, None, 1e-14).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-10);
        assert!((fit.amplitude - 3.0).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
        assert!((fit.window.0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exact_power() {
        let fit = fit_decay(&synthetic(|t| 1.0 / (1.0 + t)), DecayModel::Power, None, 1e-14).unwrap();
        assert!((fit.rate + 1.0).abs() < 1e-10);
        assert!((fit.amplitude - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_growth_and_short_windows() {
        let grow = synthetic(|t| 1.0 + t);
        assert!(matches!(fit_decay(&grow, DecayModel::Exponential, None, 1e-14), Err(DiagError::InsufficientDecay(_))));
        let e = synthetic(|t| (-t).exp());
        assert!(fit_decay(&e, DecayModel::Exponential, Some((1.0, 1.05)), 1e-14).is_err());
        // everything below the floor
        assert!(fit_decay(&e, DecayModel::Exponential, Some((5.0, 10.0)), 0.5).is_err());
    }
}
