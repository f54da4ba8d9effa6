use serde::{Deserialize, Serialize};

use super::trace::EnergyTrace;
use crate::error::DiagError;
use crate::numerics::bisect;

/// Comparison function of the decay argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvelopeParams {
    /// `Phi(s) = c1 (s^(2/(m+1)) + s)`
    Exponential { c1: f64, m: f64 },
    /// `Psi(s) = c2 (s^(2/(m+1)) + s) + c3 s^(sigma/(sigma+r-1))`
    Polynomial { c2: f64, c3: f64, m: f64, sigma: f64, r: f64 },
}

impl EnvelopeParams {
    pub fn phi(&self, s: f64) -> f64 {
        match *self {
            Self::Exponential { c1, m } => c1 * (s.powf(2.0 / (m + 1.0)) + s),
            Self::Polynomial { c2, c3, m, sigma, r } => {
                c2 * (s.powf(2.0 / (m + 1.0)) + s) + c3 * s.powf(sigma / (sigma + r - 1.0))
            }
        }
    }

    fn validate(&self) -> Result<(), DiagError> {
        let ok = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(DiagError::InvalidEnvelope(format!("{name} = {v} must be finite and non-negative")))
            }
        };
        match *self {
            Self::Exponential { c1, m } => {
                ok("c1", c1)?;
                check_m(m)
            }
            Self::Polynomial { c2, c3, m, sigma, r } => {
                ok("c2", c2)?;
                ok("c3", c3)?;
                check_m(m)?;
                if !(r > 1.0 && r < 2.0 && sigma > 0.0 && sigma < 2.0 - r) {
                    return Err(DiagError::InvalidEnvelope(format!("need 1 < r < 2 and 0 < sigma < 2 - r, got r = {r}, sigma = {sigma}")));
                }
                Ok(())
            }
        }
    }

    /// Solves `x + Phi(x) = s` on `[0, s]`.
    pub fn resolvent(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if let Self::Exponential { c1, m } = *self {
            if m == 1.0 {
                return s / (1.0 + 2.0 * c1);
            }
        }
        bisect(|x| x + self.phi(x) - s, 0.0, s, 1e-15 * s)
    }
}

fn check_m(m: f64) -> Result<(), DiagError> {
    if m >= 1.0 && m.is_finite() {
        Ok(())
    } else {
        Err(DiagError::InvalidEnvelope(format!("m = {m} must be at least 1")))
    }
}

/// Euler step of the comparison ODE.
pub const ENVELOPE_STEP: f64 = 1e-3;

/// Solves `S' = -(I + Phi)^(-1) S`, `S(0) = e0` by explicit Euler with step
/// [`ENVELOPE_STEP`] and returns `S` at the (sorted, non-negative) `t_grid`.
pub fn decay_envelope(e0: f64, params: &EnvelopeParams, t_grid: &[f64]) -> Result<Vec<f64>, DiagError> {
    if !(e0 > 0.0 && e0.is_finite()) {
        return Err(DiagError::InvalidEnvelope(format!("E(0) = {e0} must be positive")));
    }
    params.validate()?;
    if t_grid.iter().any(|&t| !(t >= 0.0)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(DiagError::InvalidEnvelope("time grid must be sorted and non-negative".into()));
    }
    let mut out = Vec::with_capacity(t_grid.len());
    let (mut t, mut s) = (0.0, e0);
    for &target in t_grid {
        let n = ((target - t) / ENVELOPE_STEP).ceil() as usize;
        for k in 0..n {
            let h = if k + 1 == n { target - t - k as f64 * ENVELOPE_STEP } else { ENVELOPE_STEP };
            s = (s - h * params.resolvent(s)).max(0.0);
        }
        t = target;
        out.push(s);
    }
    Ok(out)
}

/// Outcome of the comparison `E(nT) <= S(n)` on a decaying trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeCheck {
    /// Smallest `C1` with `E <= C1 (D^(2/(m+1)) + D)` on the trailing half.
    pub c1: f64,
    /// First sample time from which that inequality holds to the end.
    pub t1: f64,
    /// Restart period `T` with `E(T) + Phi^(-1)(E(T)) <= E(0)`.
    pub period: f64,
    /// `(n, E(nT), S(n))` for every `nT` inside the run.
    pub comparisons: Vec<(usize, f64, f64)>,
    pub holds: bool,
}

const MIN_TAIL: usize = 10;

/// Fits the minimal `C1` of the dissipation bound and tests `E(nT) <= S(n)`.
///
/// The constant is fitted on the second half of the run, where the bound is
/// meant to hold for large times; `T1` is where it starts holding for good.
pub fn check_decay_envelope(trace: &EnergyTrace, m: f64) -> Result<EnvelopeCheck, DiagError> {
    let r = &trace.records;
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
        return Err(DiagError::InsufficientDecay("empty trace".into()));
    };
    let e0 = first.total_energy;
    let q = 2.0 / (m + 1.0);
    let ratio: Vec<f64> = r
        .iter()
        .map(|x| if x.dissipation > 0.0 { x.total_energy / (x.dissipation.powf(q) + x.dissipation) } else { f64::INFINITY })
        .collect();
    let mid = 0.5 * (first.t + last.t);
    let c1 = r.iter().zip(&ratio).filter(|(x, _)| x.t >= mid).map(|(_, &v)| v).fold(0.0, f64::max);
    if !(c1 > 0.0 && c1.is_finite()) {
        return Err(DiagError::InsufficientDecay(format!("no admissible constant (C1 = {c1})")));
    }
    let k1 = ratio.iter().rposition(|&v| v > c1).map_or(0, |k| k + 1);
    if r.len() - k1 < MIN_TAIL {
        return Err(DiagError::InsufficientDecay("dissipation bound holds on too few samples".into()));
    }
    let params = EnvelopeParams::Exponential { c1, m };
    let phi_inv = |e: f64| {
        let hi = (e / c1).max((e / c1).powf(1.0 / q));
        bisect(|x| params.phi(x) - e, 0.0, hi, 1e-15 * hi.max(f64::MIN_POSITIVE))
    };
    let Some(period) = r.iter().skip(1).find(|x| x.total_energy + phi_inv(x.total_energy.max(0.0)) <= e0).map(|x| x.t - first.t) else {
        return Err(DiagError::InsufficientDecay("no restart period inside the run".into()));
    };
    let t = trace.times();
    let e = trace.column(|x| x.total_energy);
    let count = ((last.t - first.t) / period).floor() as usize;
    let grid: Vec<f64> = (0..=count).map(|n| n as f64).collect();
    let s = decay_envelope(e0, &params, &grid)?;
    let comparisons: Vec<(usize, f64, f64)> = (0..=count).map(|n| (n, interpolate(&t, &e, first.t + n as f64 * period), s[n])).collect();
    let holds = comparisons.iter().all(|&(_, en, sn)| en <= sn * (1.0 + 1e-12));
    Ok(EnvelopeCheck { c1, t1: r[k1].t, period, comparisons, holds })
}

fn interpolate(t: &[f64], y: &[f64], at: f64) -> f64 {
    let k = t.partition_point(|&x| x <= at);
    if k == 0 {
        return y[0];
    }
    if k == t.len() {
        return y[k - 1];
    }
    let w = (at - t[k - 1]) / (t[k] - t[k - 1]);
    (1.0 - w) * y[k - 1] + w * y[k]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::TraceRecord;

    #[test]
    fn zero_phi_is_pure_exponential() {
        let grid: Vec<f64> = (0..=50).map(|k| 0.1 * k as f64).collect();
        let s = decay_envelope(2.0, &EnvelopeParams::Exponential { c1: 0.0, m: 1.0 }, &grid).unwrap();
        for (t, v) in grid.iter().zip(&s) {
            assert!((v - 2.0 * (-t).exp()).abs() < 1e-3 * 2.0);
        }
    }

    #[test]
    fn linear_phi_matches_closed_form() {
        let c1 = 1.0;
        let grid: Vec<f64> = (0..=50).map(|k| 0.1 * k as f64).collect();
        let s = decay_envelope(1.0, &EnvelopeParams::Exponential { c1, m: 1.0 }, &grid).unwrap();
        for (t, v) in grid.iter().zip(&s) {
            assert!((v - (-t / (1.0 + 2.0 * c1)).exp()).abs() < 1e-4, "t = {t}");
        }
    }

    #[test]
    fn cubic_damping_envelope_decays_like_one_over_t() {
        let grid: Vec<f64> = (1..=4).map(|k| 100.0 * 2f64.powi(k)).collect();
        let s = decay_envelope(1.0, &EnvelopeParams::Exponential { c1: 1.0, m: 3.0 }, &grid).unwrap();
        let scaled: Vec<f64> = grid.iter().zip(&s).map(|(t, v)| t * v).collect();
        assert!(scaled.iter().all(|&x| x < 2.0), "{scaled:?}");
        let slope = (s[3] / s[2]).ln() / 2f64.ln();
        assert!((slope + 1.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn envelope_is_monotone_and_validated() {
        let p = EnvelopeParams::Polynomial { c2: 1.0, c3: 1.0, m: 1.0, sigma: 0.4, r: 1.5 };
        let grid: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let s = decay_envelope(1.0, &p, &grid).unwrap();
        assert!(s.windows(2).all(|w| w[1] <= w[0]) && s.iter().all(|&v| v >= 0.0));
        assert!(decay_envelope(0.0, &p, &grid).is_err());
        let bad = EnvelopeParams::Polynomial { c2: 1.0, c3: 1.0, m: 1.0, sigma: 0.6, r: 1.5 };
        assert!(decay_envelope(1.0, &bad, &grid).is_err());
        assert!(decay_envelope(1.0, &EnvelopeParams::Exponential { c1: -1.0, m: 1.0 }, &grid).is_err());
    }

    #[test]
    fn exponential_trace_passes_the_envelope_check() {
        // E = e^-t with all of the decay dissipated: D = 1 - E
        let trace = EnergyTrace::new(
            (0..=2000)
                .map(|k| {
                    let t = k as f64 * 0.005;
                    let e = (-t).exp();
                    TraceRecord { t, quad_energy: e, total_energy: e, memory_norm: 0.0, dissipation: 1.0 - e, i0: 0.0, grad_norm: 0.0, damp_power: 0.0, memory_dissipation: 0.0, n_prime: 0.0 }
                })
                .collect(),
        );
        let check = check_decay_envelope(&trace, 1.0).unwrap();
        assert!(check.holds, "{check:?}");
        assert!(check.comparisons.len() >= 3);
        assert!(check.c1 > 0.0 && check.period > 0.0);
    }
}
