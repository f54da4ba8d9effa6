use serde::{Deserialize, Serialize};

use super::trace::EnergyTrace;
use crate::error::DiagError;
use crate::model::SourceSpec;
use crate::numerics::linear_fit;

/// Which energy gap drives the functional: `H = -E` below zero energy, or
/// `G = M - E` below the positive threshold `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlowupBase {
    NegativeEnergy,
    PositiveEnergy { m_threshold: f64 },
}

impl BlowupBase {
    pub fn gap(&self, energy: f64) -> f64 {
        match *self {
            Self::NegativeEnergy => -energy,
            Self::PositiveEnergy { m_threshold } => m_threshold - energy,
        }
    }
}

/// Upper bounds `(p_r - m)/((p_r + 1)(m + 1))` and `(p_r - 1)/(2(p_r + 1))` on alpha.
pub fn alpha_bounds(p_r: f64, m: f64) -> (f64, f64) {
    ((p_r - m) / ((p_r + 1.0) * (m + 1.0)), (p_r - 1.0) / (2.0 * (p_r + 1.0)))
}

/// Picks alpha as half its admissible supremum and the largest admissible
/// `eps <= 1` given the initial gap `h0` and `N'(0) = int u0 u1`.
pub fn choose_alpha_eps(source: &SourceSpec, m: f64, h0: f64, n0_prime: f64) -> Result<(f64, f64), DiagError> {
    let p_r = source.p_r();
    if !(p_r > m) {
        return Err(DiagError::NotInBlowupRegime(format!("p_r = {p_r} does not exceed m = {m}")));
    }
    if !(h0 > 0.0) {
        return Err(DiagError::NotInBlowupRegime(format!("initial energy gap {h0} is not positive")));
    }
    let (a, b) = alpha_bounds(p_r, m);
    let alpha = 0.5 * a.min(b);
    let eps = if n0_prime < 0.0 { (-h0.powf(1.0 - alpha) / (2.0 * n0_prime)).min(1.0) } else { 1.0 };
    Ok((alpha, eps))
}

/// `Y = gap^(1 - alpha) + eps N'` at every sample. Needs the in-memory
/// `N'` column; traces read from CSV give `NaN`.
pub fn blowup_functional(trace: &EnergyTrace, base: BlowupBase, alpha: f64, eps: f64) -> Vec<f64> {
    trace.column(|r| base.gap(r.total_energy).powf(1.0 - alpha) + eps * r.n_prime)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupDetection {
    pub blew_up: bool,
    /// Estimated blow-up time; infinite for bounded runs.
    pub t_est: f64,
    /// `None` when the run stayed bounded or no functional was supplied.
    pub concavity_ok: Option<bool>,
    /// Last sample index before the stepper stopped resolving the growth.
    pub resolved_end: usize,
    /// First sample index of the growth window.
    pub growth_start: usize,
}

/// Growth factor between consecutive samples beyond which the time step no
/// longer resolves the solution.
pub const RESOLVED_GROWTH: f64 = 1.5;
/// Identity residual, relative to `max(|E(0)|, |E(t)|)`, beyond which the
/// sampled energies are no longer trusted.
pub const RESOLVED_IDENTITY: f64 = 1e-3;
const CONCAVITY_TOL: f64 = 1e-6;

/// Index of the last sample that is still resolved: before `grad_norm`
/// first jumps by more than [`RESOLVED_GROWTH`] between samples and before
/// the energy identity drifts beyond [`RESOLVED_IDENTITY`].
pub fn resolved_end(trace: &EnergyTrace) -> usize {
    let r = &trace.records;
    let Some(first) = r.first() else { return 0 };
    let e0 = first.total_energy;
    let jump = r.windows(2).position(|w| !(w[1].grad_norm <= RESOLVED_GROWTH * w[0].grad_norm));
    let drift = r
        .iter()
        .position(|x| !((x.total_energy + x.dissipation - e0).abs() <= RESOLVED_IDENTITY * e0.abs().max(x.total_energy.abs())))
        .map(|k| k.saturating_sub(1));
    jump.into_iter().chain(drift).min().unwrap_or(r.len() - 1)
}

/// Blow-up flag, blow-up time estimate and the concavity test on
/// `Z = Y^(-alpha/(1-alpha))`.
///
/// The growth window is the last decade of resolved growth of
/// `grad_norm`. `T` is fitted there to `grad_norm ~ A (T - t)^(-beta)` by a
/// profile search in `log(T - t_last)`, with the log-log line solved exactly
/// for each candidate. Concavity requires `Z` to decrease on the whole
/// resolved window and its slopes to be non-increasing on the growth window.
pub fn detect_blowup(trace: &EnergyTrace, y: &[f64], alpha: f64, threshold: f64) -> BlowupDetection {
    let last = trace.len().saturating_sub(1);
    let blew_up = trace.last().is_some_and(|r| r.grad_norm >= threshold);
    if !blew_up {
        return BlowupDetection { blew_up, t_est: f64::INFINITY, concavity_ok: None, resolved_end: last, growth_start: last };
    }
    let end = if y.is_empty() { resolved_end(trace) } else { resolved_end(trace).min(y.len() - 1) };
    let t = trace.times();
    let g = trace.column(|r| r.grad_norm);
    let start = growth_start(&g[..=end]);
    let t_est = estimate_blowup_time(&t[start..=end], &g[start..=end]);
    if y.is_empty() {
        return BlowupDetection { blew_up, t_est, concavity_ok: None, resolved_end: end, growth_start: start };
    }

    let k = alpha / (1.0 - alpha);
    let z: Vec<f64> = y[..=end].iter().map(|v| v.powf(-k)).collect();
    let slopes: Vec<f64> = z.windows(2).zip(t.windows(2)).map(|(a, b)| (a[1] - a[0]) / (b[1] - b[0])).collect();
    let decreasing = slopes.iter().all(|&s| s < 0.0);
    let tail = &slopes[start.min(slopes.len())..];
    let scale = tail.iter().map(|s| s.abs()).fold(0.0, f64::max);
    let concave = tail.windows(2).all(|w| w[1] <= w[0] + CONCAVITY_TOL * scale);
    BlowupDetection { blew_up, t_est, concavity_ok: Some(decreasing && concave), resolved_end: end, growth_start: start }
}

/// First index of the last decade of monotone growth of `g`, keeping at
/// least five samples when available.
fn growth_start(g: &[f64]) -> usize {
    let n = g.len();
    if n == 0 {
        return 0;
    }
    let top = g[n - 1];
    let mut start = n - 1;
    while start > 0 && g[start - 1] >= top / 10.0 && g[start - 1] < g[start] {
        start -= 1;
    }
    start.min(n.saturating_sub(5))
}

/// Strictly increasing sequence.
pub fn is_strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

/// Fits `log g = log A - beta log(T - t)` over the given samples.
fn estimate_blowup_time(t: &[f64], g: &[f64]) -> f64 {
    if t.len() < 3 {
        return t.last().copied().unwrap_or(f64::NAN);
    }
    let t_last = t[t.len() - 1];
    let span = (t_last - t[0]).max(f64::EPSILON);
    let y: Vec<f64> = g.iter().map(|v| v.ln()).collect();
    let ssr = |log_delta: f64| {
        let x: Vec<f64> = t.iter().map(|s| (t_last + log_delta.exp() - s).ln()).collect();
        linear_fit(&x, &y).map_or(f64::INFINITY, |f| f.ssr)
    };
    // coarse scan, then golden section around the best bracket
    let (lo, hi) = ((1e-6 * span).ln(), (10.0 * span).ln());
    let steps = 400;
    let at = |k: usize| lo + (hi - lo) * k as f64 / steps as f64;
    let best = (0..=steps).min_by(|&a, &b| ssr(at(a)).total_cmp(&ssr(at(b)))).unwrap_or(0);
    let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(steps)));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    for _ in 0..100 {
        if ssr(c) < ssr(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    t_last + (0.5 * (a + b)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::TraceRecord;

    fn rec(t: f64, g: f64, e: f64, n_prime: f64) -> TraceRecord {
        TraceRecord {
            t,
            quad_energy: 0.0,
            total_energy: e,
            memory_norm: 0.0,
            // consistent with E(0) = -1
            dissipation: -1.0 - e,
            i0: 0.0,
            grad_norm: g,
            damp_power: 0.0,
            memory_dissipation: 0.0,
            n_prime,
        }
    }

    #[test]
    fn alpha_choices() {
        let cubic = SourceSpec::single(1.0, 3.0).unwrap();
        assert_eq!(alpha_bounds(3.0, 1.0), (0.25, 0.25));
        assert_eq!(choose_alpha_eps(&cubic, 1.0, 1.0, 0.0).unwrap(), (0.125, 1.0));
        let (a, b) = alpha_bounds(5.0, 2.0);
        assert!((a - 1.0 / 6.0).abs() < 1e-15 && (b - 1.0 / 3.0).abs() < 1e-15);
        let quintic = SourceSpec::single(1.0, 5.0).unwrap();
        assert!((choose_alpha_eps(&quintic, 2.0, 1.0, 0.0).unwrap().0 - 1.0 / 12.0).abs() < 1e-15);
        let (_, eps) = choose_alpha_eps(&cubic, 1.0, 16.0, -4.0).unwrap();
        assert_eq!(eps, 1.0);
        let (_, eps) = choose_alpha_eps(&cubic, 1.0, 1.0, -4.0).unwrap();
        assert_eq!(eps, 1.0 / 8.0);
        assert!(matches!(choose_alpha_eps(&cubic, 3.0, 1.0, 0.0), Err(DiagError::NotInBlowupRegime(_))));
        assert!(choose_alpha_eps(&cubic, 1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn bounded_runs_are_not_flagged() {
        let trace = EnergyTrace::new((0..100).map(|k| rec(k as f64 * 0.1, 1.0, -1.0, 0.0)).collect());
        let y = blowup_functional(&trace, BlowupBase::NegativeEnergy, 0.125, 1.0);
        let det = detect_blowup(&trace, &y, 0.125, 1e6);
        assert!(!det.blew_up && det.t_est.is_infinite() && det.concavity_ok.is_none());
    }

    #[test]
    fn exact_power_growth_gives_the_blowup_time() {
        // ||grad u|| = (1 - t)^-1, H = (1 - t)^-4 so Z = (1 - t)^(1/2) is concave
        let dt = 1e-3;
        let mut recs: Vec<TraceRecord> = (0..999).map(|k| {
            let t = k as f64 * dt;
            rec(t, 1.0 / (1.0 - t), -(1.0 - t).powi(-4), 0.0)
        }).collect();
        recs.push(rec(0.9995, 1e7, -1e20, 0.0));
        let trace = EnergyTrace::new(recs);
        let y = blowup_functional(&trace, BlowupBase::NegativeEnergy, 0.125, 1.0);
        let det = detect_blowup(&trace, &y, 0.125, 1e6);
        assert!(det.blew_up);
        assert!((det.t_est - 1.0).abs() < 0.01, "T_est = {}", det.t_est);
        assert_eq!(det.concavity_ok, Some(true));
        assert!(is_strictly_increasing(&y[..=det.resolved_end]));
    }

    #[test]
    fn convex_z_fails_the_concavity_test() {
        // H = (1 - t)^-16 makes Z = (1 - t)^2, convex
        let recs: Vec<TraceRecord> = (0..=990).map(|k| {
            let t = k as f64 * 1e-3;
            rec(t, if k == 990 { 1e7 } else { 1.0 / (1.0 - t) }, -(1.0 - t).powi(-16), 0.0)
        }).collect();
        let trace = EnergyTrace::new(recs);
        let y = blowup_functional(&trace, BlowupBase::NegativeEnergy, 0.125, 1.0);
        assert_eq!(detect_blowup(&trace, &y, 0.125, 1e6).concavity_ok, Some(false));
    }

    #[test]
    fn positive_energy_gap() {
        assert_eq!(BlowupBase::PositiveEnergy { m_threshold: 0.5 }.gap(0.2), 0.3);
        assert_eq!(BlowupBase::NegativeEnergy.gap(-0.2), 0.2);
    }
}
