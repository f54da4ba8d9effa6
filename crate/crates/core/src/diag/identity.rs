use super::trace::EnergyTrace;

/// `max_t |E(t) + D(t) - E(0)|`; zero for an empty trace.
pub fn energy_identity_residual(trace: &EnergyTrace) -> f64 {
    trace.identity_residuals().into_iter().map(f64::abs).fold(0.0, f64::max)
}

/// Observed order `log2(res(dt) / res(dt/2))` of two identity residuals.
/// `NaN` when both vanish.
pub fn convergence_order(residual_dt: f64, residual_half_dt: f64) -> f64 {
    if residual_dt == 0.0 && residual_half_dt == 0.0 {
        return f64::NAN;
    }
    (residual_dt / residual_half_dt).log2()
}

/// Cumulative trapezoid of the sampled dissipation rate
/// `||u_t||_{m+1}^{m+1} - 1/2 int mu' ||grad w||^2`.
///
/// Traces read back from CSV do not carry the rate, so the stored `D`
/// column is returned for them.
pub fn dissipation_d(trace: &EnergyTrace) -> Vec<f64> {
    let r = &trace.records;
    if r.iter().any(|x| !x.memory_dissipation.is_finite() || !x.damp_power.is_finite()) {
        return trace.column(|x| x.dissipation);
    }
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(r.len());
    for (k, x) in r.iter().enumerate() {
        if k > 0 {
            let p = &r[k - 1];
            acc += 0.5 * (x.t - p.t) * (p.damp_power + p.memory_dissipation + x.damp_power + x.memory_dissipation);
        }
        out.push(acc);
    }
    out
}

/// Largest rise of `E` above its running minimum; zero for a non-increasing trace.
pub fn max_energy_increase(trace: &EnergyTrace) -> f64 {
    let mut low = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for r in &trace.records {
        worst = worst.max(r.total_energy - low);
        low = low.min(r.total_energy);
    }
    worst
}
