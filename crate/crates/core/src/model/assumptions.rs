use serde::Serialize;

use super::kernel::RelaxationKernel;
use super::source::SourceSpec;
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClauseStatus {
    Pass,
    /// Violated, but tolerated in relaxed mode.
    Warning,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClauseCheck {
    pub clause: String,
    pub status: ClauseStatus,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub strict: bool,
    pub clauses: Vec<ClauseCheck>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.clauses.iter().all(|c| c.status == ClauseStatus::Pass)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ClauseCheck> {
        self.clauses.iter().filter(|c| c.status == ClauseStatus::Warning)
    }
}

/// Checks the standing hypotheses on source exponents, damping exponent and kernel.
///
/// The exponent caps (`p, q <= 5`, `(m+1)/m p_r < 6`, `(m+1)/m q_s < 6`) encode
/// three-dimensional embeddings; relaxed mode reports them as warnings. The
/// damping bound `m >= 1` and the kernel properties are enforced in both modes.
pub fn validate_assumptions(
    source: &SourceSpec,
    m: f64,
    kernel: &RelaxationKernel,
    strict: bool,
) -> Result<AssumptionReport, ModelError> {
    let mut clauses = Vec::new();
    let mut push = |clause: &str, ok: bool, soft: bool, detail: String| {
        let status = match (ok, soft && !strict) {
            (true, _) => ClauseStatus::Pass,
            (false, true) => ClauseStatus::Warning,
            (false, false) => ClauseStatus::Fail,
        };
        clauses.push(ClauseCheck { clause: clause.to_string(), status, detail });
    };

    let p_r = source.p_r();
    push("1 < p_1 < ... < p_r", source.p1() > 1.0, false, format!("p_1 = {}", source.p1()));
    push("p_r <= 5", p_r <= 5.0, true, format!("p_r = {p_r}"));
    if let Some(q_s) = source.q_s() {
        push("1 <= q_1 < ... < q_s", source.negative()[0].exponent >= 1.0, false, format!("q_1 = {}", source.negative()[0].exponent));
        push("q_s <= 5", q_s <= 5.0, true, format!("q_s = {q_s}"));
    }
    push("p_i != q_j", true, false, "distinct by construction".into());
    push("m >= 1", m >= 1.0, false, format!("m = {m}"));
    if m >= 1.0 {
        let lhs = (m + 1.0) / m * p_r;
        push("(m+1)/m p_r < 6", lhs < 6.0, true, format!("(m+1)/m p_r = {lhs}"));
        if let Some(q_s) = source.q_s() {
            let lhs = (m + 1.0) / m * q_s;
            push("(m+1)/m q_s < 6", lhs < 6.0, true, format!("(m+1)/m q_s = {lhs}"));
        }
    }
    let kernel_ok = kernel.check_invariants();
    push(
        "mu > 0, mu' <= 0, mu integrable, mu(inf) = 0",
        kernel_ok.is_ok(),
        false,
        kernel_ok.err().map_or_else(|| format!("k(0) = {}", kernel.k0()), |e| e.to_string()),
    );

    let report = AssumptionReport { strict, clauses };
    let failed: Vec<&str> = report
        .clauses
        .iter()
        .filter(|c| c.status == ClauseStatus::Fail)
        .map(|c| c.clause.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(ModelError::AssumptionViolated(failed.join("; ")));
    }
    for w in report.warnings() {
        log::warn!("assumption relaxed: {} ({})", w.clause, w.detail);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::source::PowerTerm;

    fn kernel() -> RelaxationKernel {
        RelaxationKernel::exponential(1.0, 1.0).unwrap()
    }

    #[test]
    fn borderline_cubic_fails_only_in_strict_mode() {
        let s = SourceSpec::single(1.0, 3.0).unwrap();
        assert!(matches!(validate_assumptions(&s, 1.0, &kernel(), true), Err(ModelError::AssumptionViolated(_))));
        let r = validate_assumptions(&s, 1.0, &kernel(), false).unwrap();
        let w: Vec<_> = r.warnings().map(|c| c.clause.clone()).collect();
        assert_eq!(w, vec!["(m+1)/m p_r < 6".to_string()]);
    }

    #[test]
    fn quadratic_damping_passes_strict() {
        let s = SourceSpec::new(vec![PowerTerm::new(1.0, 3.0)], vec![PowerTerm::new(1.0, 2.0)]).unwrap();
        let r = validate_assumptions(&s, 2.0, &kernel(), true).unwrap();
        assert!(r.all_pass());
    }

    #[test]
    fn sublinear_damping_is_always_rejected() {
        let s = SourceSpec::single(1.0, 3.0).unwrap();
        assert!(validate_assumptions(&s, 0.5, &kernel(), false).is_err());
        assert!(validate_assumptions(&s, 0.5, &kernel(), true).is_err());
    }
}
