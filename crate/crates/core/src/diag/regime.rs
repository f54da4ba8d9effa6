use serde::Serialize;

use super::energy::InitialEnergies;
use crate::model::{validate_assumptions, ClauseStatus, DecayClass, Model};
use crate::well::{classify_membership, WellConstants, WellLabel, WellMembership};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    /// Sinks dominate the sources: `p_r < q_s`.
    #[serde(rename = "global_sink_dominant")]
    GlobalSinkDominant,
    /// Below the well depth inside the stable set.
    #[serde(rename = "global_potential_well")]
    GlobalPotentialWell,
    #[serde(rename = "decay_case_i")]
    DecayCaseI,
    #[serde(rename = "decay_case_ii")]
    DecayCaseII,
    #[serde(rename = "decay_case_iii")]
    DecayCaseIII,
    #[serde(rename = "decay_case_iv")]
    DecayCaseIV,
    #[serde(rename = "blowup_negative_energy")]
    BlowupNegativeEnergy,
    #[serde(rename = "blowup_positive_energy")]
    BlowupPositiveEnergy,
    /// Positive energy below `M` in the unstable set.
    #[serde(rename = "blowup_unstable_set")]
    BlowupUnstableSet,
    #[serde(rename = "no_prediction")]
    NoPrediction,
}

impl Verdict {
    pub fn predicts_blowup(self) -> bool {
        matches!(self, Self::BlowupNegativeEnergy | Self::BlowupPositiveEnergy | Self::BlowupUnstableSet)
    }

    pub fn predicts_global(self) -> bool {
        !self.predicts_blowup() && self != Self::NoPrediction
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clause {
    pub clause: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictCheck {
    pub verdict: Verdict,
    pub clauses: Vec<Clause>,
    pub fires: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimePrediction {
    pub initial: InitialEnergies,
    pub membership: Option<WellMembership>,
    /// Every verdict whose clauses all pass, or `NoPrediction` alone.
    pub verdicts: Vec<Verdict>,
    pub checks: Vec<VerdictCheck>,
}

impl RegimePrediction {
    /// `Some(true)` when a blow-up result fires, `Some(false)` when a global
    /// result fires, `None` without a prediction or with conflicting ones.
    pub fn predicts_blowup(&self) -> Option<bool> {
        let blow = self.verdicts.iter().any(|v| v.predicts_blowup());
        let global = self.verdicts.iter().any(|v| v.predicts_global());
        match (blow, global) {
            (true, false) => Some(true),
            (false, true) => Some(false),
            _ => None,
        }
    }
}

fn clause(clause: &str, pass: bool, detail: String) -> Clause {
    Clause { clause: clause.to_string(), pass, detail }
}

/// Evaluates the hypotheses of every global-existence, decay and blow-up
/// result literally against the model, the grid constants and the initial
/// energies. Hypotheses are compared with the estimated depth `d` as is.
pub fn classify_regime(model: &Model, constants: &WellConstants, initial: &InitialEnergies, strict: bool) -> RegimePrediction {
    let membership = model
        .source
        .as_ref()
        .map(|s| classify_membership(&model.grid, &model.history, s, model.kernel.as_ref(), constants));
    let e0 = initial.total_energy;
    let q0 = initial.quad_energy;
    let k0 = model.k0();

    let standing = match (&model.source, model.damping_m, &model.kernel) {
        (Some(s), Some(m), Some(k)) => match validate_assumptions(s, m, k, strict) {
            Ok(rep) => {
                let failed: Vec<&str> = rep.clauses.iter().filter(|c| c.status == ClauseStatus::Fail).map(|c| c.clause.as_str()).collect();
                let warned = rep.warnings().count();
                clause(
                    "standing assumptions",
                    failed.is_empty(),
                    if failed.is_empty() { format!("hold ({warned} relaxed warnings)") } else { format!("violated: {}", failed.join("; ")) },
                )
            }
            Err(e) => clause("standing assumptions", false, e.to_string()),
        },
        _ => clause("standing assumptions", false, "model lacks a kernel, source or damping exponent".into()),
    };
    let source = model.source.as_ref();
    let p1 = source.map_or(f64::NAN, |s| s.p1());
    let p_r = source.map_or(f64::NAN, |s| s.p_r());
    let q_s = source.and_then(|s| s.q_s());
    let m = model.damping_m.unwrap_or(f64::NAN);
    let label = membership.map(|w| w.label);
    let class = model.kernel.as_ref().map(|k| k.decay_class());

    let mut checks = Vec::new();
    let mut push = |verdict: Verdict, mut clauses: Vec<Clause>| {
        clauses.insert(0, standing.clone());
        let fires = clauses.iter().all(|c| c.pass);
        checks.push(VerdictCheck { verdict, clauses, fires });
    };

    push(
        Verdict::GlobalSinkDominant,
        vec![clause("p_r < q_s", q_s.is_some_and(|q| p_r < q), format!("p_r = {p_r}, q_s = {q_s:?}"))],
    );

    let below_d = clause("E(0) < d", e0 < constants.d, format!("E(0) = {e0}, d = {}", constants.d));
    let in_w1 = clause("u0 in W1", label == Some(WellLabel::W1), format!("label {label:?}"));
    push(Verdict::GlobalPotentialWell, vec![below_d.clone(), in_w1.clone()]);

    let decay_common = [clause("quad_energy(0) <= y0", q0 <= constants.y0, format!("quad_energy(0) = {q0}, y0 = {}", constants.y0)),
        clause("E(0) < d0", e0 < constants.d0, format!("E(0) = {e0}, d0 = {}", constants.d0)),
        in_w1.clone(),
        clause("sup ||u||_{m+1} finite", m <= 5.0, format!("m = {m}; bounded by E(0) for m <= 5, an open hypothesis beyond"))];
    let class_i = clause("mu' + C mu <= 0", matches!(class, Some(Ok(DecayClass::ClassI { .. }))), format!("{class:?}"));
    let class_ii = clause("mu' + C mu^r <= 0, 1 < r < 2", matches!(class, Some(Ok(DecayClass::ClassII { .. }))), format!("{class:?}"));
    let m_one = clause("m = 1", m == 1.0, format!("m = {m}"));
    let m_gt = clause("m > 1", m > 1.0, format!("m = {m}"));
    let history_bounded = clause("sup ||grad u0(tau)|| finite", true, "constant and separable histories are bounded".into());
    for (verdict, extra) in [
        (Verdict::DecayCaseI, vec![m_one.clone(), class_i.clone()]),
        (Verdict::DecayCaseII, vec![m_gt.clone(), class_i]),
        (Verdict::DecayCaseIII, vec![m_one, class_ii.clone(), history_bounded.clone()]),
        (Verdict::DecayCaseIV, vec![m_gt, class_ii, history_bounded]),
    ] {
        push(verdict, decay_common.iter().cloned().chain(extra).collect());
    }

    let p1_k0 = clause("p1 > sqrt(k(0))", p1 > k0.sqrt(), format!("p1 = {p1}, k(0) = {k0}"));
    let pr_m = clause("p_r > m", p_r > m, format!("p_r = {p_r}, m = {m}"));
    let q_p1 = clause("q_s < p1", q_s.is_none_or(|q| q < p1), format!("q_s = {q_s:?}, p1 = {p1}"));
    push(
        Verdict::BlowupNegativeEnergy,
        vec![clause("E(0) < 0", e0 < 0.0, format!("E(0) = {e0}")), q_p1.clone(), p1_k0.clone(), pr_m.clone()],
    );
    let below_m = match constants.m_threshold {
        Some(mt) => clause("0 <= E(0) < M", (0.0..mt).contains(&e0), format!("E(0) = {e0}, M = {mt}")),
        None => clause("0 <= E(0) < M", false, "M undefined for these exponents".into()),
    };
    push(
        Verdict::BlowupPositiveEnergy,
        vec![
            below_m.clone(),
            clause("quad_energy(0) > y0", q0 > constants.y0, format!("quad_energy(0) = {q0}, y0 = {}", constants.y0)),
            q_p1.clone(),
            p1_k0.clone(),
            pr_m.clone(),
        ],
    );
    push(
        Verdict::BlowupUnstableSet,
        vec![below_m, p1_k0, q_p1, pr_m, clause("u0 in W2", label == Some(WellLabel::W2), format!("label {label:?}"))],
    );

    let mut verdicts: Vec<Verdict> = checks.iter().filter(|c| c.fires).map(|c| c.verdict).collect();
    if verdicts.is_empty() {
        verdicts.push(Verdict::NoPrediction);
    }
    RegimePrediction { initial: *initial, membership, verdicts, checks }
}
