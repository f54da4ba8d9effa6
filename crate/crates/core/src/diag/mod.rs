//! Energy functionals, identity checks, decay fits, blow-up detection and
//! regime prediction, all as pure functions of traces and model data.

mod blowup;
mod decay;
mod energy;
mod envelope;
mod identity;
mod regime;
mod trace;

pub use blowup::{
    alpha_bounds, blowup_functional, choose_alpha_eps, detect_blowup, is_strictly_increasing, resolved_end, BlowupBase,
    BlowupDetection, RESOLVED_GROWTH,
};
pub use decay::{fit_decay, DecayFit, DecayModel, MONOTONE_TOL, TRANSIENT_FRACTION};
pub use energy::{initial_energies, quad_energy, total_energy, InitialEnergies};
pub use envelope::{check_decay_envelope, decay_envelope, EnvelopeCheck, EnvelopeParams, ENVELOPE_STEP};
pub use identity::{convergence_order, dissipation_d, energy_identity_residual, max_energy_increase};
pub use regime::{classify_regime, Clause, RegimePrediction, VerdictCheck, Verdict};
pub use trace::{EnergyTrace, TraceIoError, TraceRecord, CSV_HEADER};
