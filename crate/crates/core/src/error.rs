use thiserror::Error;

/// Problem-data validation failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("power-law kernel exponent must exceed 1 for an integrable kernel, got {0}")]
    NonIntegrableKernel(f64),
    #[error("kernel satisfies neither decay-class inequality on the sample grid")]
    UnclassifiableKernel,
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error("field has {found} entries, grid expects {expected}")]
    ShapeMismatch { expected: usize, found: usize },
}

/// Failures of the potential-well computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WellError {
    #[error("G cross-check failed: closed form {closed_form}, G(y0) = {direct}")]
    InconsistentG { closed_form: f64, direct: f64 },
    #[error("inapplicable: {0}")]
    Inapplicable(String),
    #[error("the zero field has no Nehari scaling")]
    ZeroField,
    #[error("expected {expected} embedding constants, got {found}")]
    GammaCount { expected: usize, found: usize },
}

/// Failures of the time stepper.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("time step {dt} violates the CFL bound {bound}")]
    Cfl { dt: f64, bound: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite value produced at t = {t}")]
    NonFinite { t: f64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Failures of trace diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagError {
    #[error("insufficient decay: {0}")]
    InsufficientDecay(String),
    #[error("not in a blow-up regime: {0}")]
    NotInBlowupRegime(String),
    #[error("invalid envelope parameters: {0}")]
    InvalidEnvelope(String),
}

/// Failures while turning a configuration document into a problem.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solver(#[from] SimError),
    #[error("{0}")]
    Invalid(String),
}
