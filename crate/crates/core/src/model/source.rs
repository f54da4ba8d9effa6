use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// `coef * |u|^(exponent - 1) * u`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTerm {
    pub coef: f64,
    pub exponent: f64,
}

impl PowerTerm {
    pub fn new(coef: f64, exponent: f64) -> Self {
        Self { coef, exponent }
    }
}

/// Combined power-type nonlinearity: amplifying terms `a_i |u|^(p_i-1) u`
/// minus absorbing terms `b_j |u|^(q_j-1) u`. Terms are kept sorted by exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceSpec {
    positive: Vec<PowerTerm>,
    negative: Vec<PowerTerm>,
}

impl SourceSpec {
    pub fn new(mut positive: Vec<PowerTerm>, mut negative: Vec<PowerTerm>) -> Result<Self, ModelError> {
        if positive.is_empty() {
            return Err(ModelError::InvalidSource("at least one amplifying term is required".into()));
        }
        for t in positive.iter().chain(&negative) {
            if !(t.coef.is_finite() && t.coef > 0.0) {
                return Err(ModelError::NonPositiveParameter { name: "coef", value: t.coef });
            }
            if !t.exponent.is_finite() {
                return Err(ModelError::InvalidSource(format!("exponent {} is not finite", t.exponent)));
            }
        }
        if let Some(t) = positive.iter().find(|t| !(t.exponent > 1.0)) {
            return Err(ModelError::InvalidSource(format!("source exponents must exceed 1, got {}", t.exponent)));
        }
        if let Some(t) = negative.iter().find(|t| !(t.exponent >= 1.0)) {
            return Err(ModelError::InvalidSource(format!("sink exponents must be at least 1, got {}", t.exponent)));
        }
        positive.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
        negative.sort_by(|a, b| a.exponent.total_cmp(&b.exponent));
        for list in [&positive, &negative] {
            if list.windows(2).any(|w| w[0].exponent == w[1].exponent) {
                return Err(ModelError::InvalidSource("exponents must be strictly increasing".into()));
            }
        }
        for p in &positive {
            if negative.iter().any(|q| q.exponent == p.exponent) {
                return Err(ModelError::InvalidSource(format!(
                    "exponent {} appears as both source and sink; merge the coefficients",
                    p.exponent
                )));
            }
        }
        Ok(Self { positive, negative })
    }

    /// Single amplifying term `a |u|^(p-1) u`.
    pub fn single(a: f64, p: f64) -> Result<Self, ModelError> {
        Self::new(vec![PowerTerm::new(a, p)], vec![])
    }

    pub fn positive(&self) -> &[PowerTerm] {
        &self.positive
    }

    pub fn negative(&self) -> &[PowerTerm] {
        &self.negative
    }

    pub fn p1(&self) -> f64 {
        self.positive[0].exponent
    }

    pub fn p_r(&self) -> f64 {
        self.positive[self.positive.len() - 1].exponent
    }

    pub fn q_s(&self) -> Option<f64> {
        self.negative.last().map(|t| t.exponent)
    }

    /// `max{p_r, q_s}`
    pub fn p0(&self) -> f64 {
        self.q_s().map_or(self.p_r(), |q| q.max(self.p_r()))
    }

    /// Number of sink exponents below `p_1`: the index `s0` with `q_{s0} < p_1 < q_{s0+1}`.
    pub fn s0(&self) -> usize {
        let p1 = self.p1();
        self.negative.iter().take_while(|t| t.exponent < p1).count()
    }

    /// Sink terms that enter the Nehari functionals.
    pub fn well_sinks(&self) -> &[PowerTerm] {
        &self.negative[..self.s0()]
    }

    pub fn f(&self, u: f64) -> f64 {
        let a = u.abs();
        let src: f64 = self.positive.iter().map(|t| t.coef * a.powf(t.exponent - 1.0)).sum();
        let snk: f64 = self.negative.iter().map(|t| t.coef * a.powf(t.exponent - 1.0)).sum();
        if a == 0.0 {
            return 0.0;
        }
        (src - snk) * u
    }

    /// Antiderivative `F(u) = int_0^u f`.
    pub fn big_f(&self, u: f64) -> f64 {
        let a = u.abs();
        let src: f64 = self.positive.iter().map(|t| t.coef * a.powf(t.exponent + 1.0) / (t.exponent + 1.0)).sum();
        let snk: f64 = self.negative.iter().map(|t| t.coef * a.powf(t.exponent + 1.0) / (t.exponent + 1.0)).sum();
        src - snk
    }
}
