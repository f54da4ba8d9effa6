use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// One exponential mode `c * exp(-lambda * s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PronyTerm {
    pub c: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelFamily {
    /// `mu(s) = sum c_k exp(-lambda_k s)`
    ExponentialSum { terms: Vec<PronyTerm> },
    /// `mu(s) = a (1 + s)^(-beta)`
    PowerLaw { amplitude: f64, exponent: f64 },
}

/// Decay class of a relaxation kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum DecayClass {
    /// `mu' + C mu <= 0`
    ClassI { c: f64 },
    /// `mu' + C mu^r <= 0` with `r` in (1, 2)
    ClassII { r: f64, c: f64 },
}

/// Relaxation rate density `mu = -k'` with `k(inf) = 1`, so `k(0) = 1 + int mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationKernel {
    family: KernelFamily,
    k0: f64,
}

// Relative mass allowed beyond the truncation horizon.
const TAIL_MASS: f64 = 1e-8;
// Cap for power laws with exponents close to 1.
const MAX_HORIZON: f64 = 1e15;

impl RelaxationKernel {
    pub fn new(family: KernelFamily) -> Result<Self, ModelError> {
        let mass = match &family {
            KernelFamily::ExponentialSum { terms } => {
                if terms.is_empty() {
                    return Err(ModelError::NonPositiveParameter { name: "terms.len", value: 0.0 });
                }
                for t in terms {
                    positive("c", t.c)?;
                    positive("lambda", t.lambda)?;
                }
                terms.iter().map(|t| t.c / t.lambda).sum::<f64>()
            }
            KernelFamily::PowerLaw { amplitude, exponent } => {
                positive("amplitude", *amplitude)?;
                positive("exponent", *exponent)?;
                if !(*exponent > 1.0) {
                    return Err(ModelError::NonIntegrableKernel(*exponent));
                }
                amplitude / (exponent - 1.0)
            }
        };
        Ok(Self { family, k0: 1.0 + mass })
    }

    pub fn exponential(c: f64, lambda: f64) -> Result<Self, ModelError> {
        Self::new(KernelFamily::ExponentialSum { terms: vec![PronyTerm { c, lambda }] })
    }

    pub fn exponential_sum(terms: &[(f64, f64)]) -> Result<Self, ModelError> {
        Self::new(KernelFamily::ExponentialSum {
            terms: terms.iter().map(|&(c, lambda)| PronyTerm { c, lambda }).collect(),
        })
    }

    pub fn power_law(amplitude: f64, exponent: f64) -> Result<Self, ModelError> {
        Self::new(KernelFamily::PowerLaw { amplitude, exponent })
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// `int_0^inf mu = k(0) - 1`
    pub fn mass(&self) -> f64 {
        self.k0 - 1.0
    }

    pub fn prony_terms(&self) -> Option<&[PronyTerm]> {
        match &self.family {
            KernelFamily::ExponentialSum { terms } => Some(terms),
            KernelFamily::PowerLaw { .. } => None,
        }
    }

    pub fn mu(&self, s: f64) -> f64 {
        match &self.family {
            KernelFamily::ExponentialSum { terms } => terms.iter().map(|t| t.c * (-t.lambda * s).exp()).sum(),
            KernelFamily::PowerLaw { amplitude, exponent } => amplitude * (1.0 + s).powf(-exponent),
        }
    }

    pub fn mu_prime(&self, s: f64) -> f64 {
        match &self.family {
            KernelFamily::ExponentialSum { terms } => {
                -terms.iter().map(|t| t.c * t.lambda * (-t.lambda * s).exp()).sum::<f64>()
            }
            KernelFamily::PowerLaw { amplitude, exponent } => -amplitude * exponent * (1.0 + s).powf(-exponent - 1.0),
        }
    }

    /// `int_s^inf mu`
    pub fn tail_mass(&self, s: f64) -> f64 {
        match &self.family {
            KernelFamily::ExponentialSum { terms } => terms.iter().map(|t| t.c / t.lambda * (-t.lambda * s).exp()).sum(),
            KernelFamily::PowerLaw { amplitude, exponent } => amplitude * (1.0 + s).powf(1.0 - exponent) / (exponent - 1.0),
        }
    }

    /// Truncation horizon `S` with `int_S^inf mu < 1e-8 int mu` (which also gives
    /// `mu(S) < 1e-6 mu(0)` for both families).
    pub fn horizon(&self) -> f64 {
        match &self.family {
            KernelFamily::ExponentialSum { terms } => {
                let lmin = terms.iter().map(|t| t.lambda).fold(f64::INFINITY, f64::min);
                (1.0 / TAIL_MASS).ln() / lmin
            }
            KernelFamily::PowerLaw { exponent, .. } => {
                ((1.0 / TAIL_MASS).powf(1.0 / (exponent - 1.0)) - 1.0).min(MAX_HORIZON)
            }
        }
    }

    /// Log-spaced sample points on (0, S] plus the origin.
    pub fn sample_grid(&self, count: usize) -> Vec<f64> {
        let s_max = self.horizon();
        let s_min = (s_max * 1e-9).max(1e-9);
        let ratio = (s_max / s_min).ln() / (count.max(2) - 1) as f64;
        std::iter::once(0.0).chain((0..count).map(|i| s_min * (ratio * i as f64).exp())).collect()
    }

    /// Positivity, monotonicity and vanishing-at-infinity checks on the sample grid.
    pub fn check_invariants(&self) -> Result<(), ModelError> {
        let mu0 = self.mu(0.0);
        for s in self.sample_grid(1000) {
            let m = self.mu(s);
            if !(m > 0.0) {
                return Err(ModelError::AssumptionViolated(format!("mu({s}) = {m} is not positive")));
            }
            if self.mu_prime(s) > 0.0 {
                return Err(ModelError::AssumptionViolated(format!("mu'({s}) > 0")));
            }
        }
        let s = self.horizon();
        if !(self.mu(s) < 1e-6 * mu0) {
            return Err(ModelError::AssumptionViolated("mu does not vanish at the horizon".into()));
        }
        Ok(())
    }

    /// Decay class with its constants, verified on 10^3 sampled points.
    pub fn decay_class(&self) -> Result<DecayClass, ModelError> {
        let class = match &self.family {
            KernelFamily::ExponentialSum { terms } => {
                DecayClass::ClassI { c: terms.iter().map(|t| t.lambda).fold(f64::INFINITY, f64::min) }
            }
            KernelFamily::PowerLaw { amplitude, exponent } => {
                let r = (exponent + 1.0) / exponent;
                DecayClass::ClassII { r, c: exponent * amplitude.powf(1.0 - r) }
            }
        };
        if let DecayClass::ClassII { r, .. } = class {
            if !(r > 1.0 && r < 2.0) {
                return Err(ModelError::UnclassifiableKernel);
            }
        }
        for s in self.sample_grid(1000) {
            if self.class_slack(class, s) < -1e-10 * self.mu(0.0).max(1.0) {
                return Err(ModelError::UnclassifiableKernel);
            }
        }
        Ok(class)
    }

    /// `-(mu' + C mu)` or `-(mu' + C mu^r)`; non-negative when the class inequality holds.
    pub fn class_slack(&self, class: DecayClass, s: f64) -> f64 {
        match class {
            DecayClass::ClassI { c } => -(self.mu_prime(s) + c * self.mu(s)),
            DecayClass::ClassII { r, c } => -(self.mu_prime(s) + c * self.mu(s).powf(r)),
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositiveParameter { name, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_k0() {
        assert_relative_eq!(RelaxationKernel::exponential(1.0, 1.0).unwrap().k0(), 2.0);
        assert_relative_eq!(RelaxationKernel::power_law(1.0, 2.0).unwrap().k0(), 2.0);
        assert_relative_eq!(RelaxationKernel::exponential_sum(&[(1.0, 1.0), (3.0, 2.0)]).unwrap().k0(), 3.5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(RelaxationKernel::power_law(1.0, 1.0), Err(ModelError::NonIntegrableKernel(1.0)));
        assert!(matches!(
            RelaxationKernel::exponential(-1.0, 1.0),
            Err(ModelError::NonPositiveParameter { name: "c", .. })
        ));
        assert!(RelaxationKernel::exponential(1.0, 0.0).is_err());
        assert!(RelaxationKernel::exponential_sum(&[]).is_err());
        assert!(RelaxationKernel::power_law(0.0, 2.0).is_err());
    }

    #[test]
    fn decay_classes() {
        let k = RelaxationKernel::exponential(1.0, 1.0).unwrap();
        assert_eq!(k.decay_class().unwrap(), DecayClass::ClassI { c: 1.0 });
        let k = RelaxationKernel::power_law(1.0, 2.0).unwrap();
        match k.decay_class().unwrap() {
            DecayClass::ClassII { r, c } => {
                assert_relative_eq!(r, 1.5);
                assert_relative_eq!(c, 2.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn two_mode_class_constant_is_smallest_rate() {
        // independent check: infimum of -mu'/mu over a dense grid
        let k = RelaxationKernel::exponential_sum(&[(1.0, 1.0), (1.0, 3.0)]).unwrap();
        let inf = (0..200_000)
            .map(|i| i as f64 * 1e-3)
            .map(|s| {
                let mu = (-s).exp() + (-3.0 * s).exp();
                let dmu = -(-s).exp() - 3.0 * (-3.0 * s).exp();
                -dmu / mu
            })
            .fold(f64::INFINITY, f64::min);
        assert!((inf - 1.0).abs() < 1e-6);
        assert_eq!(k.decay_class().unwrap(), DecayClass::ClassI { c: 1.0 });
    }

    #[test]
    fn horizons_capture_the_mass() {
        for k in [
            RelaxationKernel::exponential_sum(&[(1.0, 1.0), (0.5, 4.0)]).unwrap(),
            RelaxationKernel::power_law(2.0, 2.5).unwrap(),
        ] {
            let s = k.horizon();
            assert!(k.tail_mass(s) <= 1.0001e-8 * k.mass());
            assert!(k.mu(s) < 1e-6 * k.mu(0.0));
            k.check_invariants().unwrap();
        }
    }
}
