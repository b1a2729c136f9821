use serde::{Deserialize, Serialize};

use super::jump::{JumpLaw, JumpSampler, MomentDomain};
use crate::error::{Error, Result};

/// JSON form of a model:
/// `{"drift": b, "gaussian_var": σ², "jump_rate": λ_J, "jump_law": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub drift: f64,
    #[serde(default)]
    pub gaussian_var: f64,
    #[serde(default)]
    pub jump_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_law: Option<JumpLaw>,
    /// Justification that the process drifts to -∞ when `E ξ₁` is undefined.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_certificate: Option<String>,
}

/// A finite-activity Lévy process `ξ_t = b t + σ W_t + Σ_{i ≤ N_t} J_i`.
///
/// The drift `b` is the expectation-semantics drift, so that
/// `ψ(λ) = bλ + σ²λ²/2 + λ_J (E e^{λJ} - 1)`. In the `(a, σ, Π)` triple
/// convention with `-iaλ` inside the characteristic exponent, `b = -a`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct LevyModel {
    spec: ModelSpec,
    sampler: Option<JumpSampler>,
}

impl TryFrom<ModelSpec> for LevyModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        LevyModel::new(spec)
    }
}

impl From<LevyModel> for ModelSpec {
    fn from(m: LevyModel) -> ModelSpec {
        m.spec
    }
}

impl PartialEq for LevyModel {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl LevyModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        if !spec.drift.is_finite() {
            return Err(Error::invalid("drift", "must be finite"));
        }
        if !(spec.gaussian_var.is_finite() && spec.gaussian_var >= 0.0) {
            return Err(Error::invalid("gaussian_var", format!("must be ≥ 0, got {}", spec.gaussian_var)));
        }
        if !(spec.jump_rate.is_finite() && spec.jump_rate >= 0.0) {
            return Err(Error::invalid("jump_rate", format!("must be ≥ 0, got {}", spec.jump_rate)));
        }
        if spec.jump_rate > 0.0 && spec.jump_law.is_none() {
            return Err(Error::invalid("jump_law", "required when jump_rate > 0"));
        }
        if let Some(law) = &spec.jump_law {
            law.validate("jump_law")?;
        }
        let sampler = match (&spec.jump_law, spec.jump_rate > 0.0) {
            (Some(law), true) => Some(JumpSampler::new(law)),
            _ => None,
        };
        let model = LevyModel { spec, sampler };
        match model.mean_increment() {
            Ok(m) if m < 0.0 => {}
            Ok(m) => {
                return Err(Error::invalid(
                    "drift",
                    format!("E ξ₁ = {m} ≥ 0, the process does not drift to -∞"),
                ))
            }
            Err(_) if model.spec.drift_certificate.is_some() => {}
            Err(e) => {
                return Err(Error::invalid(
                    "drift_certificate",
                    format!("E ξ₁ is undefined ({e}); a drift-to-−∞ certificate is required"),
                ))
            }
        }
        Ok(model)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        LevyModel::new(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.spec).expect("model spec serializes")
    }

    /// Brownian motion with drift: `b t + σ W_t`.
    pub fn brownian(drift: f64, gaussian_var: f64) -> Result<Self> {
        LevyModel::new(ModelSpec {
            drift,
            gaussian_var,
            jump_rate: 0.0,
            jump_law: None,
            drift_certificate: None,
        })
    }

    /// Drift plus compound Poisson jumps.
    pub fn compound_poisson(drift: f64, jump_rate: f64, law: JumpLaw) -> Result<Self> {
        LevyModel::new(ModelSpec {
            drift,
            gaussian_var: 0.0,
            jump_rate,
            jump_law: Some(law),
            drift_certificate: None,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn drift(&self) -> f64 {
        self.spec.drift
    }

    pub fn gaussian_var(&self) -> f64 {
        self.spec.gaussian_var
    }

    pub fn jump_rate(&self) -> f64 {
        if self.sampler.is_some() {
            self.spec.jump_rate
        } else {
            0.0
        }
    }

    pub fn jump_law(&self) -> Option<&JumpLaw> {
        if self.jump_rate() > 0.0 {
            self.spec.jump_law.as_ref()
        } else {
            None
        }
    }

    pub fn sampler(&self) -> Option<&JumpSampler> {
        self.sampler.as_ref()
    }

    /// No negative jumps.
    pub fn is_spectrally_positive(&self) -> bool {
        self.jump_law().is_none_or(JumpLaw::is_positive)
    }

    /// Not concentrated on a lattice `kℤ`.
    pub fn is_non_arithmetic(&self) -> bool {
        self.gaussian_var() > 0.0
            || self.drift() != 0.0
            || self.jump_law().is_some_and(|l| !l.is_lattice())
    }

    /// `C = {λ : E e^{λξ₁} < ∞}`.
    pub fn exp_moment_domain(&self) -> MomentDomain {
        self.jump_law()
            .map_or(MomentDomain::ALL, JumpLaw::moment_domain)
    }

    fn check_domain(&self, lambda: f64) -> Result<()> {
        let dom = self.exp_moment_domain();
        if dom.contains(lambda) {
            Ok(())
        } else {
            Err(Error::Domain {
                lambda,
                domain: dom.to_string(),
            })
        }
    }

    /// Laplace exponent `ψ(λ) = log E e^{λξ₁}`.
    pub fn laplace_exponent(&self, lambda: f64) -> Result<f64> {
        self.check_domain(lambda)?;
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let mut psi = self.drift() * lambda + 0.5 * self.gaussian_var() * lambda * lambda;
        if let Some(law) = self.jump_law() {
            psi += self.jump_rate() * (law.mgf(lambda)? - 1.0);
        }
        Ok(psi)
    }

    /// `ψ'(λ) = E(ξ₁ e^{λξ₁}) / E(e^{λξ₁})`; at a root of ψ this is `E(ξ₁ e^{λξ₁})`.
    pub fn laplace_exponent_derivative(&self, lambda: f64) -> Result<f64> {
        self.check_domain(lambda)?;
        let mut d = self.drift() + self.gaussian_var() * lambda;
        if let Some(law) = self.jump_law() {
            d += self.jump_rate() * law.mgf_derivative(lambda)?;
        }
        Ok(d)
    }

    /// `E ξ₁ = b + λ_J E J`.
    pub fn mean_increment(&self) -> Result<f64> {
        let mut m = self.drift();
        if let Some(law) = self.jump_law() {
            m += self.jump_rate() * law.mean()?;
        }
        Ok(m)
    }

    /// `Π(x, ∞) = λ_J P(J > x)`, for `x > 0`.
    pub fn levy_tail(&self, x: f64) -> f64 {
        self.jump_law()
            .map_or(0.0, |law| self.jump_rate() * law.tail(x.max(0.0)))
    }

    /// `ln Π(x, ∞)` for `x > 0` (−∞ when the tail vanishes).
    pub fn ln_levy_tail(&self, x: f64) -> f64 {
        match self.jump_law() {
            Some(law) if law.is_positive() => self.jump_rate().ln() + law.ln_tail(x.max(0.0)),
            Some(_) => self.levy_tail(x).ln(),
            None => f64::NEG_INFINITY,
        }
    }

    /// `∫ₓ^∞ Π(u, ∞) du`.
    pub fn integrated_levy_tail(&self, x: f64) -> Result<f64> {
        match self.jump_law() {
            Some(law) => Ok(self.jump_rate() * law.integrated_tail(x)?),
            None => Ok(0.0),
        }
    }

    /// Rate `d = -b` at which the running infimum decreases while ξ sits on it,
    /// for spectrally positive finite-activity models without a Gaussian part.
    pub fn ladder_drift(&self) -> Result<f64> {
        if self.gaussian_var() > 0.0 {
            return Err(Error::UnsupportedModel(
                "local time at the infimum is not occupation time when σ² > 0".into(),
            ));
        }
        if !self.is_spectrally_positive() {
            return Err(Error::UnsupportedModel(
                "downward ladder is a pure drift only without negative jumps".into(),
            ));
        }
        if self.drift() >= 0.0 {
            return Err(Error::UnsupportedModel(format!(
                "drift b = {} must be negative",
                self.drift()
            )));
        }
        Ok(-self.drift())
    }

    /// Coefficient `c` of the downward ladder exponent `φ_ĥ(λ) = c λ`.
    ///
    /// Spectrally positive jump models use the occupation-time local time,
    /// so `c = d = -b`; Brownian motion with drift uses `c = 1`.
    pub fn downward_ladder_coefficient(&self) -> Result<f64> {
        if self.jump_rate() == 0.0 && self.gaussian_var() > 0.0 {
            return Ok(1.0);
        }
        self.ladder_drift()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ge22() -> LevyModel {
        LevyModel::compound_poisson(-1.0, 0.5, JumpLaw::GammaExp { alpha: 2.0, beta: 2.0 }).unwrap()
    }

    #[test]
    fn brownian_exponent() {
        let m = LevyModel::brownian(-2.0, 2.0).unwrap();
        assert_eq!(m.laplace_exponent(1.0).unwrap(), -1.0);
        assert_eq!(m.laplace_exponent(0.0).unwrap(), 0.0);
        assert_eq!(m.mean_increment().unwrap(), -2.0);
        assert_eq!(m.exp_moment_domain().to_string(), "(-∞, ∞)");
        assert_eq!(m.levy_tail(3.0), 0.0);
    }

    #[test]
    fn gamma_exp_model_values() {
        let m = ge22();
        assert_relative_eq!(m.laplace_exponent(2.0).unwrap(), -1.0, max_relative = 1e-13);
        assert_eq!(m.exp_moment_domain().to_string(), "(-∞, 2]");
        assert!(matches!(m.laplace_exponent(2.01), Err(Error::Domain { .. })));
        assert_relative_eq!(m.levy_tail(1e-300), 0.5, max_relative = 1e-12);
        assert_relative_eq!(m.levy_tail(1.0), 0.016_916_910_404_576_59, max_relative = 1e-12);
        // -1 + 0.5 · 0.27734276622355486 (scipy quadrature)
        assert_relative_eq!(m.mean_increment().unwrap(), -0.861_328_616_888_222_6, max_relative = 1e-11);
    }

    #[test]
    fn exponential_jump_model() {
        let m = LevyModel::compound_poisson(-1.0, 0.5, JumpLaw::Exponential { rate: 1.0 }).unwrap();
        assert_eq!(m.mean_increment().unwrap(), -0.5);
        assert_eq!(m.exp_moment_domain().to_string(), "(-∞, 1)");
        // ψ'(λ) = -1 + 0.5/(1-λ)²
        assert_relative_eq!(m.laplace_exponent_derivative(0.5).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn rejects_models_that_do_not_drift_down() {
        let err = LevyModel::compound_poisson(-0.2, 0.5, JumpLaw::Exponential { rate: 1.0 }).unwrap_err();
        assert!(matches!(err, Error::Validation { ref field, .. } if field == "drift"));
    }

    #[test]
    fn infinite_mean_needs_certificate() {
        let law = JumpLaw::Pareto { index: 0.8, scale: 1.0 };
        let spec = ModelSpec {
            drift: -1.0,
            gaussian_var: 0.0,
            jump_rate: 0.1,
            jump_law: Some(law),
            drift_certificate: None,
        };
        assert!(matches!(
            LevyModel::new(spec.clone()),
            Err(Error::Validation { ref field, .. }) if field == "drift_certificate"
        ));
        let certified = ModelSpec {
            drift_certificate: Some("checked externally".into()),
            ..spec
        };
        assert!(LevyModel::new(certified).is_ok());
    }

    #[test]
    fn json_round_trip_and_field_errors() {
        let text = r#"{"drift": -1, "jump_rate": 0.5, "jump_law": {"kind": "gamma_exp", "alpha": 2, "beta": 2}}"#;
        let m = LevyModel::from_json(text).unwrap();
        let back = LevyModel::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);

        let bad = r#"{"drift": -1, "jump_rate": 0.5, "jump_law": {"kind": "gamma_exp", "alpha": 2, "beta": 0.5}}"#;
        match LevyModel::from_json(bad) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "jump_law.beta"),
            other => panic!("unexpected {other:?}"),
        }
        let missing = r#"{"drift": -1, "jump_rate": 0.5}"#;
        match LevyModel::from_json(missing) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "jump_law"),
            other => panic!("unexpected {other:?}"),
        }
        let negative = r#"{"drift": -1, "gaussian_var": -2}"#;
        match LevyModel::from_json(negative) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "gaussian_var"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(LevyModel::from_json(r#"{"gaussian_var": 1}"#)
            .unwrap_err()
            .to_string()
            .contains("drift"));
    }

    #[test]
    fn derivative_at_zero_matches_mean() {
        for m in [
            ge22(),
            LevyModel::brownian(-2.0, 2.0).unwrap(),
            LevyModel::compound_poisson(-2.0, 0.5, JumpLaw::Pareto { index: 3.0, scale: 1.0 }).unwrap(),
        ] {
            let h = 1e-5;
            let fd = (m.laplace_exponent(h).unwrap_or(f64::NAN) - m.laplace_exponent(-h).unwrap()) / (2.0 * h);
            let mean = m.mean_increment().unwrap();
            if fd.is_finite() {
                assert_relative_eq!(fd, mean, max_relative = 1e-6);
            }
            assert_relative_eq!(m.laplace_exponent_derivative(0.0).unwrap(), mean, max_relative = 1e-9);
        }
    }
}
