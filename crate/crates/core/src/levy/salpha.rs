//! Numerical evidence for membership of a tail in the class `S_γ`:
//! `Ḡ(x - y)/Ḡ(x) → e^{γy}` and `Ḡ*²(x)/Ḡ(x) → 2 M_G`.

use serde::Serialize;

use super::jump::JumpLaw;
use super::model::LevyModel;
use crate::error::{Error, Result};
use crate::quad;

/// Relative distance from target accepted as convergence at the end of the grid.
pub const CONVERGENCE_TOLERANCE: f64 = 0.1;

/// A distribution on `[0, ∞)` described by its tail, density and atom at zero.
pub trait TailDistribution {
    /// `ln Ḡ(x)`; `-∞` where the tail vanishes.
    fn ln_tail(&self, x: f64) -> f64;
    /// Density of the absolutely continuous part on `(0, ∞)`.
    fn density(&self, x: f64) -> Option<f64>;
    /// `P(X = 0)`.
    fn atom_at_zero(&self) -> f64 {
        0.0
    }
    /// Points where the density may be discontinuous.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    /// `M = ∫ e^{γx} dG(x)`.
    fn tilted_mass(&self, gamma: f64) -> Result<f64>;
    /// `ln Ḡ*²(x)` when it is known in closed form.
    fn ln_convolution_tail(&self, _x: f64) -> Option<f64> {
        None
    }
}

impl TailDistribution for JumpLaw {
    fn ln_tail(&self, x: f64) -> f64 {
        JumpLaw::ln_tail(self, x)
    }

    fn density(&self, x: f64) -> Option<f64> {
        JumpLaw::density(self, x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.support_start()]
    }

    fn tilted_mass(&self, gamma: f64) -> Result<f64> {
        self.mgf_quadrature(gamma)
    }

    fn ln_convolution_tail(&self, x: f64) -> Option<f64> {
        match self {
            JumpLaw::PointMass { at } => Some(if x < 2.0 * at { 0.0 } else { f64::NEG_INFINITY }),
            _ => None,
        }
    }
}

/// The integrated-tail law `Ḡ(x) = min{1, ∫ₓ^∞ Π(u, ∞) du}` of a model.
pub struct IntegratedTail<'a> {
    model: &'a LevyModel,
    law: &'a JumpLaw,
}

impl<'a> IntegratedTail<'a> {
    pub fn new(model: &'a LevyModel) -> Result<Self> {
        match model.jump_law() {
            Some(law) if law.is_positive() => Ok(IntegratedTail { model, law }),
            _ => Err(Error::UnsupportedModel(
                "integrated-tail diagnostic needs positive jumps".into(),
            )),
        }
    }
}

impl TailDistribution for IntegratedTail<'_> {
    fn ln_tail(&self, x: f64) -> f64 {
        match self.model.integrated_levy_tail(x) {
            Ok(v) => v.min(1.0).ln(),
            Err(_) => f64::NAN,
        }
    }

    fn density(&self, x: f64) -> Option<f64> {
        let clipped = self.model.integrated_levy_tail(x).ok()? >= 1.0;
        Some(if clipped { 0.0 } else { self.model.levy_tail(x) })
    }

    fn atom_at_zero(&self) -> f64 {
        1.0 - self.ln_tail(0.0).exp()
    }

    fn breakpoints(&self) -> Vec<f64> {
        vec![self.law.support_start()]
    }

    fn tilted_mass(&self, gamma: f64) -> Result<f64> {
        if gamma != 0.0 {
            return Err(Error::UnsupportedModel(
                "integrated tails are only tested for subexponentiality".into(),
            ));
        }
        Ok(1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SAlphaDiagnostic {
    pub gamma: f64,
    pub y_probe: f64,
    pub x_grid: Vec<f64>,
    /// `Ḡ(x - y)/Ḡ(x)`.
    pub shift_ratio: Vec<f64>,
    /// `Ḡ*²(x)/Ḡ(x)`; `+∞` where `Ḡ(x) = 0 < Ḡ*²(x)`.
    pub convolution_ratio: Vec<f64>,
    /// `e^{γy}`.
    pub shift_target: f64,
    /// `2 M_G`.
    pub convolution_target: f64,
    pub converged: bool,
}

impl SAlphaDiagnostic {
    fn relative_gap(value: f64, target: f64) -> f64 {
        (value / target - 1.0).abs()
    }

    /// Distance of the last grid point from both targets.
    pub fn final_gaps(&self) -> (f64, f64) {
        let s = *self.shift_ratio.last().unwrap_or(&f64::NAN);
        let c = *self.convolution_ratio.last().unwrap_or(&f64::NAN);
        (
            Self::relative_gap(s, self.shift_target),
            Self::relative_gap(c, self.convolution_target),
        )
    }
}

/// `Ḡ*²(x)/Ḡ(x)` for a distribution on `[0, ∞)`.
pub fn convolution_ratio<D: TailDistribution + ?Sized>(law: &D, x: f64) -> Result<f64> {
    let ln_gx = law.ln_tail(x);
    if let Some(ln_conv) = law.ln_convolution_tail(x) {
        return Ok(match (ln_conv == f64::NEG_INFINITY, ln_gx == f64::NEG_INFINITY) {
            (true, true) => f64::NAN,
            (false, true) => f64::INFINITY,
            _ => (ln_conv - ln_gx).exp(),
        });
    }
    let p0 = law.atom_at_zero();
    if ln_gx == f64::NEG_INFINITY {
        // Ḡ*²(x) ≥ P(X₁ > x/2, X₂ > x/2) = Ḡ(x/2)².
        return Ok(if law.ln_tail(0.5 * x) > f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            f64::NAN
        });
    }
    if law.density(0.0).is_none() {
        return Err(Error::UnsupportedModel(
            "convolution diagnostic needs an absolutely continuous law".into(),
        ));
    }
    // Ḡ*²(x) = Ḡ(x)(1 + p₀) + ∫₀ˣ Ḡ(x - y) g(y) dy
    let integrand = |y: f64| {
        let g = law.density(y).unwrap_or(0.0);
        if g == 0.0 {
            0.0
        } else {
            g * (law.ln_tail(x - y) - ln_gx).exp()
        }
    };
    let mut cuts = vec![0.0, x];
    for b in law.breakpoints() {
        for c in [b, x - b] {
            if c > 0.0 && c < x {
                cuts.push(c);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut integral = 0.0;
    for w in cuts.windows(2) {
        integral += quad::integrate(integrand, w[0], w[1], 1e-9)?;
    }
    Ok(1.0 + p0 + integral)
}

/// Evaluates both ratio curves of the `S_γ` definition on `x_grid`.
pub fn s_alpha_diagnostic<D: TailDistribution + ?Sized>(
    law: &D,
    gamma: f64,
    x_grid: &[f64],
    y_probe: f64,
) -> Result<SAlphaDiagnostic> {
    let m = law.tilted_mass(gamma)?;
    let mut shift_ratio = Vec::with_capacity(x_grid.len());
    let mut conv = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let num = law.ln_tail(x - y_probe);
        let den = law.ln_tail(x);
        shift_ratio.push(if den == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            (num - den).exp()
        });
        conv.push(convolution_ratio(law, x)?);
    }
    let mut diag = SAlphaDiagnostic {
        gamma,
        y_probe,
        x_grid: x_grid.to_vec(),
        shift_ratio,
        convolution_ratio: conv,
        shift_target: (gamma * y_probe).exp(),
        convolution_target: 2.0 * m,
        converged: false,
    };
    let first_gap = SAlphaDiagnostic::relative_gap(diag.convolution_ratio[0], diag.convolution_target);
    let (shift_gap, conv_gap) = diag.final_gaps();
    diag.converged = shift_gap < CONVERGENCE_TOLERANCE
        && conv_gap < CONVERGENCE_TOLERANCE
        && conv_gap <= first_gap;
    Ok(diag)
}
