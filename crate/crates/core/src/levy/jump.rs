//! Jump-size laws of the compound Poisson part.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, REL_TOL};
use crate::special::expint;

/// Law of a single jump. One-sided laws live on `(0, ∞)`; `TwoSided`
/// mixes an upward law with the mirror image of a downward one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpLaw {
    /// `P(J > x) = e^{-rate x}`.
    Exponential { rate: f64 },
    /// `P(J > x) = (scale / x)^index` for `x ≥ scale`.
    Pareto { index: f64, scale: f64 },
    /// `P(J > x) = e^{-alpha x} (1 + x)^{-beta}`, a member of `S_alpha` for `beta > 1`.
    GammaExp { alpha: f64, beta: f64 },
    /// Deterministic jump of size `at > 0`.
    PointMass { at: f64 },
    /// Upward jump from `up` with probability `p_up`, otherwise a downward
    /// jump whose magnitude follows `down`.
    TwoSided {
        p_up: f64,
        up: Box<JumpLaw>,
        down: Box<JumpLaw>,
    },
}

/// Exponential-moment domain `{λ : E e^{λJ} < ∞}` as an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentDomain {
    pub lower: f64,
    pub lower_closed: bool,
    pub upper: f64,
    pub upper_closed: bool,
}

impl MomentDomain {
    pub const ALL: MomentDomain = MomentDomain {
        lower: f64::NEG_INFINITY,
        lower_closed: false,
        upper: f64::INFINITY,
        upper_closed: false,
    };

    pub fn contains(&self, lambda: f64) -> bool {
        let above = lambda > self.lower || (self.lower_closed && lambda == self.lower);
        let below = lambda < self.upper || (self.upper_closed && lambda == self.upper);
        above && below
    }

    fn mirrored(self) -> MomentDomain {
        MomentDomain {
            lower: -self.upper,
            lower_closed: self.upper_closed,
            upper: -self.lower,
            upper_closed: self.lower_closed,
        }
    }

    fn intersect(self, other: MomentDomain) -> MomentDomain {
        let (lower, lower_closed) = if self.lower > other.lower {
            (self.lower, self.lower_closed)
        } else if other.lower > self.lower {
            (other.lower, other.lower_closed)
        } else {
            (self.lower, self.lower_closed && other.lower_closed)
        };
        let (upper, upper_closed) = if self.upper < other.upper {
            (self.upper, self.upper_closed)
        } else if other.upper < self.upper {
            (other.upper, other.upper_closed)
        } else {
            (self.upper, self.upper_closed && other.upper_closed)
        };
        MomentDomain {
            lower,
            lower_closed,
            upper,
            upper_closed,
        }
    }
}

impl fmt::Display for MomentDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lower_closed { '[' } else { '(' };
        let r = if self.upper_closed { ']' } else { ')' };
        let show = |v: f64| {
            if v == f64::INFINITY {
                "∞".to_string()
            } else if v == f64::NEG_INFINITY {
                "-∞".to_string()
            } else {
                format!("{v}")
            }
        };
        write!(f, "{l}{}, {}{r}", show(self.lower), show(self.upper))
    }
}

impl JumpLaw {
    pub fn validate(&self, field: &str) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    format!("{field}.{name}"),
                    format!("must be finite and > 0, got {v}"),
                ))
            }
        };
        match self {
            JumpLaw::Exponential { rate } => positive("rate", *rate),
            JumpLaw::Pareto { index, scale } => {
                positive("index", *index)?;
                positive("scale", *scale)
            }
            JumpLaw::GammaExp { alpha, beta } => {
                positive("alpha", *alpha)?;
                if !(beta.is_finite() && *beta > 1.0) {
                    return Err(Error::invalid(
                        format!("{field}.beta"),
                        format!("must be > 1 so that the law lies in S_alpha, got {beta}"),
                    ));
                }
                Ok(())
            }
            JumpLaw::PointMass { at } => positive("at", *at),
            JumpLaw::TwoSided { p_up, up, down } => {
                if !(0.0..=1.0).contains(p_up) {
                    return Err(Error::invalid(
                        format!("{field}.p_up"),
                        format!("must lie in [0, 1], got {p_up}"),
                    ));
                }
                if matches!(**up, JumpLaw::TwoSided { .. }) {
                    return Err(Error::invalid(format!("{field}.up"), "must be one-sided"));
                }
                if matches!(**down, JumpLaw::TwoSided { .. }) {
                    return Err(Error::invalid(format!("{field}.down"), "must be one-sided"));
                }
                up.validate(&format!("{field}.up"))?;
                down.validate(&format!("{field}.down"))
            }
        }
    }

    /// True when all mass sits on `(0, ∞)`.
    pub fn is_positive(&self) -> bool {
        match self {
            JumpLaw::TwoSided { p_up, .. } => *p_up == 1.0,
            _ => true,
        }
    }

    /// True when the law is concentrated on a lattice `kℤ`.
    pub fn is_lattice(&self) -> bool {
        match self {
            JumpLaw::PointMass { .. } => true,
            JumpLaw::TwoSided { p_up, up, down } => match (up.as_ref(), down.as_ref()) {
                (JumpLaw::PointMass { at: u }, JumpLaw::PointMass { at: d }) => {
                    let r = u / d;
                    (r - r.round()).abs() < 1e-12 || (1.0 / r - (1.0 / r).round()).abs() < 1e-12
                }
                (JumpLaw::PointMass { .. }, _) => *p_up == 1.0,
                (_, JumpLaw::PointMass { .. }) => *p_up == 0.0,
                _ => false,
            },
            _ => false,
        }
    }

    /// True when `P(J > x) > 0` for every `x > 0`.
    pub fn has_unbounded_upper_tail(&self) -> bool {
        match self {
            JumpLaw::PointMass { .. } => false,
            JumpLaw::TwoSided { p_up, up, .. } => *p_up > 0.0 && up.has_unbounded_upper_tail(),
            _ => true,
        }
    }

    /// `P(J > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        match self {
            JumpLaw::TwoSided { p_up, up, down } => {
                if x >= 0.0 {
                    p_up * up.tail(x)
                } else {
                    // P(J > x) = p + (1 - p) P(D < -x)
                    p_up + (1.0 - p_up) * (1.0 - down.tail_inclusive(-x))
                }
            }
            _ => {
                if x < 0.0 {
                    1.0
                } else {
                    self.ln_tail(x).exp()
                }
            }
        }
    }

    fn tail_inclusive(&self, x: f64) -> f64 {
        match self {
            JumpLaw::PointMass { at } if x == *at => 1.0,
            _ => self.tail(x),
        }
    }

    /// `ln P(J > x)` for one-sided laws and `x ≥ 0`.
    pub fn ln_tail(&self, x: f64) -> f64 {
        match self {
            JumpLaw::Exponential { rate } => -rate * x.max(0.0),
            JumpLaw::Pareto { index, scale } => {
                if x < *scale {
                    0.0
                } else {
                    index * (scale / x).ln()
                }
            }
            JumpLaw::GammaExp { alpha, beta } => {
                let x = x.max(0.0);
                -alpha * x - beta * x.ln_1p()
            }
            JumpLaw::PointMass { at } => {
                if x < *at {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            JumpLaw::TwoSided { .. } => self.tail(x).ln(),
        }
    }

    /// Density of an absolutely continuous one-sided law.
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            JumpLaw::Exponential { rate } => Some(if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() }),
            JumpLaw::Pareto { index, scale } => Some(if x < *scale {
                0.0
            } else {
                index / x * (scale / x).powf(*index)
            }),
            JumpLaw::GammaExp { alpha, beta } => Some(if x < 0.0 {
                0.0
            } else {
                (alpha + beta / (1.0 + x)) * self.ln_tail(x).exp()
            }),
            _ => None,
        }
    }

    /// Left end of the support of a one-sided law (where the density may jump).
    pub fn support_start(&self) -> f64 {
        match self {
            JumpLaw::Pareto { scale, .. } => *scale,
            JumpLaw::PointMass { at } => *at,
            _ => 0.0,
        }
    }

    /// Domain of `λ ↦ E e^{λJ}`; endpoints are decided per family.
    pub fn moment_domain(&self) -> MomentDomain {
        let upper_only = |upper: f64, upper_closed: bool| MomentDomain {
            lower: f64::NEG_INFINITY,
            lower_closed: false,
            upper,
            upper_closed,
        };
        match self {
            JumpLaw::Exponential { rate } => upper_only(*rate, false),
            JumpLaw::Pareto { .. } => upper_only(0.0, true),
            // ∫ e^{αx} dF < ∞ ⟺ β > 1, which validation enforces.
            JumpLaw::GammaExp { alpha, .. } => upper_only(*alpha, true),
            JumpLaw::PointMass { .. } => MomentDomain::ALL,
            JumpLaw::TwoSided { p_up, up, down } => {
                let mut dom = MomentDomain::ALL;
                if *p_up > 0.0 {
                    dom = dom.intersect(up.moment_domain());
                }
                if *p_up < 1.0 {
                    dom = dom.intersect(down.moment_domain().mirrored());
                }
                dom
            }
        }
    }

    fn domain_check(&self, lambda: f64) -> Result<()> {
        let dom = self.moment_domain();
        if dom.contains(lambda) {
            Ok(())
        } else {
            Err(Error::Domain {
                lambda,
                domain: dom.to_string(),
            })
        }
    }

    /// `E e^{λJ}`, closed form where available and quadrature otherwise.
    pub fn mgf(&self, lambda: f64) -> Result<f64> {
        self.domain_check(lambda)?;
        if lambda == 0.0 {
            return Ok(1.0);
        }
        if let Some(v) = self.mgf_closed_form(lambda) {
            return Ok(v);
        }
        match self {
            JumpLaw::TwoSided { p_up, up, down } => {
                let mut v = 0.0;
                if *p_up > 0.0 {
                    v += p_up * up.mgf(lambda)?;
                }
                if *p_up < 1.0 {
                    v += (1.0 - p_up) * down.mgf(-lambda)?;
                }
                Ok(v)
            }
            _ => self.mgf_quadrature(lambda),
        }
    }

    /// Closed form of `E e^{λJ}` for one-sided families (`None` if there is none).
    pub fn mgf_closed_form(&self, lambda: f64) -> Option<f64> {
        match self {
            JumpLaw::Exponential { rate } => Some(rate / (rate - lambda)),
            JumpLaw::GammaExp { alpha, beta } => {
                // E e^{λJ} = 1 + λ ∫ e^{λx} F̄(x) dx = 1 + λ e^{c} E_β(c), c = α - λ.
                let c = alpha - lambda;
                Some(1.0 + lambda * scaled_expint(*beta, c))
            }
            JumpLaw::PointMass { at } => Some((lambda * at).exp()),
            _ => None,
        }
    }

    /// `E e^{λJ} = 1 + λ ∫₀^∞ e^{λx} P(J > x) dx` by adaptive quadrature.
    pub fn mgf_quadrature(&self, lambda: f64) -> Result<f64> {
        self.domain_check(lambda)?;
        if !self.is_positive() {
            return Err(Error::UnsupportedModel(
                "quadrature route needs a one-sided law".into(),
            ));
        }
        if let JumpLaw::PointMass { at } = self {
            return Ok((lambda * at).exp());
        }
        let s = self.support_start();
        let head = if s > 0.0 {
            // P(J > x) = 1 on [0, s)
            (lambda * s).exp_m1() / lambda
        } else {
            0.0
        };
        let integral = quad::integrate_to_inf(
            |x| (lambda * x + self.ln_tail(x)).exp(),
            s,
            REL_TOL,
        )?;
        Ok(1.0 + lambda * (head + integral))
    }

    /// `E(J e^{λJ})`, the derivative of the moment generating function.
    pub fn mgf_derivative(&self, lambda: f64) -> Result<f64> {
        self.domain_check(lambda)?;
        match self {
            JumpLaw::Exponential { rate } => Ok(rate / ((rate - lambda) * (rate - lambda))),
            JumpLaw::PointMass { at } => Ok(at * (lambda * at).exp()),
            JumpLaw::GammaExp { alpha, beta } => {
                let c = alpha - lambda;
                if c == 0.0 && *beta <= 2.0 {
                    return Ok(f64::INFINITY);
                }
                let eb = scaled_expint(*beta, c);
                let ebm1 = scaled_expint(beta - 1.0, c);
                Ok(eb - lambda * (eb - ebm1))
            }
            JumpLaw::Pareto { index, scale } => {
                if lambda == 0.0 {
                    return self.mean();
                }
                // ∫₀^∞ (1 + λx) e^{λx} F̄(x) dx
                let s = *scale;
                let head = quad::integrate(|x| (1.0 + lambda * x) * (lambda * x).exp(), 0.0, s, REL_TOL)?;
                let tail = quad::integrate_to_inf(
                    |x| (1.0 + lambda * x) * (lambda * x).exp() * (s / x).powf(*index),
                    s,
                    REL_TOL,
                )?;
                Ok(head + tail)
            }
            JumpLaw::TwoSided { p_up, up, down } => {
                let mut v = 0.0;
                if *p_up > 0.0 {
                    v += p_up * up.mgf_derivative(lambda)?;
                }
                if *p_up < 1.0 {
                    v -= (1.0 - p_up) * down.mgf_derivative(-lambda)?;
                }
                Ok(v)
            }
        }
    }

    /// `E J`; errors when `E|J| = ∞`.
    pub fn mean(&self) -> Result<f64> {
        match self {
            JumpLaw::Exponential { rate } => Ok(1.0 / rate),
            JumpLaw::Pareto { index, scale } => {
                if *index <= 1.0 {
                    Err(Error::Moment(format!(
                        "pareto jumps with index {index} ≤ 1 have E|J| = ∞"
                    )))
                } else {
                    Ok(index * scale / (index - 1.0))
                }
            }
            JumpLaw::GammaExp { alpha, beta } => Ok(scaled_expint(*beta, *alpha)),
            JumpLaw::PointMass { at } => Ok(*at),
            JumpLaw::TwoSided { p_up, up, down } => {
                let mut v = 0.0;
                if *p_up > 0.0 {
                    v += p_up * up.mean()?;
                }
                if *p_up < 1.0 {
                    v -= (1.0 - p_up) * down.mean()?;
                }
                Ok(v)
            }
        }
    }

    /// `∫ₓ^∞ P(J > u) du` for a one-sided law and `x ≥ 0`.
    pub fn integrated_tail(&self, x: f64) -> Result<f64> {
        let x = x.max(0.0);
        match self {
            JumpLaw::Exponential { rate } => Ok((-rate * x).exp() / rate),
            JumpLaw::Pareto { index, scale } => {
                if *index <= 1.0 {
                    return Ok(f64::INFINITY);
                }
                let beyond = |x: f64| scale.powf(*index) * x.powf(1.0 - index) / (index - 1.0);
                if x >= *scale {
                    Ok(beyond(x))
                } else {
                    Ok(scale - x + beyond(*scale))
                }
            }
            JumpLaw::GammaExp { alpha, beta } => {
                // e^{α} ∫_{1+x}^∞ e^{-αv} v^{-β} dv = e^{-αx} (1+x)^{1-β} e^{c}E_β(c), c = α(1+x)
                let v = 1.0 + x;
                let c = alpha * v;
                Ok((-alpha * x).exp() * v.powf(1.0 - beta) * scaled_expint(*beta, c))
            }
            JumpLaw::PointMass { at } => Ok((at - x).max(0.0)),
            JumpLaw::TwoSided { p_up, up, .. } => Ok(p_up * up.integrated_tail(x)?),
        }
    }
}

/// `e^{x} E_p(x)`, finite for all `x ≥ 0` when `p > 1`.
fn scaled_expint(p: f64, x: f64) -> f64 {
    if x > 600.0 {
        // e^{x}E_p(x) = 1/(x + p/(1 + 1/(x + ...))) ; the leading terms suffice here.
        let mut acc = 0.0;
        let mut term = 1.0 / x;
        for k in 0..30 {
            acc += term;
            term *= -(p + k as f64) / x;
        }
        return acc;
    }
    x.exp() * expint(p, x)
}

/// Inverse of the cumulative hazard `x ↦ -ln P(J > x)` on a grid,
/// polished with safeguarded Newton steps.
#[derive(Debug)]
pub struct InverseTailTable {
    alpha: f64,
    beta: f64,
    hazard_grid: Vec<f64>,
    x_grid: Vec<f64>,
}

/// Points in the initial inverse-tail grid.
pub const TABLE_POINTS: usize = 4096;
/// Largest tolerated `|P(J > x̂(u)) - u|` for raw table interpolation.
pub const TABLE_TOLERANCE: f64 = 1e-4;
const HAZARD_MAX: f64 = 745.0;

impl InverseTailTable {
    /// Builds the table for `gamma_exp(alpha, beta)`, doubling the grid until
    /// linear interpolation alone meets [`TABLE_TOLERANCE`].
    pub fn gamma_exp(alpha: f64, beta: f64) -> Self {
        let mut n = TABLE_POINTS;
        loop {
            let table = Self::build(alpha, beta, n);
            if table.interpolation_error() < TABLE_TOLERANCE || n >= 1 << 22 {
                return table;
            }
            n *= 2;
        }
    }

    fn cum_hazard(&self, x: f64) -> f64 {
        self.alpha * x + self.beta * x.ln_1p()
    }

    fn hazard_rate(&self, x: f64) -> f64 {
        self.alpha + self.beta / (1.0 + x)
    }

    fn build(alpha: f64, beta: f64, n: usize) -> Self {
        // x_max with cumulative hazard ≈ HAZARD_MAX; grid log-spaced in 1 + x.
        let x_max = HAZARD_MAX / alpha;
        let step = x_max.ln_1p() / (n - 1) as f64;
        let x_grid: Vec<f64> = (0..n).map(|k| (k as f64 * step).exp_m1()).collect();
        let hazard_grid = x_grid
            .iter()
            .map(|&x| alpha * x + beta * x.ln_1p())
            .collect();
        InverseTailTable {
            alpha,
            beta,
            hazard_grid,
            x_grid,
        }
    }

    fn bracket(&self, h: f64) -> usize {
        self.hazard_grid
            .partition_point(|&g| g <= h)
            .clamp(1, self.hazard_grid.len() - 1)
    }

    /// Raw piecewise-linear interpolation of the inverse.
    pub fn interpolate(&self, h: f64) -> f64 {
        let k = self.bracket(h);
        let (h0, h1) = (self.hazard_grid[k - 1], self.hazard_grid[k]);
        let (x0, x1) = (self.x_grid[k - 1], self.x_grid[k]);
        x0 + (x1 - x0) * ((h - h0) / (h1 - h0))
    }

    /// `sup |P(J > x̂(u)) - u|` over interval midpoints.
    pub fn interpolation_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 1..self.hazard_grid.len() {
            let h = 0.5 * (self.hazard_grid[k - 1] + self.hazard_grid[k]);
            let x = self.interpolate(h);
            let err = ((-self.cum_hazard(x)).exp() - (-h).exp()).abs();
            worst = worst.max(err);
        }
        worst
    }

    /// Exact inverse: `x` with cumulative hazard `h`.
    pub fn invert(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let k = self.bracket(h);
        let (mut lo, mut hi) = if h > *self.hazard_grid.last().unwrap() {
            (self.x_grid[self.x_grid.len() - 1], h / self.alpha)
        } else {
            (self.x_grid[k - 1], self.x_grid[k])
        };
        let mut x = if h > *self.hazard_grid.last().unwrap() {
            lo
        } else {
            self.interpolate(h)
        };
        for _ in 0..60 {
            let g = self.cum_hazard(x) - h;
            if g.abs() <= 1e-14 * h.max(1.0) {
                break;
            }
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let next = x - g / self.hazard_rate(x);
            x = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
        }
        x
    }
}

/// Compiled sampler for a [`JumpLaw`].
#[derive(Debug, Clone)]
pub enum JumpSampler {
    Exponential { rate: f64 },
    Pareto { index: f64, scale: f64 },
    Numeric(Arc<InverseTailTable>),
    Point(f64),
    TwoSided {
        p_up: f64,
        up: Box<JumpSampler>,
        down: Box<JumpSampler>,
    },
}

impl JumpSampler {
    pub fn new(law: &JumpLaw) -> Self {
        match law {
            JumpLaw::Exponential { rate } => JumpSampler::Exponential { rate: *rate },
            JumpLaw::Pareto { index, scale } => JumpSampler::Pareto {
                index: *index,
                scale: *scale,
            },
            JumpLaw::GammaExp { alpha, beta } => {
                JumpSampler::Numeric(Arc::new(InverseTailTable::gamma_exp(*alpha, *beta)))
            }
            JumpLaw::PointMass { at } => JumpSampler::Point(*at),
            JumpLaw::TwoSided { p_up, up, down } => JumpSampler::TwoSided {
                p_up: *p_up,
                up: Box::new(JumpSampler::new(up)),
                down: Box::new(JumpSampler::new(down)),
            },
        }
    }

    /// Jump size whose cumulative hazard is `h` (one-sided samplers).
    pub fn from_hazard(&self, h: f64) -> f64 {
        match self {
            JumpSampler::Exponential { rate } => h / rate,
            JumpSampler::Pareto { index, scale } => scale * (h / index).exp(),
            JumpSampler::Numeric(table) => table.invert(h),
            JumpSampler::Point(x) => *x,
            JumpSampler::TwoSided { .. } => unreachable!("two-sided laws have no single hazard"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            JumpSampler::Point(x) => *x,
            JumpSampler::TwoSided { p_up, up, down } => {
                if rng.random::<f64>() < *p_up {
                    up.sample(rng)
                } else {
                    -down.sample(rng)
                }
            }
            _ => {
                let h: f64 = Exp1.sample(rng);
                self.from_hazard(h)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    const GE22: JumpLaw = JumpLaw::GammaExp {
        alpha: 2.0,
        beta: 2.0,
    };

    #[test]
    fn gamma_exp_mgf_at_the_boundary() {
        // 1 + 2 ∫ (1+x)^{-2} dx = 3
        assert_relative_eq!(GE22.mgf(2.0).unwrap(), 3.0, max_relative = 1e-13);
    }

    #[test]
    fn gamma_exp_closed_form_matches_quadrature() {
        for law in [
            GE22,
            JumpLaw::GammaExp { alpha: 1.0, beta: 1.5 },
            JumpLaw::GammaExp { alpha: 0.7, beta: 3.2 },
        ] {
            let JumpLaw::GammaExp { alpha, .. } = law else { unreachable!() };
            for frac in [-2.0, -0.5, 0.1, 0.5, 0.9, 1.0] {
                let lambda = frac * alpha;
                let closed = law.mgf_closed_form(lambda).unwrap();
                let quad = law.mgf_quadrature(lambda).unwrap();
                assert_relative_eq!(closed, quad, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn gamma_exp_moments_match_frozen_quadrature() {
        // scipy.integrate.quad: ∫ e^{-2x}(1+x)^{-2} dx and ∫ e^{-x}(1+x)^{-2} dx
        assert_relative_eq!(GE22.mean().unwrap(), 0.277_342_766_223_554_86, max_relative = 1e-11);
        assert_relative_eq!(GE22.mgf(1.0).unwrap(), 1.403_652_637_676_806, max_relative = 1e-11);
    }

    #[test]
    fn domains() {
        assert_eq!(GE22.moment_domain().to_string(), "(-∞, 2]");
        let e = JumpLaw::Exponential { rate: 1.0 };
        assert_eq!(e.moment_domain().to_string(), "(-∞, 1)");
        assert!(e.mgf(1.0).is_err());
        let p = JumpLaw::Pareto { index: 3.0, scale: 1.0 };
        assert!(p.mgf(0.1).is_err());
        assert!(p.mgf(-0.5).is_ok());
    }

    #[test]
    fn derivative_matches_central_difference() {
        for (law, lambda) in [
            (GE22, 1.0),
            (JumpLaw::Exponential { rate: 1.0 }, 0.5),
            (JumpLaw::Pareto { index: 3.0, scale: 1.0 }, -0.4),
            (JumpLaw::PointMass { at: 1.5 }, 0.3),
        ] {
            let h = 1e-5;
            let fd = (law.mgf(lambda + h).unwrap() - law.mgf(lambda - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(law.mgf_derivative(lambda).unwrap(), fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn pareto_mean_is_infinite_for_small_index() {
        let p = JumpLaw::Pareto { index: 1.0, scale: 1.0 };
        assert!(matches!(p.mean(), Err(Error::Moment(_))));
    }

    #[test]
    fn integrated_tails_match_quadrature() {
        for law in [
            GE22,
            JumpLaw::Exponential { rate: 1.3 },
            JumpLaw::Pareto { index: 3.0, scale: 1.0 },
        ] {
            for x in [0.0, 0.5, 2.0, 7.0] {
                let want = if x < law.support_start() {
                    quad::integrate(|u| law.tail(u), x, law.support_start(), 1e-12).unwrap()
                        + quad::integrate_to_inf(|u| law.tail(u), law.support_start(), 1e-12).unwrap()
                } else {
                    quad::integrate_to_inf(|u| law.tail(u), x, 1e-12).unwrap()
                };
                assert_relative_eq!(law.integrated_tail(x).unwrap(), want, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn two_sided_tail_is_a_survival_function() {
        let law = JumpLaw::TwoSided {
            p_up: 0.3,
            up: Box::new(JumpLaw::Exponential { rate: 1.0 }),
            down: Box::new(JumpLaw::PointMass { at: 2.0 }),
        };
        assert_relative_eq!(law.tail(-3.0), 1.0);
        assert_relative_eq!(law.tail(-2.0), 0.3);
        assert_relative_eq!(law.tail(-1.0), 0.3);
        assert_relative_eq!(law.tail(0.0), 0.3);
        assert_relative_eq!(law.mean().unwrap(), 0.3 - 0.7 * 2.0);
    }

    #[test]
    fn table_meets_tolerance_and_newton_is_exact() {
        let t = InverseTailTable::gamma_exp(2.0, 2.0);
        assert!(t.interpolation_error() < TABLE_TOLERANCE);
        for &h in &[1e-9, 0.01, 0.5, 3.0, 40.0, 500.0, 800.0] {
            let x = t.invert(h);
            assert_relative_eq!(t.cum_hazard(x), h, max_relative = 1e-12);
        }
    }

    #[test]
    fn sampled_tail_matches_analytic_tail() {
        let law = GE22;
        let sampler = JumpSampler::new(&law);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let mut sup: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let empirical_cdf = (i + 1) as f64 / n as f64;
            sup = sup.max((1.0 - law.tail(x) - empirical_cdf).abs());
        }
        // 99.9% Kolmogorov bound 1.95/√n
        assert!(sup < 1.95 / (n as f64).sqrt(), "KS distance {sup}");
    }
}
