//! Moments of `I`, the Cramér root, regime certificates and the tail
//! asymptotes of `I`, of the excursion measure of `Y` and of `sup ξ`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::ladder;
use crate::levy::{s_alpha_diagnostic, IntegratedTail, LevyModel};
use crate::par;
use crate::pathsim::{self, ln_segment_integral, ExpFunctionalSample, SamplerControl, Walk};
use crate::rng::{self, Purpose};
use crate::tailstats::{ks_critical_two_sample, ks_two_sample};

/// Target accuracy of the Cramér root.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// Default x-grid of the convolution-equivalence diagnostic.
pub const S_ALPHA_GRID: [f64; 4] = [5.0, 20.0, 80.0, 320.0];

/// Default x-grid of the integrated-tail subexponentiality diagnostic.
pub const MZ_GRID: [f64; 3] = [10.0, 100.0, 1000.0];

/// The law of `∫₀^∞ e^{σW_s - μs} ds = 2/(σ² G)`, `G ~ Gamma(2μ/σ², 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DufresneLaw {
    pub shape: f64,
    pub scale: f64,
}

impl DufresneLaw {
    pub fn new(gaussian_var: f64, mu: f64) -> Self {
        DufresneLaw {
            shape: 2.0 * mu / gaussian_var,
            scale: 2.0 / gaussian_var,
        }
    }

    pub fn for_model(model: &LevyModel) -> Result<Self> {
        if model.jump_rate() > 0.0 || model.gaussian_var() == 0.0 {
            return Err(Error::UnsupportedModel(
                "closed-form law needs Brownian motion with drift".into(),
            ));
        }
        Ok(DufresneLaw::new(model.gaussian_var(), -model.drift()))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            gamma_ur(self.shape, self.scale / x)
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            gamma_lr(self.shape, self.scale / x)
        }
    }

    /// `E I^γ`, finite for `γ < shape`.
    pub fn moment(&self, gamma: f64) -> f64 {
        if gamma >= self.shape {
            return f64::INFINITY;
        }
        (gamma * self.scale.ln() + ln_gamma(self.shape - gamma) - ln_gamma(self.shape)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    ProductFormula,
    RecursionWithMcBase,
    McDirect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub gamma: f64,
    pub value: f64,
    pub method: MomentMethod,
    pub stderr: f64,
}

/// Monte Carlo settings for quantities that need samples of `I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub ctrl: SamplerControl,
    pub seed: u64,
    pub samples: usize,
    pub workers: Option<usize>,
}

impl MonteCarlo {
    pub fn draw(&self, model: &LevyModel) -> Result<Vec<ExpFunctionalSample>> {
        pathsim::sample_many(model, &self.ctrl, self.seed, self.samples, self.workers)
    }
}

/// Source of the fractional base moment.
pub enum MomentSource<'a> {
    Exact,
    Samples(&'a [ExpFunctionalSample]),
    Simulate(&'a MonteCarlo),
}

fn psi_negative(model: &LevyModel, gamma: f64) -> Result<f64> {
    let psi = model.laplace_exponent(gamma)?;
    if psi >= 0.0 {
        return Err(Error::Finiteness { gamma, psi });
    }
    Ok(psi)
}

/// `∏_{k=1}^{n} (γ₀+k)/(-ψ(γ₀+k))`.
fn recursion_factor(model: &LevyModel, base: f64, steps: u32) -> Result<f64> {
    let mut f = 1.0;
    for k in 1..=steps {
        let g = base + f64::from(k);
        f *= g / -psi_negative(model, g)?;
    }
    Ok(f)
}

/// `E(I^γ)` and its standard error from samples.
pub fn mc_moment(samples: &[ExpFunctionalSample], gamma: f64) -> (f64, f64) {
    let xs: Vec<f64> = samples.iter().map(|s| (gamma * s.log_value).exp()).collect();
    par::mean_se(&xs)
}

/// `E(I^γ)`.
///
/// Integer `γ ≥ 1` uses the product formula; other `γ > 0` recurse down to
/// a Monte Carlo base moment of order `γ - ⌊γ⌋`; `γ ∈ (-1, 0)` is estimated
/// directly by Monte Carlo, and `γ = 0` is exact.
pub fn moment(model: &LevyModel, gamma: f64, source: MomentSource<'_>) -> Result<MomentResult> {
    if !(gamma > -1.0 && gamma.is_finite()) {
        return Err(Error::Domain {
            lambda: gamma,
            domain: "(-1, ∞)".into(),
        });
    }
    if gamma > 0.0 {
        psi_negative(model, gamma)?;
    }
    let exact = |value| MomentResult {
        gamma,
        value,
        method: MomentMethod::ProductFormula,
        stderr: 0.0,
    };
    if gamma == 0.0 {
        return Ok(exact(1.0));
    }
    let whole = gamma.floor();
    let base = gamma - whole;
    if base == 0.0 {
        return Ok(exact(recursion_factor(model, 0.0, whole as u32)?));
    }
    let owned;
    let samples = match source {
        MomentSource::Exact => {
            return Err(Error::Moment(format!(
                "E(I^{gamma}) needs Monte Carlo samples for its fractional part"
            )))
        }
        MomentSource::Samples(s) => s,
        MomentSource::Simulate(mc) => {
            owned = mc.draw(model)?;
            &owned[..]
        }
    };
    if gamma < 0.0 {
        let (m, se) = mc_moment(samples, gamma);
        return Ok(MomentResult {
            gamma,
            value: m,
            method: MomentMethod::McDirect,
            stderr: se,
        });
    }
    let (m, se) = mc_moment(samples, base);
    let f = recursion_factor(model, base, whole as u32)?;
    Ok(MomentResult {
        gamma,
        value: m * f,
        method: if whole == 0.0 {
            MomentMethod::McDirect
        } else {
            MomentMethod::RecursionWithMcBase
        },
        stderr: se * f,
    })
}

/// `E(I^γ)` for integer `γ` through the one-step recursion
/// `E(I^γ) = γ/(-ψ(γ)) E(I^{γ-1})`, evaluated from the top down.
pub fn moment_by_recursion(model: &LevyModel, gamma: u32) -> Result<f64> {
    if gamma == 0 {
        return Ok(1.0);
    }
    let g = f64::from(gamma);
    Ok(g / -psi_negative(model, g)? * moment_by_recursion(model, gamma - 1)?)
}

/// `E(I^{-1}) = μ = -E ξ₁`.
pub fn moment_inverse(model: &LevyModel) -> Result<f64> {
    let mu = -model
        .mean_increment()
        .map_err(|e| Error::Moment(format!("E ξ₁ undefined: {e}")))?;
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Moment(format!("μ = {mu} is not in (0, ∞)")));
    }
    Ok(mu)
}

/// The root `θ > 0` of `ψ(θ) = 0`.
pub fn cramer_root(model: &LevyModel) -> Result<f64> {
    let dom = model.exp_moment_domain();
    let psi = |l: f64| model.laplace_exponent(l);
    let mut hi = None;
    if dom.upper.is_infinite() {
        let mut x = 1.0;
        while x < 1e6 {
            if psi(x)? > 0.0 {
                hi = Some(x);
                break;
            }
            x *= 2.0;
        }
    } else if dom.upper > 0.0 {
        if dom.upper_closed {
            let p = psi(dom.upper)?;
            if p == 0.0 {
                return Ok(dom.upper);
            }
            if p > 0.0 {
                hi = Some(dom.upper);
            }
        } else {
            for k in 1..=60 {
                let x = dom.upper * (1.0 - 0.5f64.powi(k));
                if psi(x)? > 0.0 {
                    hi = Some(x);
                    break;
                }
            }
        }
    }
    let Some(mut hi) = hi else {
        return Err(Error::NoRoot { upper: dom.upper });
    };
    let mut lo = 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        let p = psi(mid)?;
        if p.abs() < ROOT_TOLERANCE || hi - lo < 1e-15 * hi {
            return Ok(mid);
        }
        if p < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `φ_ĥ(λ) = cλ` in the occupation-time normalisation (`c = d` for
/// spectrally positive jump models, `c = 1` for Brownian motion).
pub fn downward_ladder_exponent(model: &LevyModel, lambda: f64) -> Result<f64> {
    Ok(model.downward_ladder_coefficient()? * lambda)
}

/// `φ_h(-λ) := -ψ(λ)/φ_ĥ(λ)`; `φ_h(0) = μ/c`.
pub fn upward_ladder_exponent_neg(model: &LevyModel, lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return ladder::upward_ladder_exponent_at_zero(model);
    }
    Ok(-model.laplace_exponent(lambda)? / downward_ladder_exponent(model, lambda)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum RegimeClaim {
    SAlpha { alpha: f64 },
    SubexponentialMz,
    Cramer { theta: Option<f64> },
}

impl std::fmt::Display for RegimeClaim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeClaim::SAlpha { alpha } => write!(f, "s_alpha({alpha})"),
            RegimeClaim::SubexponentialMz => write!(f, "subexponential_mz"),
            RegimeClaim::Cramer { theta: Some(t) } => write!(f, "cramer({t})"),
            RegimeClaim::Cramer { theta: None } => write!(f, "cramer"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub evidence: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCertificate {
    pub regime: RegimeClaim,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl RegimeCertificate {
    fn new(regime: RegimeClaim, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.pass);
        RegimeCertificate {
            regime,
            checks,
            passed,
        }
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.as_str())
            .collect()
    }
}

fn check(name: &str, pass: bool, evidence: Vec<f64>, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        evidence,
        detail: detail.into(),
    }
}

fn non_arithmetic_check(model: &LevyModel) -> Check {
    check(
        "non_arithmetic",
        model.is_non_arithmetic(),
        vec![],
        "ξ is not concentrated on a lattice",
    )
}

/// Runs the hypothesis checks of the claimed regime.
pub fn validate_regime(model: &LevyModel, claim: RegimeClaim) -> RegimeCertificate {
    let mut checks = Vec::new();
    match claim {
        RegimeClaim::SAlpha { alpha } => {
            let law = model.jump_law().filter(|l| l.is_positive());
            checks.push(check(
                "positive_jumps_unbounded",
                law.is_some_and(|l| l.has_unbounded_upper_tail()),
                vec![model.levy_tail(1e3)],
                "Π(x, ∞) > 0 for every x",
            ));
            checks.push(non_arithmetic_check(model));
            match model.laplace_exponent(alpha) {
                Ok(p) => checks.push(check(
                    "psi_alpha_negative",
                    p < 0.0,
                    vec![p],
                    format!("ψ({alpha}) = {p}"),
                )),
                Err(e) => checks.push(check("psi_alpha_negative", false, vec![], e.to_string())),
            }
            let diag = law.map(|l| s_alpha_diagnostic(l, alpha, &S_ALPHA_GRID, 1.0));
            match diag {
                Some(Ok(d)) => {
                    let mut ev = d.shift_ratio.clone();
                    ev.extend(&d.convolution_ratio);
                    ev.push(d.shift_target);
                    ev.push(d.convolution_target);
                    checks.push(check(
                        "s_alpha_diagnostic",
                        d.converged,
                        ev,
                        "shift ratios then convolution ratios on the grid, then both targets",
                    ));
                }
                Some(Err(e)) => checks.push(check("s_alpha_diagnostic", false, vec![], e.to_string())),
                None => checks.push(check(
                    "s_alpha_diagnostic",
                    false,
                    vec![],
                    "no positive jump law",
                )),
            }
            if alpha <= 1.0 {
                let m = model.mean_increment();
                checks.push(check(
                    "finite_negative_mean",
                    m.as_ref().is_ok_and(|m| m.is_finite() && *m < 0.0),
                    m.iter().copied().collect(),
                    "E ξ₁ ∈ (-∞, 0)",
                ));
            }
        }
        RegimeClaim::SubexponentialMz => {
            let mu = moment_inverse(model);
            checks.push(check(
                "mu_positive_finite",
                mu.is_ok(),
                mu.iter().copied().collect(),
                "μ = -E ξ₁ ∈ (0, ∞)",
            ));
            match IntegratedTail::new(model)
                .and_then(|it| s_alpha_diagnostic(&it, 0.0, &MZ_GRID, 1.0))
            {
                Ok(d) => {
                    let mut ev = d.shift_ratio.clone();
                    ev.extend(&d.convolution_ratio);
                    checks.push(check(
                        "integrated_tail_subexponential",
                        d.converged,
                        ev,
                        "shift ratios then convolution ratios (targets 1 and 2)",
                    ));
                }
                Err(e) => checks.push(check(
                    "integrated_tail_subexponential",
                    false,
                    vec![],
                    e.to_string(),
                )),
            }
        }
        RegimeClaim::Cramer { theta } => {
            checks.push(non_arithmetic_check(model));
            match cramer_root(model) {
                Ok(root) => {
                    checks.push(check("root_exists", true, vec![root], format!("θ = {root}")));
                    if let Some(t) = theta {
                        checks.push(check(
                            "root_matches_claim",
                            (t - root).abs() < 1e-9 * t.max(1.0),
                            vec![t, root],
                            "claimed θ, computed θ",
                        ));
                    }
                    let d = model.laplace_exponent_derivative(root);
                    checks.push(check(
                        "psi_prime_finite",
                        d.as_ref().is_ok_and(|v| v.is_finite() && *v > 0.0),
                        d.iter().copied().collect(),
                        "E(ξ₁ e^{θξ₁}) = ψ'(θ) ∈ (0, ∞)",
                    ));
                }
                Err(e) => checks.push(check("root_exists", false, vec![], e.to_string())),
            }
        }
    }
    RegimeCertificate::new(claim, checks)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AsymptoteKind {
    /// `P(I > t) ~ E(I^α)/(-ψ(α)) Π(log t, ∞)`.
    Theorem1 { alpha: f64 },
    /// `Π_Y(y, ∞) ~ E(I^α)/φ_h(-α) Π(log y, ∞)`.
    Theorem2 { alpha: f64 },
    /// Denominator `∫_{log y}^∞ Π(u, ∞) du`; the ratio tends to 0.
    Theorem3Vanishing,
    /// `Π_Y(y, ∞) ~ E(I^{θ-1})/μ_h y^{-θ}`.
    Theorem3Power { theta: f64 },
    /// `P(I > t) ~ (1/μ) min{1, ∫_{log t}^∞ Π(u, ∞) du}`.
    Mz,
    /// `P(I > t) ~ C t^{-θ}`.
    Cramer { theta: f64 },
    /// `P(sup ξ > t) ~ φ_h(0)/φ_h(-α)² Π(t, ∞)`.
    SupTail { alpha: f64 },
}

/// A tail asymptote with its constant evaluated once.
#[derive(Debug, Clone)]
pub struct Asymptote {
    pub kind: AsymptoteKind,
    pub constant: f64,
    pub constant_se: f64,
    model: LevyModel,
}

impl Asymptote {
    pub fn eval(&self, t: f64) -> f64 {
        let m = &self.model;
        match self.kind {
            AsymptoteKind::Theorem1 { .. } | AsymptoteKind::Theorem2 { .. } => {
                self.constant * m.levy_tail(t.ln())
            }
            AsymptoteKind::Theorem3Vanishing => {
                m.integrated_levy_tail(t.ln().max(0.0)).unwrap_or(f64::NAN)
            }
            AsymptoteKind::Mz => {
                let g = m.integrated_levy_tail(t.ln().max(0.0)).unwrap_or(f64::NAN);
                self.constant * g.min(1.0)
            }
            AsymptoteKind::Theorem3Power { theta } | AsymptoteKind::Cramer { theta } => {
                self.constant * t.powf(-theta)
            }
            AsymptoteKind::SupTail { .. } => self.constant * m.levy_tail(t),
        }
    }

    /// Limit of the ratio statistic: 0 for the vanishing form, else 1.
    pub fn target(&self) -> f64 {
        match self.kind {
            AsymptoteKind::Theorem3Vanishing => 0.0,
            _ => 1.0,
        }
    }

    fn new(kind: AsymptoteKind, constant: f64, constant_se: f64, model: &LevyModel) -> Self {
        Asymptote {
            kind,
            constant,
            constant_se,
            model: model.clone(),
        }
    }
}

/// Functional tail `E(I^α)/(-ψ(α)) Π(t, ∞)` in the `S_α` regime.
pub fn asymptote_theorem1(model: &LevyModel, alpha: f64, source: MomentSource<'_>) -> Result<Asymptote> {
    let psi = psi_negative(model, alpha)?;
    let m = moment(model, alpha, source)?;
    Ok(Asymptote::new(
        AsymptoteKind::Theorem1 { alpha },
        m.value / -psi,
        m.stderr / -psi,
        model,
    ))
}

/// Excursion tail constant `E(I^α)/φ_h(-α) = E(I^α) d α/(-ψ(α))`.
pub fn asymptote_theorem2(model: &LevyModel, alpha: f64, source: MomentSource<'_>) -> Result<Asymptote> {
    let c = model.ladder_drift()?;
    let t1 = asymptote_theorem1(model, alpha, source)?;
    Ok(Asymptote::new(
        AsymptoteKind::Theorem2 { alpha },
        t1.constant * c * alpha,
        t1.constant_se * c * alpha,
        model,
    ))
}

/// `μ_h^{(θ)} = ψ'(θ)/φ_ĥ(θ)`.
pub fn mu_h_theta(model: &LevyModel, theta: f64) -> Result<f64> {
    Ok(model.laplace_exponent_derivative(theta)? / downward_ladder_exponent(model, theta)?)
}

/// Excursion tail outside `S_α`: the vanishing-ratio denominator under the subexponential
/// hypotheses, or the power law under Cramér's condition.
pub fn asymptote_theorem3(
    model: &LevyModel,
    regime: RegimeClaim,
    source: MomentSource<'_>,
) -> Result<Asymptote> {
    match regime {
        RegimeClaim::SubexponentialMz => Ok(Asymptote::new(
            AsymptoteKind::Theorem3Vanishing,
            1.0,
            0.0,
            model,
        )),
        RegimeClaim::Cramer { .. } => {
            let theta = cramer_root(model)?;
            let mu_h = mu_h_theta(model, theta)?;
            let m = moment(model, theta - 1.0, source)?;
            Ok(Asymptote::new(
                AsymptoteKind::Theorem3Power { theta },
                m.value / mu_h,
                m.stderr / mu_h,
                model,
            ))
        }
        RegimeClaim::SAlpha { .. } => Err(Error::UnsupportedModel(
            "the convolution-equivalent case is asymptote_theorem2".into(),
        )),
    }
}

/// `(1/μ) min{1, ∫_{log t}^∞ Π(u, ∞) du}`.
pub fn asymptote_mz(model: &LevyModel) -> Result<Asymptote> {
    let mu = moment_inverse(model)?;
    Ok(Asymptote::new(AsymptoteKind::Mz, 1.0 / mu, 0.0, model))
}

/// `C t^{-θ}` with `C = E(I^{θ-1})/ψ'(θ)`.
pub fn asymptote_cramer(model: &LevyModel, source: MomentSource<'_>) -> Result<Asymptote> {
    let theta = cramer_root(model)?;
    if theta > 1.0 {
        psi_negative(model, theta - 1.0)?;
    }
    let dpsi = model.laplace_exponent_derivative(theta)?;
    let m = moment(model, theta - 1.0, source)?;
    Ok(Asymptote::new(
        AsymptoteKind::Cramer { theta },
        m.value / dpsi,
        m.stderr / dpsi,
        model,
    ))
}

/// `φ_h(0)/(φ_h(-α)² φ_ĥ(α)) Π(t, ∞) = μ α/ψ(α)² Π(t, ∞)`, i.e.
/// `E(e^{α S})/(-ψ(α)) Π(t, ∞)`.
pub fn asymptote_sup_tail(model: &LevyModel, alpha: f64) -> Result<Asymptote> {
    model.ladder_drift()?;
    let psi = psi_negative(model, alpha)?;
    let mu = moment_inverse(model)?;
    Ok(Asymptote::new(
        AsymptoteKind::SupTail { alpha },
        mu * alpha / (psi * psi),
        0.0,
        model,
    ))
}

/// One draw of `(Q, M)`: the integral up to the inverse local time at
/// `t_local` and `M = e^{-ĥ_{t_local}}`, simulated from the path dynamics.
pub fn sample_q_m<R: rand::Rng + ?Sized>(
    model: &LevyModel,
    rng: &mut R,
    t_local: f64,
) -> Result<(f64, f64)> {
    use rand_distr::{Distribution, Exp1};
    let d = model.ladder_drift()?;
    let b = -d;
    let rate = model.jump_rate();
    let sampler = model.sampler();
    let mut walk = Walk::at(0.0);
    let mut inf = 0.0;
    let mut local = 0.0;
    while local < t_local {
        let wait = match sampler {
            Some(_) => {
                let w: f64 = Exp1.sample(rng);
                w / rate
            }
            None => f64::INFINITY,
        };
        if walk.level > inf {
            let back = (walk.level - inf) / d;
            let h = back.min(wait);
            walk.acc.add_ln(walk.level + ln_segment_integral(b, h));
            if back <= wait {
                walk.level = inf;
                continue;
            }
            walk.level += b * h;
        } else {
            let h = (t_local - local).min(wait);
            walk.acc.add_ln(walk.level + ln_segment_integral(b, h));
            local += h;
            walk.level += b * h;
            inf = walk.level;
            if h < wait {
                break;
            }
        }
        walk.level += sampler.map_or(0.0, |s| s.sample(rng));
        walk.events += 1;
        if walk.events > ladder::EXCURSION_SEGMENT_CAP {
            return Err(Error::NonTerminating("local time did not accumulate".into()));
        }
    }
    Ok((walk.acc.ln().exp(), inf.exp()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub n: usize,
    pub t_local: f64,
    pub ks: f64,
    pub threshold: f64,
    pub pass: bool,
    pub mean_q: f64,
    pub m: f64,
}

/// Two-sample check of `I =_d Q + M Ĩ`.
pub fn verify_random_recurrence(
    model: &LevyModel,
    ctrl: &SamplerControl,
    seed: u64,
    n: usize,
    t_local: f64,
    workers: Option<usize>,
) -> Result<RecurrenceReport> {
    model.ladder_drift()?;
    let cap = ctrl.resolve_remainder_cap(model)?;
    let ctrl = SamplerControl {
        remainder_cap: Some(cap),
        ..*ctrl
    };
    let draw = |purpose: Purpose| -> Result<Vec<f64>> {
        par::map_indices(n, workers, |i| {
            let mut r = rng::stream(seed, purpose, i as u64);
            pathsim::sample_exp_functional(model, &mut r, &ctrl).map(|s| s.value)
        })
        .into_iter()
        .collect()
    };
    let i_samples = draw(Purpose::RecurrenceI)?;
    let tilde = draw(Purpose::RecurrenceTilde)?;
    let qm: Vec<(f64, f64)> = par::map_indices(n, workers, |i| {
        let mut r = rng::stream(seed, Purpose::RecurrenceQ, i as u64);
        sample_q_m(model, &mut r, t_local)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let rhs: Vec<f64> = qm.iter().zip(&tilde).map(|((q, m), it)| q + m * it).collect();
    let ks = ks_two_sample(&i_samples, &rhs)?;
    let threshold = ks_critical_two_sample(n, n);
    let qs: Vec<f64> = qm.iter().map(|p| p.0).collect();
    Ok(RecurrenceReport {
        n,
        t_local,
        ks,
        threshold,
        pass: ks < threshold,
        mean_q: par::mean_se(&qs).0,
        m: qm.first().map_or(f64::NAN, |p| p.1),
    })
}
