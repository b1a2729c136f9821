//! Path simulation and the exponential functional `I = ∫₀^∞ e^{ξ_s} ds`.
//!
//! Pure-jump-plus-drift paths are integrated exactly segment by segment.
//! A Gaussian part is simulated on a grid of step `dt` and integrated with
//! the trapezoid rule; the grid can be refined by Brownian-bridge midpoints
//! drawn from a separate stream, so a run at `dt/2ʳ` reuses the coarse
//! increments of the run at `dt`.
//!
//! Truncation: the path is followed until it first drops `B` below its
//! starting level; the rest of the integral is `e^{ξ_τ}·I′` with `I′` an
//! independent copy, so the walk continues to the next barrier until
//! `e^{ξ_τ}·R̂ < rel_tol·Î`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::par;
use crate::rng::{self, Purpose, Stream};

/// `|bΔ|` below which a segment integral uses its series form.
pub const SERIES_THRESHOLD: f64 = 1e-8;

/// Safety factor applied to `E I` to form the default remainder cap.
pub const REMAINDER_SAFETY: f64 = 1e3;

/// Truncation and discretisation settings of the samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerControl {
    /// Barrier depth `B`.
    pub barrier: f64,
    /// Required `remainder_bound / Î`.
    pub rel_tol: f64,
    /// `R̂`; defaults to `10³·E I` when `ψ(1) < 0`.
    pub remainder_cap: Option<f64>,
    /// Coarse Gaussian grid step.
    pub dt: f64,
    /// Brownian-bridge halvings of `dt`.
    pub refinements: u32,
    /// Maximum number of barrier levels per sample.
    pub max_segments: usize,
    /// Maximum number of jumps or grid steps per sample.
    pub max_events: u64,
}

impl Default for SamplerControl {
    fn default() -> Self {
        SamplerControl {
            barrier: 25.0,
            rel_tol: 1e-6,
            remainder_cap: None,
            dt: 1e-3,
            refinements: 0,
            max_segments: 1000,
            max_events: 2_000_000_000,
        }
    }
}

impl SamplerControl {
    /// Effective Gaussian grid step `dt / 2^refinements`.
    pub fn grid_step(&self) -> f64 {
        self.dt / f64::from(1u32 << self.refinements)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.barrier.is_finite() && self.barrier > 0.0) {
            return Err(Error::invalid("barrier", "must be positive and finite"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::invalid("rel_tol", "must lie in (0, 1)"));
        }
        if let Some(r) = self.remainder_cap {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid("remainder_cap", "must be positive and finite"));
            }
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if self.refinements > 16 {
            return Err(Error::invalid("refinements", "at most 16"));
        }
        if self.max_segments == 0 {
            return Err(Error::invalid("max_segments", "must be positive"));
        }
        Ok(())
    }

    /// The cap `R̂` used for `model`.
    pub fn resolve_remainder_cap(&self, model: &LevyModel) -> Result<f64> {
        if let Some(r) = self.remainder_cap {
            return Ok(r);
        }
        match model.laplace_exponent(1.0) {
            Ok(psi) if psi < 0.0 => Ok(REMAINDER_SAFETY / -psi),
            _ => Err(Error::invalid(
                "remainder_cap",
                "E I is infinite for this model (ψ(1) ≥ 0); supply a cap",
            )),
        }
    }
}

/// A simulated path on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSkeleton {
    pub drift: f64,
    pub horizon: f64,
    pub jump_times: Vec<f64>,
    pub jump_sizes: Vec<f64>,
    pub gaussian: Option<GaussianGrid>,
}

/// Gaussian increments `σ(W_{t_{k+1}} - W_{t_k})` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianGrid {
    pub dt: f64,
    pub increments: Vec<f64>,
}

impl PathSkeleton {
    /// `Σ_{t_i ≤ t} J_i`.
    fn jumps_upto(&self, t: f64) -> f64 {
        let n = self.jump_times.partition_point(|&s| s <= t);
        self.jump_sizes[..n].iter().sum()
    }

    fn gaussian_at(&self, t: f64) -> f64 {
        let Some(g) = &self.gaussian else { return 0.0 };
        let pos = t / g.dt;
        let k = (pos.floor() as usize).min(g.increments.len());
        let base: f64 = g.increments[..k].iter().sum();
        match g.increments.get(k) {
            Some(next) => base + next * (pos - k as f64),
            None => base,
        }
    }

    /// `ξ_t`, linear between Gaussian grid points.
    pub fn value_at(&self, t: f64) -> f64 {
        self.drift * t + self.jumps_upto(t) + self.gaussian_at(t)
    }

    /// Running infimum at the jump instants, replaying the skeleton with the
    /// same arithmetic as the ladder extraction.
    pub fn infimum_before_jumps(&self) -> Vec<f64> {
        let b = self.drift;
        let mut out = Vec::with_capacity(self.jump_times.len());
        let (mut t, mut level, mut inf) = (0.0, 0.0, 0.0f64);
        for (&s, &j) in self.jump_times.iter().zip(&self.jump_sizes) {
            if level > inf && b < 0.0 {
                let back = (level - inf) / -b;
                if t + back <= s {
                    t += back;
                    level = inf;
                }
            }
            level += b * (s - t);
            inf = inf.min(level);
            out.push(inf);
            level += j;
            inf = inf.min(level);
            t = s;
        }
        out
    }
}

/// `ln ∫₀^Δ e^{bs} ds`.
pub fn ln_segment_integral(b: f64, delta: f64) -> f64 {
    let x = b * delta;
    if x.abs() < SERIES_THRESHOLD {
        delta.ln() + (0.5 * x).ln_1p()
    } else if b < 0.0 {
        (-x.exp_m1()).ln() - (-b).ln()
    } else {
        x + (-(-x).exp_m1()).ln() - b.ln()
    }
}

/// Sum of positive terms held as `s·e^m`, so that no term overflows.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSum {
    m: f64,
    s: f64,
}

impl LogSum {
    const RESCALE: f64 = 300.0;

    pub(crate) fn new() -> Self {
        LogSum { m: 0.0, s: 0.0 }
    }

    pub(crate) fn add_ln(&mut self, lc: f64) {
        if lc == f64::NEG_INFINITY {
            return;
        }
        if self.s == 0.0 {
            self.m = lc;
            self.s = 1.0;
            return;
        }
        if lc - self.m > Self::RESCALE {
            self.s *= (self.m - lc).exp();
            self.m = lc;
        }
        self.s += (lc - self.m).exp();
    }

    pub(crate) fn ln(&self) -> f64 {
        self.m + self.s.ln()
    }
}

/// Exact integral of `e^{ξ}` over `[0, t_end]` for a skeleton.
///
/// Pure-jump paths use the closed form on each linear segment; with a
/// Gaussian part the trapezoid rule runs on the grid, with jumps entering
/// at the first grid point at or after their time.
pub fn integrate_exp(path: &PathSkeleton, t_end: f64) -> f64 {
    ln_integrate_exp(path, t_end).exp()
}

/// `ln` of [`integrate_exp`].
pub fn ln_integrate_exp(path: &PathSkeleton, t_end: f64) -> f64 {
    let t_end = t_end.min(path.horizon);
    let mut acc = LogSum::new();
    match &path.gaussian {
        None => {
            let mut level = 0.0;
            let mut t = 0.0;
            for (&s, &j) in path.jump_times.iter().zip(&path.jump_sizes) {
                if s > t_end {
                    break;
                }
                if s > t {
                    acc.add_ln(level + ln_segment_integral(path.drift, s - t));
                }
                level += path.drift * (s - t) + j;
                t = s;
            }
            if t_end > t {
                acc.add_ln(level + ln_segment_integral(path.drift, t_end - t));
            }
        }
        Some(g) => {
            let mut t = 0.0;
            let mut prev = 0.0;
            let mut next_jump = 0;
            for inc in &g.increments {
                if t >= t_end {
                    break;
                }
                let h = g.dt.min(t_end - t);
                let frac = h / g.dt;
                let t1 = t + h;
                let mut jumps = 0.0;
                while next_jump < path.jump_times.len() && path.jump_times[next_jump] <= t1 {
                    jumps += path.jump_sizes[next_jump];
                    next_jump += 1;
                }
                let cur = prev + path.drift * h + inc * frac + jumps;
                acc.add_ln((0.5 * h).ln() + log_add_exp(prev, cur));
                prev = cur;
                t = t1;
            }
        }
    }
    acc.ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Draws a path on `[0, horizon]`; the Gaussian part, if any, uses step `dt`.
pub fn sample_path<R: Rng + ?Sized>(
    model: &LevyModel,
    rng: &mut R,
    horizon: f64,
    dt: f64,
) -> Result<PathSkeleton> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid("horizon", "must be positive and finite"));
    }
    let mut jump_times = Vec::new();
    let mut jump_sizes = Vec::new();
    if let Some(sampler) = model.sampler() {
        let rate = model.jump_rate();
        let mut t = 0.0;
        loop {
            let w: f64 = Exp1.sample(rng);
            t += w / rate;
            if t > horizon {
                break;
            }
            jump_times.push(t);
            jump_sizes.push(sampler.sample(rng));
        }
    }
    let gaussian = if model.gaussian_var() > 0.0 {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let n = (horizon / dt).ceil().max(1.0) as usize;
        let h = horizon / n as f64;
        let scale = (model.gaussian_var() * h).sqrt();
        let increments = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            })
            .collect();
        Some(GaussianGrid { dt: h, increments })
    } else {
        None
    };
    Ok(PathSkeleton {
        drift: model.drift(),
        horizon,
        jump_times,
        jump_sizes,
        gaussian,
    })
}

/// One draw of `I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFunctionalSample {
    /// `Î`; may overflow to `+∞` where `log_value` stays finite.
    pub value: f64,
    pub log_value: f64,
    /// `e^{ξ_τ}·R̂` at the last barrier.
    pub remainder_bound: f64,
    /// Number of barrier levels crossed.
    pub segments_used: usize,
    /// `ξ_τ` at the last barrier.
    pub final_level: f64,
}

/// State of a walk: level, elapsed time, running supremum and integral.
pub(crate) struct Walk {
    pub level: f64,
    pub time: f64,
    pub sup: f64,
    pub acc: LogSum,
    pub events: u64,
}

impl Walk {
    pub(crate) fn at(level: f64) -> Self {
        Walk {
            level,
            time: 0.0,
            sup: level,
            acc: LogSum::new(),
            events: 0,
        }
    }
}

/// Increment source for the grid of a model with a Gaussian part.
struct GaussStepper {
    drift: f64,
    sigma: f64,
    coarse: f64,
    rate: f64,
    fine: Vec<f64>,
    pos: usize,
    coarse_end: f64,
    next_jump: f64,
    aux: Stream,
}

impl GaussStepper {
    fn new<R: Rng + ?Sized>(model: &LevyModel, ctrl: &SamplerControl, rng: &mut R) -> Self {
        let mut key = [0u8; 32];
        rng.fill_bytes(&mut key);
        let aux = Stream::from_seed(key);
        let rate = model.jump_rate();
        let next_jump = if rate > 0.0 {
            let w: f64 = Exp1.sample(rng);
            w / rate
        } else {
            f64::INFINITY
        };
        let n = 1usize << ctrl.refinements;
        GaussStepper {
            drift: model.drift(),
            sigma: model.gaussian_var().sqrt(),
            coarse: ctrl.dt,
            rate,
            fine: vec![0.0; n + 1],
            pos: n,
            coarse_end: 0.0,
            next_jump,
            aux,
        }
    }

    fn fine_step(&self) -> f64 {
        self.coarse / (self.fine.len() - 1) as f64
    }

    /// Fills `fine` with the continuous part of the next coarse step.
    fn refill<R: Rng + ?Sized>(&mut self, model: &LevyModel, rng: &mut R) {
        let n = self.fine.len() - 1;
        let h = self.coarse;
        let z: f64 = StandardNormal.sample(rng);
        self.fine[0] = 0.0;
        self.fine[n] = self.drift * h + self.sigma * h.sqrt() * z;
        let mut width = n;
        let mut len = h;
        while width > 1 {
            let half = width / 2;
            let sd = self.sigma * (0.25 * len).sqrt();
            let mut a = 0;
            while a < n {
                let w: f64 = StandardNormal.sample(&mut self.aux);
                self.fine[a + half] = 0.5 * (self.fine[a] + self.fine[a + width]) + sd * w;
                a += width;
            }
            width = half;
            len *= 0.5;
        }
        self.coarse_end += h;
        let mut jumps = 0.0;
        if let Some(sampler) = model.sampler() {
            while self.next_jump <= self.coarse_end {
                jumps += sampler.sample(rng);
                let w: f64 = Exp1.sample(rng);
                self.next_jump += w / self.rate;
            }
        }
        self.fine[n] += jumps;
        self.pos = 0;
    }

    fn next_increment<R: Rng + ?Sized>(&mut self, model: &LevyModel, rng: &mut R) -> f64 {
        if self.pos + 1 >= self.fine.len() {
            self.refill(model, rng);
        }
        self.pos += 1;
        self.fine[self.pos] - self.fine[self.pos - 1]
    }
}

enum Engine {
    Jumps,
    Grid(Box<GaussStepper>),
}

impl Engine {
    fn new<R: Rng + ?Sized>(model: &LevyModel, ctrl: &SamplerControl, rng: &mut R) -> Self {
        if model.gaussian_var() > 0.0 {
            Engine::Grid(Box::new(GaussStepper::new(model, ctrl, rng)))
        } else {
            Engine::Jumps
        }
    }

    /// Advances `walk` until `ξ ≤ target`.
    fn run_to<R: Rng + ?Sized>(
        &mut self,
        model: &LevyModel,
        rng: &mut R,
        walk: &mut Walk,
        target: f64,
        max_events: u64,
    ) -> Result<()> {
        match self {
            Engine::Jumps => run_jumps(model, rng, walk, target, max_events),
            Engine::Grid(g) => run_grid(g, model, rng, walk, target, max_events),
        }
    }
}

fn exhausted(walk: &Walk, max_events: u64) -> Result<()> {
    if walk.events > max_events {
        Err(Error::NonTerminating(format!(
            "{} events without reaching the barrier (level {:.3}, time {:.3})",
            walk.events, walk.level, walk.time
        )))
    } else {
        Ok(())
    }
}

/// Event-driven walk of a drift-plus-jumps path; exact integral and exact
/// first-passage time below `target`.
pub(crate) fn run_jumps<R: Rng + ?Sized>(
    model: &LevyModel,
    rng: &mut R,
    walk: &mut Walk,
    target: f64,
    max_events: u64,
) -> Result<()> {
    let b = model.drift();
    let rate = model.jump_rate();
    let sampler = model.sampler();
    if walk.level <= target {
        return Ok(());
    }
    loop {
        let wait = match sampler {
            Some(_) => {
                let w: f64 = Exp1.sample(rng);
                w / rate
            }
            None => f64::INFINITY,
        };
        let hit = if b < 0.0 {
            (walk.level - target) / -b
        } else {
            f64::INFINITY
        };
        if hit <= wait {
            walk.acc.add_ln(walk.level + ln_segment_integral(b, hit));
            walk.time += hit;
            walk.level = target;
            return Ok(());
        }
        if !wait.is_finite() {
            return Err(Error::NonTerminating(
                "path can never reach the barrier".into(),
            ));
        }
        walk.acc.add_ln(walk.level + ln_segment_integral(b, wait));
        walk.time += wait;
        walk.level += b * wait;
        walk.sup = walk.sup.max(walk.level);
        let j = sampler.map_or(0.0, |s| s.sample(rng));
        walk.level += j;
        walk.sup = walk.sup.max(walk.level);
        walk.events += 1;
        if walk.level <= target {
            return Ok(());
        }
        exhausted(walk, max_events)?;
    }
}

fn run_grid<R: Rng + ?Sized>(
    g: &mut GaussStepper,
    model: &LevyModel,
    rng: &mut R,
    walk: &mut Walk,
    target: f64,
    max_events: u64,
) -> Result<()> {
    let half_h = 0.5 * g.fine_step();
    let h = g.fine_step();
    // Trapezoid sums in units of e^{reference}, flushed before they can overflow.
    let mut reference = walk.level;
    let mut prev = 1.0f64;
    let mut local = 0.0f64;
    while walk.level > target {
        let inc = g.next_increment(model, rng);
        let next = walk.level + inc;
        if next - reference > 300.0 {
            walk.acc.add_ln(reference + local.ln());
            prev *= (reference - next).exp();
            reference = next;
            local = 0.0;
        }
        let cur = (next - reference).exp();
        local += half_h * (prev + cur);
        prev = cur;
        walk.level = next;
        walk.time += h;
        walk.sup = walk.sup.max(next);
        walk.events += 1;
        if walk.events & 0xffff == 0 {
            exhausted(walk, max_events)?;
        }
    }
    if local > 0.0 {
        walk.acc.add_ln(reference + local.ln());
    }
    Ok(())
}

/// One draw of `I` by barrier-and-recurse truncation.
pub fn sample_exp_functional<R: Rng + ?Sized>(
    model: &LevyModel,
    rng: &mut R,
    ctrl: &SamplerControl,
) -> Result<ExpFunctionalSample> {
    let cap = ctrl.resolve_remainder_cap(model)?;
    sample_with_cap(model, rng, ctrl, cap.ln())
}

fn sample_with_cap<R: Rng + ?Sized>(
    model: &LevyModel,
    rng: &mut R,
    ctrl: &SamplerControl,
    ln_cap: f64,
) -> Result<ExpFunctionalSample> {
    let mut engine = Engine::new(model, ctrl, rng);
    let mut walk = Walk::at(0.0);
    let ln_tol = ctrl.rel_tol.ln();
    let mut segments = 0;
    loop {
        let target = walk.level - ctrl.barrier;
        engine.run_to(model, rng, &mut walk, target, ctrl.max_events)?;
        segments += 1;
        let log_value = walk.acc.ln();
        let ln_bound = walk.level + ln_cap;
        if ln_bound < ln_tol + log_value {
            return Ok(ExpFunctionalSample {
                value: log_value.exp(),
                log_value,
                remainder_bound: ln_bound.exp(),
                segments_used: segments,
                final_level: walk.level,
            });
        }
        if segments >= ctrl.max_segments {
            return Err(Error::NonTerminating(format!(
                "{segments} barrier levels without meeting rel_tol (level {:.3})",
                walk.level
            )));
        }
    }
}

/// `S_x = ∫₀^{T_x} e^{ξ_s} ds` with `T_x` the first passage below `-x`.
pub fn sample_exp_functional_upto_passage<R: Rng + ?Sized>(
    model: &LevyModel,
    x: f64,
    rng: &mut R,
    ctrl: &SamplerControl,
) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::invalid("x", "must be positive"));
    }
    let mut engine = Engine::new(model, ctrl, rng);
    let mut walk = Walk::at(0.0);
    engine.run_to(model, rng, &mut walk, -x, ctrl.max_events)?;
    Ok(walk.acc.ln().exp())
}

/// All-time supremum `sup_{t ≥ 0} ξ_t`.
///
/// The walk stops once it sits `B` below the running supremum.
pub fn sample_supremum<R: Rng + ?Sized>(
    model: &LevyModel,
    rng: &mut R,
    ctrl: &SamplerControl,
) -> Result<f64> {
    let mut engine = Engine::new(model, ctrl, rng);
    let mut walk = Walk::at(0.0);
    for _ in 0..ctrl.max_segments {
        let target = walk.sup - ctrl.barrier;
        engine.run_to(model, rng, &mut walk, target, ctrl.max_events)?;
        if walk.level <= walk.sup - ctrl.barrier {
            return Ok(walk.sup);
        }
    }
    Err(Error::NonTerminating("supremum did not settle".into()))
}

/// Draws `n` samples of `I`; sample `i` uses stream `i` of `seed`.
pub fn sample_many(
    model: &LevyModel,
    ctrl: &SamplerControl,
    seed: u64,
    n: usize,
    workers: Option<usize>,
) -> Result<Vec<ExpFunctionalSample>> {
    ctrl.validate()?;
    let ln_cap = ctrl.resolve_remainder_cap(model)?.ln();
    par::map_indices(n, workers, |i| {
        let mut rng = rng::stream(seed, Purpose::ExpFunctional, i as u64);
        sample_with_cap(model, &mut rng, ctrl, ln_cap)
    })
    .into_iter()
    .collect()
}

/// Draws `n` all-time suprema.
pub fn supremum_many(
    model: &LevyModel,
    ctrl: &SamplerControl,
    seed: u64,
    n: usize,
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    ctrl.validate()?;
    par::map_indices(n, workers, |i| {
        let mut rng = rng::stream(seed, Purpose::Supremum, i as u64);
        sample_supremum(model, &mut rng, ctrl)
    })
    .into_iter()
    .collect()
}

/// Writes `(sample_index, value, remainder_bound, segments_used)` rows.
pub fn write_samples_csv<W: Write>(
    mut out: W,
    header: &str,
    samples: &[ExpFunctionalSample],
) -> Result<()> {
    writeln!(out, "# {header}")?;
    writeln!(out, "sample_index,value,remainder_bound,segments_used")?;
    for (i, s) in samples.iter().enumerate() {
        writeln!(
            out,
            "{i},{:e},{:e},{}",
            s.value, s.remainder_bound, s.segments_used
        )?;
    }
    Ok(())
}
