//! Downward ladder decomposition of spectrally positive drift-plus-jump
//! paths, excursion-area tails and the renewal tail of the upward ladder.
//!
//! Local time at the infimum is the occupation time at the infimum, so the
//! inverse local time has drift 1, the ladder height is `ĥ_u = d·u` with
//! `d = -b`, and `Y_u = u + Σ` (excursion areas up to local time `u`).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::par;
use crate::pathsim::{self, integrate_exp, ln_segment_integral, LogSum, PathSkeleton, SamplerControl, Walk};
use crate::rng::{self, Purpose};
use crate::tailstats::{clopper_pearson, SortedSample, CI_LEVEL};

/// Cap on drift segments per simulated excursion.
pub const EXCURSION_SEGMENT_CAP: u64 = 1_000_000;

/// A stretch of real time spent at the running infimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderStretch {
    pub time: f64,
    pub local_time: f64,
    pub duration: f64,
    pub level: f64,
}

/// An excursion above the running infimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    pub time: f64,
    pub local_time: f64,
    /// Infimum at the start, `i = -ĥ`.
    pub start_level: f64,
    pub duration: f64,
    /// `∫₀^ζ e^{ε(u)} du`.
    pub area: f64,
    /// False when the horizon cut the excursion short.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderDecomposition {
    /// `d = -b`.
    pub ladder_drift: f64,
    pub horizon: f64,
    pub stretches: Vec<LadderStretch>,
    pub excursions: Vec<ExcursionRecord>,
    pub total_local_time: f64,
}

impl LadderDecomposition {
    /// `ΔL̂⁻¹` per stretch, then per excursion.
    pub fn ladder_time_increments(&self) -> Vec<f64> {
        self.stretches
            .iter()
            .map(|s| s.duration)
            .chain(self.excursions.iter().map(|e| e.duration))
            .collect()
    }

    /// `Δĥ = d·Δu` per stretch.
    pub fn ladder_height_increments(&self) -> Vec<f64> {
        self.stretches
            .iter()
            .map(|s| self.ladder_drift * s.duration)
            .collect()
    }

    /// `ΔY`: drift `Δu` per stretch, then the area of each complete excursion.
    pub fn y_increments(&self) -> Vec<f64> {
        self.stretches
            .iter()
            .map(|s| s.duration)
            .chain(self.excursions.iter().filter(|e| e.complete).map(|e| e.area))
            .collect()
    }

    fn complete(&self) -> impl Iterator<Item = &ExcursionRecord> {
        self.excursions.iter().filter(|e| e.complete)
    }

    /// Right-continuous inverse local time `L̂⁻¹_u`.
    pub fn inverse_local_time(&self, u: f64) -> f64 {
        u + self
            .complete()
            .filter(|e| e.local_time <= u)
            .map(|e| e.duration)
            .sum::<f64>()
    }

    /// `∫₀^u e^{-ĥ_{v-}} dY_v`.
    pub fn y_integral(&self, u: f64) -> f64 {
        let d = self.ladder_drift;
        let drift_part = (-d * u).exp_m1() / -d;
        let jump_part: f64 = self
            .complete()
            .filter(|e| e.local_time <= u)
            .map(|e| (-d * e.local_time).exp() * e.area)
            .sum();
        drift_part + jump_part
    }
}

struct OpenExcursion {
    time: f64,
    local_time: f64,
    start_level: f64,
    area: LogSum,
}

/// Splits a path into ladder stretches and excursions above the infimum.
pub fn extract_ladder(model: &LevyModel, path: &PathSkeleton) -> Result<LadderDecomposition> {
    let d = model.ladder_drift()?;
    if path.gaussian.is_some() {
        return Err(Error::UnsupportedModel("path has a Gaussian part".into()));
    }
    let b = -d;
    let mut stretches = Vec::new();
    let mut excursions = Vec::new();
    let mut t = 0.0;
    let mut level = 0.0;
    let mut inf = 0.0f64;
    let mut local = 0.0;
    let mut open: Option<OpenExcursion> = None;

    let mut advance = |until: f64,
                       t: &mut f64,
                       level: &mut f64,
                       inf: &mut f64,
                       local: &mut f64,
                       open: &mut Option<OpenExcursion>| {
        if let Some(ex) = open.as_mut() {
            let back = (*level - *inf) / d;
            if *t + back <= until {
                ex.area.add_ln((*level - *inf) + ln_segment_integral(b, back));
                let end = *t + back;
                excursions.push(ExcursionRecord {
                    time: ex.time,
                    local_time: ex.local_time,
                    start_level: ex.start_level,
                    duration: end - ex.time,
                    area: ex.area.ln().exp(),
                    complete: true,
                });
                *open = None;
                *t = end;
                *level = *inf;
            } else {
                let h = until - *t;
                if h > 0.0 {
                    ex.area.add_ln((*level - *inf) + ln_segment_integral(b, h));
                }
                *level += b * h;
                *t = until;
                return;
            }
        }
        let h = until - *t;
        if h > 0.0 {
            stretches.push(LadderStretch {
                time: *t,
                local_time: *local,
                duration: h,
                level: *level,
            });
            *local += h;
            *level += b * h;
            *inf = *level;
        }
        *t = until;
    };

    for (&s, &j) in path.jump_times.iter().zip(&path.jump_sizes) {
        if s > path.horizon {
            break;
        }
        advance(s, &mut t, &mut level, &mut inf, &mut local, &mut open);
        if open.is_none() {
            open = Some(OpenExcursion {
                time: s,
                local_time: local,
                start_level: inf,
                area: LogSum::new(),
            });
        }
        level += j;
    }
    advance(path.horizon, &mut t, &mut level, &mut inf, &mut local, &mut open);
    if let Some(ex) = open {
        excursions.push(ExcursionRecord {
            time: ex.time,
            local_time: ex.local_time,
            start_level: ex.start_level,
            duration: path.horizon - ex.time,
            area: ex.area.ln().exp(),
            complete: false,
        });
    }
    Ok(LadderDecomposition {
        ladder_drift: d,
        horizon: path.horizon,
        stretches,
        excursions,
        total_local_time: local,
    })
}

/// Largest discrepancy between `∫₀^{L̂⁻¹_u} e^{ξ_s} ds` and
/// `∫₀^u e^{-ĥ_{v-}} dY_v` over `u_grid`.
///
/// Grid points beyond the total local time are clamped to it.
pub fn verify_pathwise_identity(
    path: &PathSkeleton,
    decomp: &LadderDecomposition,
    u_grid: &[f64],
) -> f64 {
    u_grid
        .iter()
        .map(|&u| {
            let u = u.clamp(0.0, decomp.total_local_time);
            let lhs = integrate_exp(path, decomp.inverse_local_time(u));
            let rhs = decomp.y_integral(u);
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub n_paths: usize,
    pub horizon: f64,
    pub max_error: f64,
    /// Largest error relative to `∫₀^{L̂⁻¹_u} e^{ξ_s} ds`.
    pub max_relative_error: f64,
    pub mean_excursions: f64,
}

/// Checks the pathwise identity on `n_paths` simulated paths at
/// `grid_points` evenly spaced local times plus every excursion start.
pub fn verify_identity_many(
    model: &LevyModel,
    seed: u64,
    n_paths: usize,
    horizon: f64,
    grid_points: usize,
    workers: Option<usize>,
) -> Result<IdentityReport> {
    model.ladder_drift()?;
    if n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be positive"));
    }
    let per_path: Vec<(f64, f64, usize)> = par::map_indices(n_paths, workers, |i| {
        let mut rng = rng::stream(seed, Purpose::Path, i as u64);
        let path = pathsim::sample_path(model, &mut rng, horizon, 1.0)?;
        let d = extract_ladder(model, &path)?;
        let mut grid: Vec<f64> = (0..=grid_points)
            .map(|k| d.total_local_time * k as f64 / grid_points.max(1) as f64)
            .collect();
        grid.extend(d.excursions.iter().map(|e| e.local_time));
        let err = verify_pathwise_identity(&path, &d, &grid);
        let scale = integrate_exp(&path, horizon).max(f64::MIN_POSITIVE);
        Ok((err, err / scale, d.excursions.len()))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    Ok(IdentityReport {
        n_paths,
        horizon,
        max_error: per_path.iter().map(|p| p.0).fold(0.0, f64::max),
        max_relative_error: per_path.iter().map(|p| p.1).fold(0.0, f64::max),
        mean_excursions: per_path.iter().map(|p| p.2 as f64).sum::<f64>() / n_paths as f64,
    })
}

/// Area `∫₀^ζ e^{ε(u)} du` of one excursion started at a fresh jump and
/// killed when it returns to 0.
pub fn sample_excursion_area<R: rand::Rng + ?Sized>(model: &LevyModel, rng: &mut R) -> Result<f64> {
    model.ladder_drift()?;
    let sampler = model
        .sampler()
        .ok_or_else(|| Error::UnsupportedModel("excursions need jumps".into()))?;
    let mut walk = Walk::at(sampler.sample(rng));
    pathsim::run_jumps(model, rng, &mut walk, 0.0, EXCURSION_SEGMENT_CAP).map_err(|e| match e {
        Error::NonTerminating(msg) => Error::NonTerminating(format!("excursion: {msg}")),
        other => other,
    })?;
    Ok(walk.acc.ln().exp())
}

/// `n` independent excursion areas; excursion `i` uses stream `i` of `seed`.
pub fn excursion_areas(
    model: &LevyModel,
    seed: u64,
    n: usize,
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    model.ladder_drift()?;
    par::map_indices(n, workers, |i| {
        let mut rng = rng::stream(seed, Purpose::Excursion, i as u64);
        sample_excursion_area(model, &mut rng)
    })
    .into_iter()
    .collect()
}

/// `Π̄_Y(y) = n(area > y)` estimated from i.i.d. excursions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionTailEstimate {
    pub jump_rate: f64,
    pub n_excursions: u64,
    /// Local time over which `n_excursions` excursions are expected, `n/λ_J`.
    pub local_time: f64,
    pub y_grid: Vec<f64>,
    pub counts: Vec<u64>,
    pub estimate: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
}

impl ExcursionTailEstimate {
    pub fn from_areas(jump_rate: f64, areas: &SortedSample, y_grid: &[f64]) -> Self {
        let n = areas.len() as u64;
        let mut est = ExcursionTailEstimate {
            jump_rate,
            n_excursions: n,
            local_time: n as f64 / jump_rate,
            y_grid: y_grid.to_vec(),
            counts: Vec::new(),
            estimate: Vec::new(),
            ci_lo: Vec::new(),
            ci_hi: Vec::new(),
        };
        for &y in y_grid {
            let k = areas.exceedances(y);
            let (lo, hi) = clopper_pearson(k, n, CI_LEVEL);
            est.counts.push(k);
            est.estimate.push(jump_rate * k as f64 / n as f64);
            est.ci_lo.push(jump_rate * lo);
            est.ci_hi.push(jump_rate * hi);
        }
        est
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: &str) -> Result<()> {
        writeln!(out, "# {header}")?;
        writeln!(out, "y,count,local_time,estimate,ci_lo,ci_hi")?;
        for i in 0..self.y_grid.len() {
            writeln!(
                out,
                "{:e},{},{:e},{:e},{:e},{:e}",
                self.y_grid[i],
                self.counts[i],
                self.local_time,
                self.estimate[i],
                self.ci_lo[i],
                self.ci_hi[i]
            )?;
        }
        Ok(())
    }
}

/// Simulates `n` excursions and tabulates `Π̄̂_Y` on `y_grid`.
pub fn estimate_excursion_tail(
    model: &LevyModel,
    seed: u64,
    n: usize,
    y_grid: &[f64],
    workers: Option<usize>,
) -> Result<ExcursionTailEstimate> {
    if n == 0 {
        return Err(Error::invalid("n_excursions", "must be positive"));
    }
    let areas = excursion_areas(model, seed, n, workers)?;
    Ok(ExcursionTailEstimate::from_areas(
        model.jump_rate(),
        &SortedSample::new(&areas)?,
        y_grid,
    ))
}

/// `φ_h(0) = μ/c` where `φ_ĥ(λ) = cλ`.
pub fn upward_ladder_exponent_at_zero(model: &LevyModel) -> Result<f64> {
    let mu = -model.mean_increment()?;
    Ok(mu / model.downward_ladder_coefficient()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalTailEstimate {
    pub x_grid: Vec<f64>,
    /// `P̂(sup ξ > x)`.
    pub sup_tail: Vec<f64>,
    /// `V̄̂_h(x) = P̂(sup ξ > x)/φ_h(0)`.
    pub estimate: Vec<f64>,
    pub phi_h0: f64,
}

/// Renewal tail of the upward ladder height from simulated suprema.
pub fn estimate_renewal_tail(
    model: &LevyModel,
    ctrl: &SamplerControl,
    seed: u64,
    n_paths: usize,
    x_grid: &[f64],
    workers: Option<usize>,
) -> Result<RenewalTailEstimate> {
    let phi_h0 = upward_ladder_exponent_at_zero(model)?;
    let sups = pathsim::supremum_many(model, ctrl, seed, n_paths, workers)?;
    let sorted = SortedSample::new(&sups)?;
    let n = sorted.len() as f64;
    let sup_tail: Vec<f64> = x_grid
        .iter()
        .map(|&x| sorted.exceedances(x) as f64 / n)
        .collect();
    let estimate = sup_tail.iter().map(|p| p / phi_h0).collect();
    Ok(RenewalTailEstimate {
        x_grid: x_grid.to_vec(),
        sup_tail,
        estimate,
        phi_h0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpLaw;
    use approx::assert_relative_eq;

    fn cp_exp() -> LevyModel {
        LevyModel::compound_poisson(-1.0, 0.5, JumpLaw::Exponential { rate: 1.0 }).unwrap()
    }

    fn skeleton(times: &[f64], sizes: &[f64], horizon: f64) -> PathSkeleton {
        PathSkeleton {
            drift: -1.0,
            horizon,
            jump_times: times.to_vec(),
            jump_sizes: sizes.to_vec(),
            gaussian: None,
        }
    }

    #[test]
    fn no_jump_path_is_one_stretch() {
        let p = skeleton(&[], &[], 3.0);
        let dec = extract_ladder(&cp_exp(), &p).unwrap();
        assert_eq!(dec.stretches.len(), 1);
        assert!(dec.excursions.is_empty());
        assert_eq!(dec.total_local_time, 3.0);
        assert_eq!(dec.y_increments(), vec![3.0]);
        assert!(verify_pathwise_identity(&p, &dec, &[0.5, 1.0, 3.0]) < 1e-12);
    }

    #[test]
    fn hand_computed_two_segment_path() {
        let p = skeleton(&[1.0], &[1.0], 2.0);
        let dec = extract_ladder(&cp_exp(), &p).unwrap();
        assert_eq!(dec.excursions.len(), 1);
        let e = dec.excursions[0];
        assert!(e.complete);
        assert_eq!(e.duration, 1.0);
        assert_relative_eq!(e.area, std::f64::consts::E - 1.0, max_relative = 1e-14);
        assert_eq!(dec.total_local_time, 1.0);
        assert_eq!(dec.inverse_local_time(1.0), 2.0);
        let want = 2.0 * (1.0 - (-1.0f64).exp());
        assert_relative_eq!(dec.y_integral(1.0), want, max_relative = 1e-13);
        assert!(verify_pathwise_identity(&p, &dec, &[0.25, 0.5, 1.0]) < 1e-12);
    }

    #[test]
    fn start_levels_replay_the_skeleton() {
        let m = cp_exp();
        let p = pathsim::sample_path(&m, &mut rng::stream(1, Purpose::Path, 0), 50.0, 1e-3).unwrap();
        let dec = extract_ladder(&m, &p).unwrap();
        let infs = p.infimum_before_jumps();
        for e in &dec.excursions {
            let k = p.jump_times.iter().position(|&t| t == e.time).unwrap();
            assert_eq!(e.start_level, infs[k]);
        }
        let total: f64 = dec.ladder_time_increments().iter().sum();
        assert_relative_eq!(total, p.horizon, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_models_are_rejected() {
        let bm = LevyModel::brownian(-1.0, 1.0).unwrap();
        let p = skeleton(&[], &[], 1.0);
        assert!(matches!(extract_ladder(&bm, &p), Err(Error::UnsupportedModel(_))));
    }

    #[test]
    fn point_mass_excursions_have_an_atom_at_the_jump_free_area() {
        // A unit jump drains in time 1; with no further jump (probability
        // e^{-λ}) the area is e - 1, otherwise it is larger.
        let m = LevyModel::compound_poisson(-1.0, 0.5, JumpLaw::PointMass { at: 1.0 }).unwrap();
        let n = 20_000;
        let areas = excursion_areas(&m, 4, n, None).unwrap();
        let base = std::f64::consts::E - 1.0;
        let at_base = areas.iter().filter(|&&a| (a - base).abs() < 1e-12 * base).count();
        assert!(areas.iter().all(|&a| a >= base * (1.0 - 1e-12)));
        let (lo, hi) = clopper_pearson(at_base as u64, n as u64, 0.999);
        let p = (-0.5f64).exp();
        assert!(lo < p && p < hi, "{lo} {hi}");
        let est = estimate_excursion_tail(&m, 4, n, &[0.0, 1.7], Some(1)).unwrap();
        assert_eq!(est.estimate, vec![0.5, 0.5]);
    }

    #[test]
    fn lone_point_mass_excursion_is_exact() {
        let m = LevyModel::compound_poisson(-1.0, 1e-300, JumpLaw::PointMass { at: 1.0 }).unwrap();
        for a in excursion_areas(&m, 4, 10, None).unwrap() {
            assert_relative_eq!(a, std::f64::consts::E - 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn renewal_tail_of_a_jumpless_model_vanishes() {
        let m = LevyModel::compound_poisson(-1.0, 0.0, JumpLaw::Exponential { rate: 1.0 }).unwrap();
        let ctrl = SamplerControl::default();
        let r = estimate_renewal_tail(&m, &ctrl, 1, 100, &[0.0, 0.5], None).unwrap();
        assert_eq!(r.estimate, vec![0.0, 0.0]);
        assert_eq!(r.phi_h0, 1.0);
    }
}
