//! Browser bindings for three views: the Laplace exponent ψ, a simulated
//! path with its running infimum, and the empirical tail of `I` against
//! the regime asymptote.
//!
//! The `*_impl` functions are plain Rust so they can be tested natively.

use expfun::asymptotics::{asymptote_cramer, asymptote_mz, asymptote_theorem1, MomentSource, RegimeClaim};
use expfun::pathsim::{sample_many, sample_path, SamplerControl};
use expfun::rng::{self, Purpose};
use expfun::tailstats::{compare_sorted, SortedSample};
use expfun::LevyModel;
use wasm_bindgen::prelude::*;

fn model(json: &str) -> Result<LevyModel, String> {
    LevyModel::from_json(json).map_err(|e| e.to_string())
}

/// `[λ₀, ψ(λ₀), λ₁, ψ(λ₁), …]`; ψ is NaN outside the exponential-moment domain.
pub fn psi_curve_impl(model_json: &str, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, String> {
    let m = model(model_json)?;
    if !(lo < hi) || n < 2 {
        return Err("need lo < hi and n ≥ 2".into());
    }
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let l = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        out.push(l);
        out.push(m.laplace_exponent(l).unwrap_or(f64::NAN));
    }
    Ok(out)
}

/// `[t, ξ_t, inf_{s≤t} ξ_s, …]` with both sides of every jump.
pub fn path_points_impl(model_json: &str, seed: u64, horizon: f64, points: usize) -> Result<Vec<f64>, String> {
    let m = model(model_json)?;
    let mut r = rng::stream(seed, Purpose::Path, 0);
    let dt = horizon / (4 * points.max(1)) as f64;
    let path = sample_path(&m, &mut r, horizon, dt).map_err(|e| e.to_string())?;
    let mut ts: Vec<(f64, bool)> = (0..=points).map(|i| (horizon * i as f64 / points as f64, false)).collect();
    ts.extend(path.jump_times.iter().map(|&t| (t, true)));
    ts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::with_capacity(3 * ts.len());
    let mut inf = 0.0f64;
    for (t, jump) in ts {
        let after = path.value_at(t);
        if jump {
            let i = path.jump_times.partition_point(|&s| s < t);
            let before = after - path.jump_sizes[i];
            inf = inf.min(before);
            out.extend([t, before, inf]);
        }
        inf = inf.min(after);
        out.extend([t, after, inf]);
    }
    Ok(out)
}

/// Tail comparison of `n` draws of `I` as JSON (points with `t`, `p_hat`,
/// confidence band, asymptote and ratio).
pub fn tail_vs_asymptote_impl(
    model_json: &str,
    regime_json: &str,
    seed: u64,
    n: usize,
    remainder_cap: f64,
) -> Result<String, String> {
    let m = model(model_json)?;
    let claim: RegimeClaim = serde_json::from_str(regime_json).map_err(|e| e.to_string())?;
    let ctrl = SamplerControl {
        remainder_cap: (remainder_cap > 0.0).then_some(remainder_cap),
        ..SamplerControl::default()
    };
    let s = sample_many(&m, &ctrl, seed, n, None).map_err(|e| e.to_string())?;
    let values: Vec<f64> = s.iter().map(|x| x.value).collect();
    let sorted = SortedSample::new(&values).map_err(|e| e.to_string())?;
    let asym = match claim {
        RegimeClaim::SAlpha { alpha } => asymptote_theorem1(&m, alpha, MomentSource::Samples(&s)),
        RegimeClaim::SubexponentialMz => asymptote_mz(&m),
        RegimeClaim::Cramer { .. } => asymptote_cramer(&m, MomentSource::Samples(&s)),
    }
    .map_err(|e| e.to_string())?;
    let mut grid: Vec<f64> = (2..=((n as f64 / 20.0).log10() * 4.0).floor() as usize)
        .map(|i| sorted.quantile(1.0 - 10f64.powf(-0.25 * i as f64)))
        .collect();
    grid.dedup();
    let cmp = compare_sorted(&sorted, |t| asym.eval(t), &grid, &claim.to_string()).map_err(|e| e.to_string())?;
    serde_json::to_string(&cmp).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn psi_curve(model_json: &str, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    psi_curve_impl(model_json, lo, hi, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn path_points(model_json: &str, seed: u32, horizon: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    path_points_impl(model_json, u64::from(seed), horizon, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn tail_vs_asymptote(
    model_json: &str,
    regime_json: &str,
    seed: u32,
    n: usize,
    remainder_cap: f64,
) -> Result<String, JsValue> {
    tail_vs_asymptote_impl(model_json, regime_json, u64::from(seed), n, remainder_cap)
        .map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CP: &str = r#"{"drift":-1,"jump_rate":0.5,"jump_law":{"kind":"gamma_exp","alpha":2,"beta":2}}"#;

    #[test]
    fn psi_curve_hits_zero_and_domain_edge() {
        let v = psi_curve_impl(CP, 0.0, 3.0, 4).unwrap();
        assert_eq!(v.len(), 8);
        assert_eq!(v[1], 0.0);
        assert!(v[3] < 0.0);
        assert!(v[7].is_nan());
        assert!(psi_curve_impl(CP, 1.0, 0.0, 4).is_err());
    }

    #[test]
    fn path_points_track_running_infimum() {
        let v = path_points_impl(CP, 3, 20.0, 200).unwrap();
        assert_eq!(v.len() % 3, 0);
        let rows: Vec<&[f64]> = v.chunks(3).collect();
        assert_eq!(rows[0], &[0.0, 0.0, 0.0]);
        for w in rows.windows(2) {
            assert!(w[1][0] >= w[0][0]);
            assert!(w[1][2] <= w[0][2]);
        }
        assert!(rows.iter().all(|r| r[2] <= r[1] + 1e-12));
    }

    #[test]
    fn tail_json_has_ratios() {
        let j = tail_vs_asymptote_impl(CP, r#"{"regime":"s_alpha","alpha":2}"#, 1, 20_000, 0.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        let pts = v["points"].as_array().unwrap();
        assert!(pts.len() >= 5);
        assert!(pts.iter().all(|p| p["asymptote"].as_f64().unwrap() > 0.0));
        assert!(tail_vs_asymptote_impl(CP, "{}", 1, 100, 0.0).is_err());
    }
}
