//! Empirical tails, exact binomial bands, ratio curves against asymptotes,
//! tail-index fits and Kolmogorov–Smirnov statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

use crate::error::{Error, Result};

/// Fewest exceedances for which a ratio is reported.
pub const MIN_TAIL_COUNT: u64 = 20;

/// Confidence level of the Clopper–Pearson bands.
pub const CI_LEVEL: f64 = 0.99;

/// Exact binomial interval for `k` successes out of `n`.
pub fn clopper_pearson(k: u64, n: u64, level: f64) -> (f64, f64) {
    assert!(k <= n && n > 0, "need 0 ≤ k ≤ n, n > 0");
    let a = 1.0 - level;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        inv_beta_reg(kf, nf - kf + 1.0, 0.5 * a)
    };
    let hi = if k == n {
        1.0
    } else {
        inv_beta_reg(kf + 1.0, nf - kf, 1.0 - 0.5 * a)
    };
    (lo, hi)
}

/// Samples sorted ascending, for repeated exceedance counts.
#[derive(Debug, Clone)]
pub struct SortedSample(Vec<f64>);

impl SortedSample {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("samples", "must be nonempty"));
        }
        if let Some(x) = samples.iter().find(|x| x.is_nan() || **x == f64::NEG_INFINITY) {
            return Err(Error::invalid("samples", format!("invalid value {x}")));
        }
        let mut v = samples.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(SortedSample(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// `#{X_i > t}`.
    pub fn exceedances(&self, t: f64) -> u64 {
        (self.0.len() - self.0.partition_point(|&x| x <= t)) as u64
    }

    /// Empirical quantile (lower order statistic).
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.0.len();
        let i = ((p * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    pub n_exceed: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub asymptote: Option<f64>,
    /// `p̂/a(t)`, present only when `n_exceed ≥ MIN_TAIL_COUNT`.
    pub ratio: Option<f64>,
    pub ratio_lo: Option<f64>,
    pub ratio_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailComparison {
    pub regime: String,
    pub n: u64,
    pub points: Vec<TailPoint>,
}

/// Survival estimates with Clopper–Pearson bands on `t_grid`.
pub fn empirical_tail(samples: &[f64], t_grid: &[f64]) -> Result<TailComparison> {
    empirical_tail_sorted(&SortedSample::new(samples)?, t_grid)
}

pub fn empirical_tail_sorted(sorted: &SortedSample, t_grid: &[f64]) -> Result<TailComparison> {
    if t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("t_grid", "must be strictly increasing"));
    }
    let n = sorted.len() as u64;
    let points = t_grid
        .iter()
        .map(|&t| {
            let k = sorted.exceedances(t);
            let (lo, hi) = clopper_pearson(k, n, CI_LEVEL);
            TailPoint {
                t,
                n_exceed: k,
                p_hat: k as f64 / n as f64,
                ci_lo: lo,
                ci_hi: hi,
                asymptote: None,
                ratio: None,
                ratio_lo: None,
                ratio_hi: None,
            }
        })
        .collect();
    Ok(TailComparison {
        regime: String::new(),
        n,
        points,
    })
}

/// Ratio curve `p̂(t)/a(t)` on `t_grid`.
pub fn compare<F: Fn(f64) -> f64>(
    samples: &[f64],
    asymptote: F,
    t_grid: &[f64],
    regime: &str,
) -> Result<TailComparison> {
    compare_sorted(&SortedSample::new(samples)?, asymptote, t_grid, regime)
}

pub fn compare_sorted<F: Fn(f64) -> f64>(
    sorted: &SortedSample,
    asymptote: F,
    t_grid: &[f64],
    regime: &str,
) -> Result<TailComparison> {
    let mut cmp = empirical_tail_sorted(sorted, t_grid)?;
    cmp.regime = regime.to_string();
    for p in &mut cmp.points {
        let a = asymptote(p.t);
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::invalid(
                "asymptote",
                format!("must be positive and finite, got {a} at t = {}", p.t),
            ));
        }
        p.asymptote = Some(a);
        if p.n_exceed >= MIN_TAIL_COUNT {
            p.ratio = Some(p.p_hat / a);
            p.ratio_lo = Some(p.ci_lo / a);
            p.ratio_hi = Some(p.ci_hi / a);
        }
    }
    Ok(cmp)
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| format!("{v:e}"))
}

impl TailComparison {
    /// Reported ratios in grid order.
    pub fn ratios(&self) -> Vec<f64> {
        self.points.iter().filter_map(|p| p.ratio).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W, header: &str) -> Result<()> {
        writeln!(out, "# {header}")?;
        writeln!(out, "t,n_exceed,p_hat,ci_lo,ci_hi,asymptote,ratio,ratio_lo,ratio_hi")?;
        for p in &self.points {
            writeln!(
                out,
                "{:e},{},{:e},{:e},{:e},{},{},{},{}",
                p.t,
                p.n_exceed,
                p.p_hat,
                p.ci_lo,
                p.ci_hi,
                opt(p.asymptote),
                opt(p.ratio),
                opt(p.ratio_lo),
                opt(p.ratio_hi)
            )?;
        }
        Ok(())
    }
}

/// Trend of a ratio sequence toward 1: the least-squares slope of
/// `|ln r_k|` against `k` is negative and the last ratio is closer to 1
/// than the first. Single points may move away.
pub fn moves_toward_one(ratios: &[f64]) -> bool {
    let d: Vec<f64> = ratios.iter().map(|r| r.ln().abs()).collect();
    let n = d.len();
    if n < 2 || d.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let kbar = (n - 1) as f64 / 2.0;
    let dbar = d.iter().sum::<f64>() / n as f64;
    let slope: f64 = d.iter().enumerate().map(|(k, x)| (k as f64 - kbar) * (x - dbar)).sum();
    slope < 0.0 && d[n - 1] < d[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TailIndexMethod {
    /// Hill estimator on the `k` largest order statistics; `None` uses `⌈0.05 N⌉`.
    Hill { k: Option<usize> },
    /// Least-squares slope of `log p̂` against `log t` over the top `decades`
    /// of `p̂` above the minimum tail count.
    LoglogOls { decades: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailIndexFit {
    pub method: TailIndexMethod,
    pub k: usize,
    pub estimate: f64,
    pub stderr: f64,
    /// Hill estimates at `k/2`, `k`, `2k`.
    pub sweep: Vec<(usize, f64, f64)>,
    /// Whether the sweep is consistent with a single index.
    pub stable: bool,
}

/// Minimum sample size for the Hill estimator.
pub const HILL_MIN_SAMPLES: usize = 1000;

fn descending(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_infinite()) {
        return Err(Error::invalid("samples", "tail index fits need finite values"));
    }
    let mut v = SortedSample::new(samples)?.0;
    v.reverse();
    Ok(v)
}

/// `(α̂, se)` from the `k` largest of the descending sample `x`.
fn hill(x: &[f64], k: usize) -> Result<(f64, f64)> {
    if k == 0 || k >= x.len() {
        return Err(Error::invalid("k", format!("must lie in [1, {})", x.len())));
    }
    let threshold = x[k];
    if !(threshold > 0.0) {
        return Err(Error::DegenerateSample(
            "Hill threshold is not positive".into(),
        ));
    }
    if x[0] == threshold {
        return Err(Error::DegenerateSample(format!(
            "top {k} order statistics are all equal"
        )));
    }
    let ln_t = threshold.ln();
    let s: f64 = x[..k].iter().map(|v| v.ln() - ln_t).sum();
    let a = k as f64 / s;
    Ok((a, a / (k as f64).sqrt()))
}

/// Fits the tail index `α` of `P(X > t) ≈ c t^{-α}`.
pub fn tail_index_fit(samples: &[f64], method: TailIndexMethod) -> Result<TailIndexFit> {
    let x = descending(samples)?;
    let n = x.len();
    match method {
        TailIndexMethod::Hill { k } => {
            if n < HILL_MIN_SAMPLES {
                return Err(Error::invalid(
                    "samples",
                    format!("Hill needs at least {HILL_MIN_SAMPLES}, got {n}"),
                ));
            }
            let k = k.unwrap_or((0.05 * n as f64).ceil() as usize);
            let (estimate, stderr) = hill(&x, k)?;
            let mut sweep = Vec::new();
            for kk in [k / 2, k, 2 * k] {
                if kk >= 1 && kk < n {
                    let (a, s) = hill(&x, kk)?;
                    sweep.push((kk, a, s));
                }
            }
            let (first, last) = (sweep[0], sweep[sweep.len() - 1]);
            let stable = (first.1 - last.1).abs() < 3.0 * (first.2.powi(2) + last.2.powi(2)).sqrt();
            Ok(TailIndexFit {
                method,
                k,
                estimate,
                stderr,
                sweep,
                stable,
            })
        }
        TailIndexMethod::LoglogOls { decades } => {
            if !(decades > 0.0) {
                return Err(Error::invalid("decades", "must be positive"));
            }
            let lo = MIN_TAIL_COUNT as usize;
            let hi = ((lo as f64) * 10f64.powf(decades)).round() as usize;
            if hi >= n {
                return Err(Error::invalid(
                    "samples",
                    format!("need more than {hi} samples for {decades} decades"),
                ));
            }
            // The i-th largest value has p̂ = i/N just below it.
            let pts: Vec<(f64, f64)> = (lo..=hi)
                .map(|i| (x[i - 1].ln(), (i as f64 / n as f64).ln()))
                .collect();
            if pts.iter().any(|p| !p.0.is_finite()) {
                return Err(Error::DegenerateSample("non-positive values in the tail".into()));
            }
            let m = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            if sxx == 0.0 {
                return Err(Error::DegenerateSample("tail values are all equal".into()));
            }
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let slope = sxy / sxx;
            let rss: f64 = pts
                .iter()
                .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
                .sum();
            let stderr = (rss / (m - 2.0).max(1.0) / sxx).sqrt();
            Ok(TailIndexFit {
                method,
                k: hi,
                estimate: -slope,
                stderr,
                sweep: Vec::new(),
                stable: true,
            })
        }
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateSample("fewer than two positive points".into()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// `sup |F_n - F|` for a continuous `F`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    let s = SortedSample::new(samples)?;
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.values().iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).max(f - i as f64 / n));
    }
    Ok(d)
}

/// `sup |F_n - G_m|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = SortedSample::new(a)?;
    let b = SortedSample::new(b)?;
    let (a, b) = (a.values(), b.values());
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

/// Asymptotic 1% critical value of the one-sample statistic.
pub fn ks_critical_one_sample(n: usize) -> f64 {
    KS_C_001 / (n as f64).sqrt()
}

/// Asymptotic 1% critical value of the two-sample statistic.
pub fn ks_critical_two_sample(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KS_C_001 * ((n + m) / (n * m)).sqrt()
}

/// `c(0.01)` of the Kolmogorov distribution.
pub const KS_C_001: f64 = 1.628;
