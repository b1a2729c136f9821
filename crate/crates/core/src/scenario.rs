//! Named, reproducible experiments: a model, a regime claim, sample sizes
//! and a seed, run into CSV tables and a JSON summary of verdicts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{
    asymptote_cramer, asymptote_mz, asymptote_sup_tail, asymptote_theorem1, asymptote_theorem2,
    asymptote_theorem3, validate_regime, verify_random_recurrence, Asymptote, DufresneLaw,
    MomentSource, RecurrenceReport, RegimeCertificate, RegimeClaim,
};
use crate::error::{Error, Result};
use crate::ladder::{excursion_areas, ExcursionTailEstimate};
use crate::levy::{JumpLaw, LevyModel, ModelSpec};
use crate::pathsim::{sample_many, supremum_many, write_samples_csv, ExpFunctionalSample, SamplerControl};
use crate::tailstats::{
    clopper_pearson, compare_sorted, empirical_tail_sorted, ks_one_sample, moves_toward_one,
    tail_index_fit, SortedSample, TailComparison, TailIndexFit, TailIndexMethod, TailPoint,
    CI_LEVEL, MIN_TAIL_COUNT,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default output root when neither the options nor the scenario name one.
pub const OUT_DIR_ENV: &str = "EXPFUN_OUT_DIR";

/// Upper-tail probabilities `10^{-1.5}, …, 10^{-3}`: three half-decades
/// ending at the 99.9th percentile.
pub const HALF_DECADES: [f64; 4] = [0.031_622_776_601_683_79, 0.01, 0.003_162_277_660_168_379, 0.001];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// Thresholds at the empirical quantiles `1 - p`.
    UpperProbs(Vec<f64>),
    Values(Vec<f64>),
    /// `points` log-spaced thresholds spanning `decades` below the value
    /// that still has `min_count` exceedances.
    TopDecades { min_count: u64, decades: f64, points: usize },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::UpperProbs(HALF_DECADES.to_vec())
    }
}

impl GridSpec {
    fn validate(&self, field: &str) -> Result<()> {
        let bad = |r: &str| Err(Error::invalid(field, r));
        match self {
            GridSpec::UpperProbs(p) if p.is_empty() => bad("must be nonempty"),
            GridSpec::UpperProbs(p) if p.iter().any(|&p| !(p > 0.0 && p < 1.0)) => {
                bad("probabilities must lie in (0, 1)")
            }
            GridSpec::Values(v) if v.is_empty() => bad("must be nonempty"),
            GridSpec::Values(v) if v.iter().any(|&t| !(t > 0.0 && t.is_finite())) => {
                bad("values must be positive and finite")
            }
            GridSpec::TopDecades { min_count, decades, points } => {
                if *min_count == 0 || !(*decades > 0.0) || *points < 2 {
                    bad("needs min_count ≥ 1, decades > 0, points ≥ 2")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn resolve(&self, sorted: &SortedSample) -> Result<Vec<f64>> {
        let n = sorted.len();
        match self {
            GridSpec::Values(v) => Ok(v.clone()),
            GridSpec::UpperProbs(p) => {
                let mut g: Vec<f64> = p.iter().map(|p| sorted.quantile(1.0 - p)).collect();
                g.dedup();
                Ok(g)
            }
            GridSpec::TopDecades { min_count, decades, points } => {
                let k = *min_count as usize;
                if k >= n {
                    return Err(Error::invalid("grid", format!("min_count {k} needs more than {n} samples")));
                }
                let top = sorted.values()[n - k - 1];
                if !(top > 0.0 && top.is_finite()) {
                    return Err(Error::DegenerateSample("grid anchor is not positive".into()));
                }
                let step = decades / (*points as f64 - 1.0);
                Ok((0..*points)
                    .map(|i| top * 10f64.powf(-decades + step * i as f64))
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSizes {
    /// Draws of `I`.
    pub samples: usize,
    pub excursions: usize,
    /// Draws of `sup ξ`.
    pub sup_paths: usize,
    /// Pairs for the random-recurrence check.
    pub recurrence: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    /// `P(I > t)`.
    Functional,
    /// `Π̄_Y(y)`.
    Excursion,
    /// `P(sup ξ > t)`.
    Sup,
}

impl Series {
    fn file(self) -> &'static str {
        match self {
            Series::Functional => "tail_functional.csv",
            Series::Excursion => "tail_excursion.csv",
            Series::Sup => "tail_sup.csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum VerdictSpec {
    /// Ratio within `[lo, hi]` at `t` (default: the last reported point),
    /// or at every reported point.
    RatioBand {
        series: Series,
        #[serde(default)]
        at: Option<f64>,
        #[serde(default)]
        every: bool,
        lo: f64,
        hi: f64,
    },
    /// `|r - 1|` non-increasing along the grid.
    TowardOne { series: Series },
    /// Ratios strictly decreasing along the grid.
    Decreasing { series: Series },
    /// The Clopper–Pearson band of `p̂(I > t)` covers the exact Dufresne tail.
    OracleCi { t: Vec<f64> },
    /// One-sample KS distance to the Dufresne law below `max`.
    KsOracle { max: f64 },
    /// KS distance does not grow when the grid step is halved.
    DtHalving,
    /// Tail-index estimate within `target ± tol`.
    TailIndex {
        series: Series,
        method: TailIndexMethod,
        target: f64,
        tol: f64,
    },
    /// Excursion constant over functional constant equals `dα` to `tol`.
    ConstantRatio { tol: f64 },
    /// Two-sample KS of `I` against `Q + M Ĩ` below the 1% threshold.
    Recurrence,
}

impl VerdictSpec {
    fn label(&self) -> String {
        let s = |s: &Series| serde_json::to_value(s).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default();
        match self {
            VerdictSpec::RatioBand { series, .. } => format!("ratio_band:{}", s(series)),
            VerdictSpec::TowardOne { series } => format!("toward_one:{}", s(series)),
            VerdictSpec::Decreasing { series } => format!("decreasing:{}", s(series)),
            VerdictSpec::OracleCi { .. } => "oracle_ci:functional".into(),
            VerdictSpec::KsOracle { .. } => "ks_oracle".into(),
            VerdictSpec::DtHalving => "dt_halving".into(),
            VerdictSpec::TailIndex { series, .. } => format!("tail_index:{}", s(series)),
            VerdictSpec::ConstantRatio { .. } => "constant_ratio".into(),
            VerdictSpec::Recurrence => "recurrence".into(),
        }
    }

    fn series(&self) -> Option<Series> {
        match self {
            VerdictSpec::RatioBand { series, .. }
            | VerdictSpec::TowardOne { series }
            | VerdictSpec::Decreasing { series }
            | VerdictSpec::TailIndex { series, .. } => Some(*series),
            VerdictSpec::OracleCi { .. } | VerdictSpec::KsOracle { .. } | VerdictSpec::DtHalving => {
                Some(Series::Functional)
            }
            VerdictSpec::ConstantRatio { .. } | VerdictSpec::Recurrence => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub model: LevyModel,
    pub regime: RegimeClaim,
    pub seed: u64,
    #[serde(default)]
    pub sizes: SampleSizes,
    #[serde(default)]
    pub sampler: SamplerControl,
    /// Also sample with the grid step halved by bridge refinement.
    #[serde(default)]
    pub dt_halving: bool,
    #[serde(default)]
    pub t_grid: GridSpec,
    #[serde(default)]
    pub y_grid: GridSpec,
    #[serde(default)]
    pub sup_grid: GridSpec,
    #[serde(default = "one")]
    pub recurrence_local_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub verdicts: Vec<VerdictSpec>,
}

fn one() -> f64 {
    1.0
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty()
            || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(Error::invalid("name", "must be nonempty [A-Za-z0-9_-]"));
        }
        self.sampler.validate()?;
        self.t_grid.validate("t_grid")?;
        self.y_grid.validate("y_grid")?;
        self.sup_grid.validate("sup_grid")?;
        if !(self.recurrence_local_time > 0.0 && self.recurrence_local_time.is_finite()) {
            return Err(Error::invalid("recurrence_local_time", "must be positive"));
        }
        if self.dt_halving && self.sizes.samples == 0 {
            return Err(Error::invalid("dt_halving", "needs sizes.samples > 0"));
        }
        for (i, v) in self.verdicts.iter().enumerate() {
            let field = format!("verdicts[{i}]");
            let size = match v.series() {
                Some(Series::Functional) => self.sizes.samples,
                Some(Series::Excursion) => self.sizes.excursions,
                Some(Series::Sup) => self.sizes.sup_paths,
                None if matches!(v, VerdictSpec::Recurrence) => self.sizes.recurrence,
                None => 1,
            };
            if size == 0 {
                return Err(Error::invalid(field, format!("{} needs a nonzero sample size", v.label())));
            }
            match v {
                VerdictSpec::DtHalving if !self.dt_halving => {
                    return Err(Error::invalid(field, "dt_halving check needs dt_halving = true"));
                }
                VerdictSpec::ConstantRatio { .. } if !matches!(self.regime, RegimeClaim::SAlpha { .. }) => {
                    return Err(Error::invalid(field, "constant_ratio needs an s_alpha regime"));
                }
                VerdictSpec::RatioBand { lo, hi, .. } if !(lo <= hi) => {
                    return Err(Error::invalid(field, "needs lo ≤ hi"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// SHA-256 over the model JSON, the seed and the crate version.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.model.to_json().as_bytes());
        h.update(b"\n");
        h.update(self.seed.to_string().as_bytes());
        h.update(b"\n");
        h.update(VERSION.as_bytes());
        hex::encode(h.finalize())
    }

    pub fn header(&self) -> String {
        format!(
            "expfun {VERSION} scenario={} seed={} hash={}",
            self.name,
            self.seed,
            self.hash()
        )
    }
}

fn model(spec: ModelSpec) -> LevyModel {
    LevyModel::new(spec).expect("built-in model is valid")
}

fn cp(drift: f64, rate: f64, law: JumpLaw) -> LevyModel {
    model(ModelSpec {
        drift,
        gaussian_var: 0.0,
        jump_rate: rate,
        jump_law: Some(law),
        drift_certificate: None,
    })
}

fn base(name: &str, description: &str, m: LevyModel, regime: RegimeClaim) -> Scenario {
    Scenario {
        name: name.into(),
        description: Some(description.into()),
        model: m,
        regime,
        seed: 20_240_601,
        sizes: SampleSizes::default(),
        sampler: SamplerControl::default(),
        dt_halving: false,
        t_grid: GridSpec::default(),
        y_grid: GridSpec::default(),
        sup_grid: GridSpec::default(),
        recurrence_local_time: 1.0,
        output_dir: None,
        verdicts: Vec::new(),
    }
}

/// The five built-in scenarios.
pub fn list_builtin() -> Vec<Scenario> {
    use Series::*;
    use VerdictSpec::*;
    let band = |series, lo, hi| RatioBand { series, at: None, every: false, lo, hi };
    let hill = TailIndexMethod::Hill { k: None };

    let mut theta1 = base(
        "dufresne-theta1",
        "Brownian motion σ² = 2, μ = 1: I = 1/Exp(1), Cramér θ = 1",
        LevyModel::brownian(-1.0, 2.0).expect("valid"),
        RegimeClaim::Cramer { theta: Some(1.0) },
    );
    theta1.sizes.samples = 20_000;
    theta1.sampler.remainder_cap = Some(1e6);
    theta1.t_grid = GridSpec::Values(vec![5.0, 10.0, 20.0, 50.0]);
    theta1.verdicts = vec![
        KsOracle { max: 0.02 },
        OracleCi { t: vec![5.0, 10.0, 20.0, 50.0] },
        TailIndex { series: Functional, method: hill, target: 1.0, tol: 0.15 },
    ];

    let mut theta2 = base(
        "dufresne-theta2",
        "Brownian motion σ² = 2, μ = 2: I = 1/Gamma(2, 1), Cramér θ = 2, C = 0.5",
        LevyModel::brownian(-2.0, 2.0).expect("valid"),
        RegimeClaim::Cramer { theta: Some(2.0) },
    );
    theta2.sizes.samples = 100_000;
    theta2.dt_halving = true;
    theta2.t_grid = GridSpec::Values(vec![5.0, 10.0, 20.0, 50.0]);
    theta2.verdicts = vec![
        KsOracle { max: 0.02 },
        DtHalving,
        RatioBand { series: Functional, at: Some(10.0), every: false, lo: 0.85, hi: 1.15 },
        OracleCi { t: vec![5.0, 20.0, 50.0] },
        TailIndex { series: Functional, method: hill, target: 2.0, tol: 0.15 },
    ];

    let mut salpha = base(
        "cp-salpha2",
        "compound Poisson b = -1, λ_J = 0.5, gamma_exp(2, 2) jumps: S_2",
        cp(-1.0, 0.5, JumpLaw::GammaExp { alpha: 2.0, beta: 2.0 }),
        RegimeClaim::SAlpha { alpha: 2.0 },
    );
    salpha.sizes = SampleSizes {
        samples: 1_000_000,
        excursions: 1_000_000,
        sup_paths: 1_000_000,
        recurrence: 10_000,
    };
    let mut probs: Vec<f64> = (3..=8).map(|i| 10f64.powf(-0.5 * i as f64)).collect();
    probs.push(5e-5);
    salpha.y_grid = GridSpec::UpperProbs(probs);
    salpha.verdicts = vec![
        band(Functional, 0.6, 1.4),
        TowardOne { series: Functional },
        band(Excursion, 0.5, 1.5),
        TowardOne { series: Excursion },
        ConstantRatio { tol: 1e-12 },
        band(Sup, 0.6, 1.4),
        TowardOne { series: Sup },
        Recurrence,
    ];

    let mut cramer = base(
        "cp-cramer-exp",
        "compound Poisson b = -1, λ_J = 0.5, exponential(1) jumps: Cramér θ = 0.5",
        cp(-1.0, 0.5, JumpLaw::Exponential { rate: 1.0 }),
        RegimeClaim::Cramer { theta: Some(0.5) },
    );
    cramer.sizes.samples = 100_000;
    cramer.sizes.excursions = 1_000_000;
    cramer.sampler.remainder_cap = Some(1e12);
    cramer.y_grid = GridSpec::UpperProbs((2..=8).map(|i| 10f64.powf(-0.5 * i as f64)).collect());
    cramer.verdicts = vec![
        TailIndex {
            series: Excursion,
            method: TailIndexMethod::LoglogOls { decades: 1.0 },
            target: 0.5,
            tol: 0.1,
        },
        RatioBand { series: Excursion, at: None, every: true, lo: 0.7, hi: 1.3 },
    ];

    let mut mz = base(
        "cp-mz-pareto",
        "compound Poisson b = -1.75, λ_J = 0.5, pareto(3, 1) jumps: μ = 1, subexponential",
        cp(-1.75, 0.5, JumpLaw::Pareto { index: 3.0, scale: 1.0 }),
        RegimeClaim::SubexponentialMz,
    );
    mz.sizes.samples = 1_000_000;
    mz.sizes.excursions = 1_000_000;
    mz.sampler.remainder_cap = Some(1e65);
    mz.y_grid = GridSpec::TopDecades { min_count: 50, decades: 2.0, points: 3 };
    mz.verdicts = vec![
        band(Functional, 0.5, 1.5),
        TowardOne { series: Functional },
        Decreasing { series: Excursion },
    ];

    vec![theta1, theta2, salpha, cramer, mz]
}

pub fn builtin(name: &str) -> Option<Scenario> {
    list_builtin().into_iter().find(|s| s.name == name)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    /// Run even when the regime certificate fails.
    pub force: bool,
    pub out_dir: Option<PathBuf>,
    /// Write the raw sample tables.
    pub write_samples: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub values: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteSummary {
    pub series: Series,
    pub kind: String,
    pub constant: f64,
    pub constant_se: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub version: String,
    pub hash: String,
    pub seed: u64,
    pub certificate: RegimeCertificate,
    pub asymptotes: Vec<AsymptoteSummary>,
    pub ks: Option<f64>,
    pub ks_refined: Option<f64>,
    pub tail_index: Vec<(Series, TailIndexFit)>,
    pub comparisons: Vec<(Series, TailComparison)>,
    pub recurrence: Option<RecurrenceReport>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl Report {
    pub fn comparison(&self, series: Series) -> Option<&TailComparison> {
        self.comparisons.iter().find(|c| c.0 == series).map(|c| &c.1)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

/// Where a scenario writes: the options, then the scenario, then
/// `$EXPFUN_OUT_DIR`, then `./expfun-out`; always under the scenario name.
pub fn output_dir(scenario: &Scenario, opts: &RunOptions) -> PathBuf {
    let root = opts
        .out_dir
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("expfun-out"));
    root.join(&scenario.name)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

fn moment_source(samples: &[ExpFunctionalSample]) -> MomentSource<'_> {
    if samples.is_empty() {
        MomentSource::Exact
    } else {
        MomentSource::Samples(samples)
    }
}

fn summarize(series: Series, a: &Asymptote) -> AsymptoteSummary {
    AsymptoteSummary {
        series,
        kind: format!("{:?}", a.kind),
        constant: a.constant,
        constant_se: a.constant_se,
        target: a.target(),
    }
}

/// Comparison table for `Π̄̂_Y`, scaled to unit local time.
pub fn excursion_comparison<F: Fn(f64) -> f64>(
    est: &ExcursionTailEstimate,
    asymptote: Option<F>,
    regime: &str,
) -> TailComparison {
    let points = est
        .y_grid
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let a = asymptote.as_ref().map(|f| f(y)).filter(|a| a.is_finite() && *a > 0.0);
            let shown = a.filter(|_| est.counts[i] >= MIN_TAIL_COUNT);
            TailPoint {
                t: y,
                n_exceed: est.counts[i],
                p_hat: est.estimate[i],
                ci_lo: est.ci_lo[i],
                ci_hi: est.ci_hi[i],
                asymptote: a,
                ratio: shown.map(|a| est.estimate[i] / a),
                ratio_lo: shown.map(|a| est.ci_lo[i] / a),
                ratio_hi: shown.map(|a| est.ci_hi[i] / a),
            }
        })
        .collect();
    TailComparison {
        regime: regime.to_string(),
        n: est.n_excursions,
        points,
    }
}

/// Runs a scenario and writes its tables under [`output_dir`].
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<Report> {
    scenario.validate()?;
    let m = &scenario.model;
    let certificate = validate_regime(m, scenario.regime);
    if !certificate.passed && !opts.force {
        return Err(Error::Certificate(certificate.failures().join(", ")));
    }
    let dir = output_dir(scenario, opts);
    fs::create_dir_all(&dir)?;
    let header = scenario.header();
    let regime = scenario.regime.to_string();
    let seed = scenario.seed;
    let sizes = scenario.sizes;
    let w = opts.workers;

    let mut report = Report {
        scenario: scenario.name.clone(),
        version: VERSION.into(),
        hash: scenario.hash(),
        seed,
        certificate: certificate.clone(),
        asymptotes: Vec::new(),
        ks: None,
        ks_refined: None,
        tail_index: Vec::new(),
        comparisons: Vec::new(),
        recurrence: None,
        verdicts: Vec::new(),
        passed: false,
        out_dir: dir.clone(),
    };
    serde_json::to_writer_pretty(create(&dir, "certificate.json")?, &certificate)?;

    // Draws of I.
    let samples = if sizes.samples > 0 {
        sample_many(m, &scenario.sampler, seed, sizes.samples, w)?
    } else {
        Vec::new()
    };
    let mut functional_sorted = None;
    let mut refined: Vec<ExpFunctionalSample> = Vec::new();
    if !samples.is_empty() {
        if opts.write_samples {
            write_samples_csv(create(&dir, "samples.csv")?, &header, &samples)?;
        }
        let values: Vec<f64> = samples.iter().map(|s| s.value).collect();
        let sorted = SortedSample::new(&values)?;
        let grid = scenario.t_grid.resolve(&sorted)?;
        let asym = match scenario.regime {
            RegimeClaim::SAlpha { alpha } => asymptote_theorem1(m, alpha, moment_source(&samples)),
            RegimeClaim::SubexponentialMz => asymptote_mz(m),
            RegimeClaim::Cramer { .. } => asymptote_cramer(m, moment_source(&samples)),
        }?;
        report.asymptotes.push(summarize(Series::Functional, &asym));
        let cmp = compare_sorted(&sorted, |t| asym.eval(t), &grid, &regime)?;
        cmp.write_csv(create(&dir, Series::Functional.file())?, &header)?;
        report.comparisons.push((Series::Functional, cmp));
        if let Ok(law) = DufresneLaw::for_model(m) {
            report.ks = Some(ks_one_sample(&values, |x| law.cdf(x))?);
            if scenario.dt_halving {
                let ctrl = SamplerControl {
                    refinements: scenario.sampler.refinements + 1,
                    ..scenario.sampler
                };
                refined = sample_many(m, &ctrl, seed, sizes.samples, w)?;
                if opts.write_samples {
                    write_samples_csv(create(&dir, "samples_refined.csv")?, &header, &refined)?;
                }
                let rv: Vec<f64> = refined.iter().map(|s| s.value).collect();
                report.ks_refined = Some(ks_one_sample(&rv, |x| law.cdf(x))?);
            }
        }
        functional_sorted = Some(sorted);
    }
    drop(refined);

    // Excursions of the reflected process.
    let mut areas_sorted = None;
    if sizes.excursions > 0 {
        let areas = excursion_areas(m, seed, sizes.excursions, w)?;
        let sorted = SortedSample::new(&areas)?;
        let grid = scenario.y_grid.resolve(&sorted)?;
        let est = ExcursionTailEstimate::from_areas(m.jump_rate(), &sorted, &grid);
        est.write_csv(create(&dir, "excursion_tail.csv")?, &header)?;
        let asym = match scenario.regime {
            RegimeClaim::SAlpha { alpha } => asymptote_theorem2(m, alpha, moment_source(&samples))?,
            r => asymptote_theorem3(m, r, moment_source(&samples))?,
        };
        report.asymptotes.push(summarize(Series::Excursion, &asym));
        let cmp = excursion_comparison(&est, Some(|y| asym.eval(y)), &regime);
        cmp.write_csv(create(&dir, Series::Excursion.file())?, &header)?;
        report.comparisons.push((Series::Excursion, cmp));
        areas_sorted = Some(sorted);
    }

    // Overall supremum.
    if sizes.sup_paths > 0 {
        let sups = supremum_many(m, &scenario.sampler, seed, sizes.sup_paths, w)?;
        let sorted = SortedSample::new(&sups)?;
        let grid = scenario.sup_grid.resolve(&sorted)?;
        let cmp = match scenario.regime {
            RegimeClaim::SAlpha { alpha } => {
                let asym = asymptote_sup_tail(m, alpha)?;
                report.asymptotes.push(summarize(Series::Sup, &asym));
                compare_sorted(&sorted, |t| asym.eval(t), &grid, &regime)?
            }
            _ => empirical_tail_sorted(&sorted, &grid)?,
        };
        cmp.write_csv(create(&dir, Series::Sup.file())?, &header)?;
        report.comparisons.push((Series::Sup, cmp));
    }

    if sizes.recurrence > 0 {
        report.recurrence = Some(verify_random_recurrence(
            m,
            &scenario.sampler,
            seed,
            sizes.recurrence,
            scenario.recurrence_local_time,
            w,
        )?);
    }

    for spec in &scenario.verdicts {
        let v = evaluate(spec, scenario, &mut report, functional_sorted.as_ref(), areas_sorted.as_ref());
        report.verdicts.push(v);
    }
    report.passed = report.verdicts.iter().all(|v| v.pass);
    let mut out = create(&dir, "summary.json")?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(report)
}

fn fail(name: String, detail: impl Into<String>) -> Verdict {
    Verdict {
        name,
        pass: false,
        values: Vec::new(),
        detail: detail.into(),
    }
}

fn evaluate(
    spec: &VerdictSpec,
    scenario: &Scenario,
    report: &mut Report,
    functional: Option<&SortedSample>,
    areas: Option<&SortedSample>,
) -> Verdict {
    let name = spec.label();
    let m = &scenario.model;
    let ratios_of = |series: Series| -> Vec<(f64, f64)> {
        report
            .comparison(series)
            .map(|c| c.points.iter().filter_map(|p| p.ratio.map(|r| (p.t, r))).collect())
            .unwrap_or_default()
    };
    match spec {
        VerdictSpec::RatioBand { series, at, every, lo, hi } => {
            let pts = ratios_of(*series);
            let chosen: Vec<(f64, f64)> = if *every {
                pts
            } else if let Some(t) = at {
                pts.into_iter().filter(|p| (p.0 - t).abs() <= 1e-9 * t.abs()).collect()
            } else {
                pts.last().copied().into_iter().collect()
            };
            if chosen.is_empty() {
                return fail(name, "no reported ratio at the requested point");
            }
            let pass = chosen.iter().all(|p| p.1 >= *lo && p.1 <= *hi);
            Verdict {
                name,
                pass,
                values: chosen.iter().map(|p| p.1).collect(),
                detail: format!(
                    "ratios {:?} at t = {:?}, band [{lo}, {hi}]",
                    chosen.iter().map(|p| p.1).collect::<Vec<_>>(),
                    chosen.iter().map(|p| p.0).collect::<Vec<_>>()
                ),
            }
        }
        VerdictSpec::TowardOne { series } => {
            let r: Vec<f64> = ratios_of(*series).into_iter().map(|p| p.1).collect();
            Verdict {
                name,
                pass: moves_toward_one(&r),
                detail: format!("ratios {r:?}"),
                values: r,
            }
        }
        VerdictSpec::Decreasing { series } => {
            let r: Vec<f64> = ratios_of(*series).into_iter().map(|p| p.1).collect();
            Verdict {
                name,
                pass: r.len() >= 2 && r.windows(2).all(|w| w[1] < w[0]),
                detail: format!("ratios {r:?}"),
                values: r,
            }
        }
        VerdictSpec::OracleCi { t } => {
            let (Some(sorted), Ok(law)) = (functional, DufresneLaw::for_model(m)) else {
                return fail(name, "needs Brownian samples");
            };
            let n = sorted.len() as u64;
            let mut values = Vec::new();
            let mut pass = true;
            let mut detail = String::new();
            for &t in t {
                let k = sorted.exceedances(t);
                let (lo, hi) = clopper_pearson(k, n, CI_LEVEL);
                let exact = law.survival(t);
                let ok = lo <= exact && exact <= hi;
                pass &= ok;
                values.extend([t, exact, lo, hi]);
                detail.push_str(&format!("t={t}: exact {exact:.4e} in [{lo:.4e}, {hi:.4e}] {ok}; "));
            }
            Verdict { name, pass, values, detail }
        }
        VerdictSpec::KsOracle { max } => match report.ks {
            Some(ks) => Verdict {
                name,
                pass: ks < *max,
                values: vec![ks],
                detail: format!("KS {ks:.5} vs {max}"),
            },
            None => fail(name, "no oracle KS distance"),
        },
        VerdictSpec::DtHalving => match (report.ks, report.ks_refined) {
            (Some(a), Some(b)) => Verdict {
                name,
                pass: b <= a,
                values: vec![a, b],
                detail: format!("KS at dt {a:.6}, at dt/2 {b:.6}"),
            },
            _ => fail(name, "dt-halving run missing"),
        },
        VerdictSpec::TailIndex { series, method, target, tol } => {
            let sorted = match series {
                Series::Functional => functional,
                Series::Excursion => areas,
                Series::Sup => None,
            };
            let Some(sorted) = sorted else {
                return fail(name, "series has no samples");
            };
            match tail_index_fit(sorted.values(), *method) {
                Ok(fit) => {
                    let v = Verdict {
                        name,
                        pass: (fit.estimate - target).abs() <= *tol,
                        values: vec![fit.estimate, fit.stderr],
                        detail: format!("estimate {:.4} ± {:.4}, target {target} ± {tol}", fit.estimate, fit.stderr),
                    };
                    report.tail_index.push((*series, fit));
                    v
                }
                Err(e) => fail(name, e.to_string()),
            }
        }
        VerdictSpec::ConstantRatio { tol } => {
            let RegimeClaim::SAlpha { alpha } = scenario.regime else {
                return fail(name, "needs s_alpha");
            };
            let r = (|| -> Result<(f64, f64)> {
                let t1 = asymptote_theorem1(m, alpha, MomentSource::Exact)?;
                let t2 = asymptote_theorem2(m, alpha, MomentSource::Exact)?;
                Ok((t2.constant / t1.constant, m.ladder_drift()? * alpha))
            })();
            match r {
                Ok((ratio, want)) => Verdict {
                    name,
                    pass: ((ratio - want) / want).abs() <= *tol,
                    values: vec![ratio, want],
                    detail: format!("excursion / functional constant = {ratio:.15}, dα = {want}"),
                },
                Err(e) => fail(name, e.to_string()),
            }
        }
        VerdictSpec::Recurrence => match &report.recurrence {
            Some(r) => Verdict {
                name,
                pass: r.pass,
                values: vec![r.ks, r.threshold],
                detail: format!("two-sample KS {:.5} vs threshold {:.5}", r.ks, r.threshold),
            },
            None => fail(name, "recurrence check not run"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_five_round_tripping_entries() {
        let cat = list_builtin();
        assert_eq!(cat.len(), 5);
        let names: Vec<&str> = cat.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(
            names,
            ["dufresne-theta1", "dufresne-theta2", "cp-salpha2", "cp-cramer-exp", "cp-mz-pareto"]
        );
        for s in &cat {
            s.validate().unwrap();
            let back = Scenario::from_json(&s.to_json()).unwrap();
            assert_eq!(&back, s);
        }
    }

    #[test]
    fn mz_builtin_has_certified_positive_mean() {
        let s = builtin("cp-mz-pareto").unwrap();
        assert!(matches!(s.model.jump_law(), Some(JumpLaw::Pareto { index, .. }) if *index == 3.0));
        let mu = -s.model.mean_increment().unwrap();
        assert!((mu - 1.0).abs() < 1e-12);
        let cert = validate_regime(&s.model, s.regime);
        assert!(cert.passed, "{:?}", cert.failures());
    }

    #[test]
    fn builtin_certificates_pass() {
        for s in list_builtin() {
            let cert = validate_regime(&s.model, s.regime);
            assert!(cert.passed, "{}: {:?}", s.name, cert.failures());
        }
    }

    #[test]
    fn missing_seed_is_a_schema_error() {
        let mut v: serde_json::Value = serde_json::from_str(&list_builtin()[2].to_json()).unwrap();
        v.as_object_mut().unwrap().remove("seed");
        let err = Scenario::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn verdict_needing_absent_series_names_the_field() {
        let mut s = builtin("cp-cramer-exp").unwrap();
        s.sizes.excursions = 0;
        match s.validate().unwrap_err() {
            Error::Validation { field, .. } => assert_eq!(field, "verdicts[0]"),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn hash_covers_model_seed_and_version() {
        let s = builtin("cp-salpha2").unwrap();
        let mut t = s.clone();
        assert_eq!(s.hash(), t.hash());
        t.seed += 1;
        assert_ne!(s.hash(), t.hash());
        let mut u = s.clone();
        u.sizes.samples = 7;
        assert_eq!(s.hash(), u.hash());
        assert_eq!(s.hash().len(), 64);
        assert!(s.header().contains(VERSION));
    }

    #[test]
    fn top_decades_grid() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        let s = SortedSample::new(&v).unwrap();
        let g = GridSpec::TopDecades { min_count: 50, decades: 2.0, points: 3 }.resolve(&s).unwrap();
        assert_eq!(s.exceedances(g[2]), 50);
        assert!((g[2] / g[0] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn failing_certificate_blocks_unless_forced() {
        let mut s = builtin("cp-salpha2").unwrap();
        s.regime = RegimeClaim::Cramer { theta: None };
        s.sizes = SampleSizes { samples: 2000, ..Default::default() };
        s.verdicts.clear();
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            out_dir: Some(dir.path().into()),
            ..Default::default()
        };
        assert!(matches!(run_scenario(&s, &opts), Err(Error::Certificate(_))));
        s.regime = RegimeClaim::SubexponentialMz;
        let forced = RunOptions { force: true, ..opts };
        let r = run_scenario(&s, &forced).unwrap();
        assert!(!r.certificate.passed);
        assert!(r.passed);
    }
}
