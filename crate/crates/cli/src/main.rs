use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use expfun::asymptotics::{
    asymptote_cramer, asymptote_mz, asymptote_sup_tail, asymptote_theorem1, asymptote_theorem2,
    asymptote_theorem3, cramer_root, moment, moment_inverse, validate_regime,
    verify_random_recurrence, MomentSource, MonteCarlo, RegimeClaim,
};
use expfun::ladder::{excursion_areas, verify_identity_many, ExcursionTailEstimate};
use expfun::pathsim::{sample_many, supremum_many, write_samples_csv, SamplerControl};
use expfun::scenario::{self, excursion_comparison, GridSpec, RunOptions, Scenario, OUT_DIR_ENV};
use expfun::tailstats::{compare_sorted, SortedSample};
use expfun::LevyModel;

#[derive(Parser)]
#[command(name = "expfun", version, about = "Exponential functionals of Lévy processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Model checks.
    Model {
        #[command(subcommand)]
        command: ModelCommand,
    },
    /// Draw samples of I and write them as CSV.
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// E(I^γ) by the product formula, recursion or Monte Carlo.
    Moments {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        gamma: Vec<f64>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Cramér root θ with ψ'(θ) and E(I^{-1}).
    Cramer {
        #[command(flatten)]
        model: ModelArg,
    },
    /// Regime certificate; exits non-zero when a check fails.
    Validate {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        regime: RegimeArgs,
    },
    /// Empirical tail of I against the regime asymptote.
    TailCompare {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        regime: RegimeArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        /// Thresholds; defaults to the 96.8th–99.9th percentiles.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ladder decomposition checks.
    Ladder {
        #[command(subcommand)]
        command: LadderCommand,
    },
    /// Excursion-area tails.
    Excursion {
        #[command(subcommand)]
        command: ExcursionCommand,
    },
    /// Tail of the overall supremum against the S_α asymptote.
    SupTail {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-sample check of I against Q + M·Ĩ.
    RecurrenceCheck {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        t_local: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        sampler: SamplerArgs,
    },
    /// Run a scenario (built-in name or JSON file) and write its report.
    Report {
        scenario: String,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Scale every sample size by this factor.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, env = OUT_DIR_ENV)]
        out_dir: Option<PathBuf>,
        /// Run despite a failing regime certificate.
        #[arg(long)]
        force: bool,
        /// Skip the raw sample tables.
        #[arg(long)]
        no_samples: bool,
    },
    /// List the built-in scenarios.
    List,
    /// Print a built-in scenario as JSON.
    Show { name: String },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Parse a model and print its derived quantities.
    Validate {
        #[command(flatten)]
        model: ModelArg,
    },
}

#[derive(Subcommand)]
enum LadderCommand {
    /// Check ∫₀^{L̂⁻¹_u} e^ξ = ∫₀^u e^{-ĥ} dY on simulated paths.
    Verify {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Subcommand)]
enum ExcursionCommand {
    /// Estimate Π̄_Y on a grid of y.
    Tail {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        ygrid: Vec<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        /// Add the excursion-tail asymptote for this regime.
        #[arg(long, value_enum)]
        regime: Option<Regime>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Draws of I for the moment in the power-law constant.
        #[arg(long, default_value_t = 100_000)]
        moment_samples: usize,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArg {
    /// Model JSON, inline or as a file path.
    #[arg(long)]
    model: String,
}

impl ModelArg {
    fn load(&self) -> Result<LevyModel> {
        let text = if self.model.trim_start().starts_with('{') {
            self.model.clone()
        } else {
            fs::read_to_string(&self.model).with_context(|| format!("reading {}", self.model))?
        };
        Ok(LevyModel::from_json(&text)?)
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct SamplerArgs {
    #[arg(long)]
    barrier: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Bridge-refinement levels applied to the dt grid.
    #[arg(long)]
    refine: Option<u32>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    remainder_cap: Option<f64>,
}

impl SamplerArgs {
    fn control(&self) -> Result<SamplerControl> {
        let mut c = SamplerControl::default();
        if let Some(b) = self.barrier {
            c.barrier = b;
        }
        if let Some(dt) = self.dt {
            c.dt = dt;
        }
        if let Some(r) = self.refine {
            c.refinements = r;
        }
        if let Some(t) = self.rel_tol {
            c.rel_tol = t;
        }
        c.remainder_cap = self.remainder_cap;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Regime {
    SAlpha,
    Mz,
    Cramer,
}

#[derive(Args)]
struct RegimeArgs {
    #[arg(long, value_enum)]
    regime: Regime,
    /// Exponential rate of the S_α class.
    #[arg(long)]
    alpha: Option<f64>,
    /// Claimed Cramér root.
    #[arg(long)]
    theta: Option<f64>,
}

impl RegimeArgs {
    fn claim(&self) -> Result<RegimeClaim> {
        claim(self.regime, self.alpha, self.theta)
    }
}

fn claim(regime: Regime, alpha: Option<f64>, theta: Option<f64>) -> Result<RegimeClaim> {
    Ok(match regime {
        Regime::SAlpha => match alpha {
            Some(alpha) => RegimeClaim::SAlpha { alpha },
            None => bail!("--regime s-alpha needs --alpha"),
        },
        Regime::Mz => RegimeClaim::SubexponentialMz,
        Regime::Cramer => RegimeClaim::Cramer { theta },
    })
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(io::BufWriter::new(fs::File::create(p)?))
        }
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn header(model: &LevyModel, seed: u64) -> String {
    let s = Scenario {
        name: "adhoc".into(),
        description: None,
        model: model.clone(),
        regime: RegimeClaim::SubexponentialMz,
        seed,
        sizes: Default::default(),
        sampler: Default::default(),
        dt_halving: false,
        t_grid: Default::default(),
        y_grid: Default::default(),
        sup_grid: Default::default(),
        recurrence_local_time: 1.0,
        output_dir: None,
        verdicts: Vec::new(),
    };
    s.header()
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn load_scenario(arg: &str) -> Result<Scenario> {
    if let Some(s) = scenario::builtin(arg) {
        return Ok(s);
    }
    let path = Path::new(arg);
    if !path.exists() {
        bail!("`{arg}` is neither a built-in scenario nor a file");
    }
    Ok(Scenario::from_json(&fs::read_to_string(path)?)?)
}

fn grid_or_default(grid: &[f64], sorted: &SortedSample) -> Result<Vec<f64>> {
    if grid.is_empty() {
        Ok(GridSpec::default().resolve(sorted)?)
    } else {
        Ok(grid.to_vec())
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Model { command: ModelCommand::Validate { model } } => {
            let m = model.load()?;
            let dom = m.exp_moment_domain();
            let psi1 = m.laplace_exponent(1.0).ok();
            print_json(&serde_json::json!({
                "model": m,
                "mean_increment": m.mean_increment().ok(),
                "psi_1": psi1,
                "exp_moment_upper": dom.upper,
                "exp_moment_upper_closed": dom.upper_closed,
                "spectrally_positive": m.is_spectrally_positive(),
                "non_arithmetic": m.is_non_arithmetic(),
                "ladder_drift": m.ladder_drift().ok(),
            }))?;
            Ok(true)
        }
        Command::Simulate { model, run, sampler, out } => {
            let m = model.load()?;
            let ctrl = sampler.control()?;
            let s = sample_many(&m, &ctrl, run.seed, run.samples, run.workers)?;
            let mut w = sink(&out)?;
            write_samples_csv(&mut w, &header(&m, run.seed), &s)?;
            w.flush()?;
            Ok(true)
        }
        Command::Moments { model, gamma, run, sampler } => {
            let m = model.load()?;
            let mc = MonteCarlo {
                ctrl: sampler.control()?,
                seed: run.seed,
                samples: run.samples,
                workers: run.workers,
            };
            let needs_mc = gamma.iter().any(|g| g.fract() != 0.0);
            let drawn = if needs_mc { mc.draw(&m)? } else { Vec::new() };
            let mut rows = Vec::new();
            for g in gamma {
                let src = if drawn.is_empty() {
                    MomentSource::Exact
                } else {
                    MomentSource::Samples(&drawn)
                };
                rows.push(moment(&m, g, src)?);
            }
            print_json(&rows)?;
            Ok(true)
        }
        Command::Cramer { model } => {
            let m = model.load()?;
            let theta = cramer_root(&m)?;
            print_json(&serde_json::json!({
                "theta": theta,
                "psi_prime_theta": m.laplace_exponent_derivative(theta).ok(),
                "mu": moment_inverse(&m).ok(),
            }))?;
            Ok(true)
        }
        Command::Validate { model, regime } => {
            let m = model.load()?;
            let cert = validate_regime(&m, regime.claim()?);
            print_json(&cert)?;
            Ok(cert.passed)
        }
        Command::TailCompare { model, regime, run, sampler, grid, out } => {
            let m = model.load()?;
            let claim = regime.claim()?;
            let ctrl = sampler.control()?;
            let s = sample_many(&m, &ctrl, run.seed, run.samples, run.workers)?;
            let values: Vec<f64> = s.iter().map(|x| x.value).collect();
            let sorted = SortedSample::new(&values)?;
            let asym = match claim {
                RegimeClaim::SAlpha { alpha } => asymptote_theorem1(&m, alpha, MomentSource::Samples(&s))?,
                RegimeClaim::SubexponentialMz => asymptote_mz(&m)?,
                RegimeClaim::Cramer { .. } => asymptote_cramer(&m, MomentSource::Samples(&s))?,
            };
            let grid = grid_or_default(&grid, &sorted)?;
            let cmp = compare_sorted(&sorted, |t| asym.eval(t), &grid, &claim.to_string())?;
            let mut w = sink(&out)?;
            cmp.write_csv(&mut w, &header(&m, run.seed))?;
            w.flush()?;
            Ok(true)
        }
        Command::Ladder {
            command: LadderCommand::Verify { model, paths, horizon, seed, tolerance, workers },
        } => {
            let m = model.load()?;
            let r = verify_identity_many(&m, seed, paths, horizon, 64, workers)?;
            print_json(&r)?;
            Ok(r.max_error < tolerance)
        }
        Command::Excursion {
            command: ExcursionCommand::Tail { model, n, ygrid, seed, workers, regime, alpha, moment_samples, sampler, out },
        } => {
            let m = model.load()?;
            let areas = excursion_areas(&m, seed, n, workers)?;
            let sorted = SortedSample::new(&areas)?;
            let est = ExcursionTailEstimate::from_areas(m.jump_rate(), &sorted, &ygrid);
            let mut w = sink(&out)?;
            let h = header(&m, seed);
            match regime {
                None => est.write_csv(&mut w, &h)?,
                Some(r) => {
                    let claim = claim(r, alpha, None)?;
                    let asym = match claim {
                        RegimeClaim::SAlpha { alpha } => asymptote_theorem2(&m, alpha, MomentSource::Exact)?,
                        c => {
                            let mc = MonteCarlo {
                                ctrl: sampler.control()?,
                                seed,
                                samples: moment_samples,
                                workers,
                            };
                            asymptote_theorem3(&m, c, MomentSource::Simulate(&mc))?
                        }
                    };
                    excursion_comparison(&est, Some(|y| asym.eval(y)), &claim.to_string())
                        .write_csv(&mut w, &h)?;
                }
            }
            w.flush()?;
            Ok(true)
        }
        Command::SupTail { model, alpha, run, sampler, grid, out } => {
            let m = model.load()?;
            let ctrl = sampler.control()?;
            let sups = supremum_many(&m, &ctrl, run.seed, run.samples, run.workers)?;
            let sorted = SortedSample::new(&sups)?;
            let asym = asymptote_sup_tail(&m, alpha)?;
            let grid = grid_or_default(&grid, &sorted)?;
            let cmp = compare_sorted(&sorted, |t| asym.eval(t), &grid, "sup")?;
            let mut w = sink(&out)?;
            cmp.write_csv(&mut w, &header(&m, run.seed))?;
            w.flush()?;
            Ok(true)
        }
        Command::RecurrenceCheck { model, n, t_local, seed, workers, sampler } => {
            let m = model.load()?;
            let r = verify_random_recurrence(&m, &sampler.control()?, seed, n, t_local, workers)?;
            print_json(&r)?;
            Ok(r.pass)
        }
        Command::Report { scenario, seed, scale, workers, out_dir, force, no_samples } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            if let Some(f) = scale {
                if !(f > 0.0) {
                    bail!("--scale must be positive");
                }
                let z = &mut s.sizes;
                for n in [&mut z.samples, &mut z.excursions, &mut z.sup_paths, &mut z.recurrence] {
                    if *n > 0 {
                        *n = ((*n as f64 * f).round() as usize).max(1);
                    }
                }
            }
            let opts = RunOptions {
                workers,
                force,
                out_dir,
                write_samples: !no_samples,
            };
            let report = scenario::run_scenario(&s, &opts)?;
            for v in &report.verdicts {
                println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
            }
            println!("output: {}", report.out_dir.display());
            Ok(report.passed)
        }
        Command::List => {
            for s in scenario::list_builtin() {
                println!("{:<16} {}", s.name, s.description.unwrap_or_default());
            }
            Ok(true)
        }
        Command::Show { name } => {
            let s = scenario::builtin(&name).with_context(|| format!("no built-in scenario `{name}`"))?;
            println!("{}", s.to_json());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
