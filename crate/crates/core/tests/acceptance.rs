//! Acceptance suite: twelve criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p expfun-core --test acceptance`. Failing
//! criteria are reported but only make the process exit non-zero when
//! `EXPFUN_ACCEPTANCE_STRICT=1` is set.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use expfun::asymptotics::{
    mc_moment, moment, moment_by_recursion, moment_inverse, DufresneLaw, MomentSource,
};
use expfun::ladder::{extract_ladder, verify_identity_many, verify_pathwise_identity};
use expfun::pathsim::{integrate_exp, sample_many, PathSkeleton, SamplerControl};
use expfun::scenario::{builtin, list_builtin, run_scenario, Report, RunOptions, Scenario};
use expfun::{JumpLaw, LevyModel};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn verdict_line(r: &Report, name: &str) -> (bool, String) {
    match r.verdict(name) {
        Some(v) => (v.pass, format!("{name} {}: {}", if v.pass { "ok" } else { "FAILED" }, v.detail)),
        None => (false, format!("{name} missing")),
    }
}

fn verdicts(r: &Report, names: &[&str]) -> Outcome {
    let mut pass = true;
    let mut lines = Vec::new();
    for n in names {
        let (p, l) = verdict_line(r, n);
        pass &= p;
        lines.push(l);
    }
    outcome(pass, lines.join("\n      "))
}

fn run(s: &Scenario, root: &Path, workers: Option<usize>) -> (Report, Duration) {
    let t = Instant::now();
    let opts = RunOptions {
        workers,
        force: false,
        out_dir: Some(root.to_path_buf()),
        write_samples: true,
    };
    let r = run_scenario(s, &opts).unwrap_or_else(|e| panic!("{}: {e}", s.name));
    (r, t.elapsed())
}

fn criterion_1(r: &Report, took: Duration) -> Outcome {
    let mut o = verdicts(r, &["ks_oracle", "dt_halving"]);
    let fast = took <= Duration::from_secs(300);
    o.pass &= fast;
    o.detail.push_str(&format!("\n      runtime {:.0} s (limit 300 s)", took.as_secs_f64()));
    o
}

fn criterion_2(r: &Report) -> Outcome {
    verdicts(r, &["ratio_band:functional", "oracle_ci:functional", "tail_index:functional"])
}

fn criterion_3() -> Outcome {
    let m = LevyModel::brownian(-3.0, 2.0).unwrap();
    let law = DufresneLaw::for_model(&m).unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    let exact = [(0u32, 1.0), (1, 0.5), (2, 0.5)];
    for (g, want) in exact {
        let rec = moment_by_recursion(&m, g).unwrap();
        let prod = moment(&m, f64::from(g), MomentSource::Exact).unwrap().value;
        let ok = rec == want && prod == want && (law.moment(f64::from(g)) - want).abs() < 1e-12;
        pass &= ok;
        notes.push(format!("E(I^{g}): recursion {rec}, product {prod}, exact {want} {ok}"));
    }
    let samples = sample_many(&m, &SamplerControl::default(), 3, 100_000, None).unwrap();
    for (g, want) in [(1.0, 0.5), (2.0, 0.5), (-1.0, moment_inverse(&m).unwrap())] {
        let (mean, se) = mc_moment(&samples, g);
        let ok = (mean - want).abs() <= 3.0 * se;
        pass &= ok;
        notes.push(format!("MC E(I^{g}) = {mean:.5} ± {se:.5} vs {want} {ok}"));
    }
    outcome(pass, notes.join("\n      "))
}

fn criterion_4() -> Outcome {
    let m = LevyModel::compound_poisson(-1.0, 0.5, JumpLaw::Exponential { rate: 1.0 }).unwrap();
    let rep = verify_identity_many(&m, 4, 1000, 50.0, 64, None).unwrap();
    let p = PathSkeleton {
        drift: -1.0,
        horizon: 2.0,
        jump_times: vec![1.0],
        jump_sizes: vec![1.0],
        gaussian: None,
    };
    let d = extract_ladder(&m, &p).unwrap();
    let want = 2.0 * (1.0 - (-1.0f64).exp());
    let hand = (d.y_integral(1.0) - want).abs().max((integrate_exp(&p, 2.0) - want).abs());
    let hand_id = verify_pathwise_identity(&p, &d, &[0.25, 0.5, 1.0]);
    outcome(
        rep.max_error < 1e-9 && hand < 1e-12 && hand_id < 1e-12,
        format!(
            "1000 paths: max error {:.2e} (< 1e-9), {:.1} excursions per path; hand path off by {hand:.1e}, identity {hand_id:.1e}",
            rep.max_error, rep.mean_excursions
        ),
    )
}

fn criterion_5(r: &Report, took: Duration) -> Outcome {
    let mut o = verdicts(r, &["ratio_band:functional", "toward_one:functional"]);
    o.pass &= took <= Duration::from_secs(1800);
    o.detail.push_str(&format!("\n      scenario runtime {:.0} s (limit 1800 s)", took.as_secs_f64()));
    o
}

fn criterion_6(r: &Report) -> Outcome {
    verdicts(r, &["ratio_band:excursion", "toward_one:excursion", "constant_ratio"])
}

fn criterion_7(r: &Report) -> Outcome {
    verdicts(r, &["tail_index:excursion", "ratio_band:excursion"])
}

fn criterion_8(r: &Report) -> Outcome {
    verdicts(r, &["decreasing:excursion"])
}

fn criterion_9(r: &Report) -> Outcome {
    verdicts(r, &["ratio_band:functional", "toward_one:functional"])
}

fn criterion_10(r: &Report) -> Outcome {
    verdicts(r, &["ratio_band:sup", "toward_one:sup"])
}

fn criterion_11(r: &Report) -> Outcome {
    verdicts(r, &["recurrence"])
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
    }
    out
}

fn criterion_12(root: &Path) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for mut s in list_builtin() {
        let z = &mut s.sizes;
        for n in [&mut z.samples, &mut z.excursions, &mut z.sup_paths, &mut z.recurrence] {
            *n = (*n / 50).min(4_000);
        }
        let a = root.join("w1");
        let b = root.join("w3");
        run(&s, &a, Some(1));
        run(&s, &b, Some(3));
        let (ta, tb) = (read_tree(&a.join(&s.name)), read_tree(&b.join(&s.name)));
        let same = ta == tb && ta.len() >= 3;
        pass &= same;
        notes.push(format!("{}: {} files identical {same}", s.name, ta.len()));
    }
    outcome(pass, notes.join("; "))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("tempdir");
    let root = tmp.path();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, title: &'static str, o: Outcome| {
        println!("{} criterion {n:>2} {title}\n      {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, title, o));
    };

    let (duf, duf_t) = run(&builtin("dufresne-theta2").unwrap(), root, None);
    report(1, "Dufresne law oracle", criterion_1(&duf, duf_t));
    report(2, "Cramér asymptote", criterion_2(&duf));
    drop(duf);
    report(3, "moment machinery", criterion_3());
    report(4, "pathwise identity", criterion_4());

    let (sa, sa_t) = run(&builtin("cp-salpha2").unwrap(), root, None);
    report(5, "convolution-equivalent tail ratio", criterion_5(&sa, sa_t));
    report(6, "excursion tail ratio", criterion_6(&sa));

    let (cr, _) = run(&builtin("cp-cramer-exp").unwrap(), root, None);
    report(7, "excursion power law", criterion_7(&cr));

    let (mz, _) = run(&builtin("cp-mz-pareto").unwrap(), root, None);
    report(8, "vanishing excursion ratio", criterion_8(&mz));
    report(9, "MZ asymptote", criterion_9(&mz));

    report(10, "supremum tail", criterion_10(&sa));
    report(11, "random recurrence", criterion_11(&sa));
    report(12, "reproducibility across worker counts", criterion_12(&root.join("repro")));

    let failed: Vec<String> = results.iter().filter(|r| !r.2.pass).map(|r| r.0.to_string()).collect();
    println!(
        "\nacceptance: {} of {} criteria pass{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() { String::new() } else { format!("; failing: {}", failed.join(", ")) }
    );
    let strict = std::env::var("EXPFUN_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed.is_empty() || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
