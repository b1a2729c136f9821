use expfun::asymptotics::DufresneLaw;
use expfun::pathsim::{sample_many, supremum_many, SamplerControl};
use expfun::tailstats::{clopper_pearson, ks_critical_one_sample, ks_one_sample, SortedSample};
use expfun::{JumpLaw, LevyModel};

fn values(m: &LevyModel, ctrl: &SamplerControl, seed: u64, n: usize, w: Option<usize>) -> Vec<f64> {
    sample_many(m, ctrl, seed, n, w).unwrap().iter().map(|s| s.value).collect()
}

#[test]
fn brownian_functional_matches_dufresne_law() {
    let m = LevyModel::brownian(-1.0, 2.0).unwrap();
    let ctrl = SamplerControl { remainder_cap: Some(1e6), ..SamplerControl::default() };
    let v = values(&m, &ctrl, 11, 4000, None);
    let law = DufresneLaw::for_model(&m).unwrap();
    let ks = ks_one_sample(&v, |x| law.cdf(x)).unwrap();
    assert!(ks < ks_critical_one_sample(v.len()), "KS {ks}");
}

#[test]
fn compound_poisson_mean_is_inverse_of_minus_psi_one() {
    let m = LevyModel::compound_poisson(-1.0, 0.5, JumpLaw::Exponential { rate: 3.0 }).unwrap();
    let want = -1.0 / m.laplace_exponent(1.0).unwrap();
    assert!((want - 4.0 / 3.0).abs() < 1e-12);
    let v = values(&m, &SamplerControl::default(), 5, 20_000, None);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - want).abs() < 4.0 * sd / n.sqrt(), "mean {mean} vs {want}");
}

// Exact values from the Pollaczek–Khinchine series of the ladder heights,
// evaluated on a fine FFT grid.
#[test]
fn supremum_tail_matches_ladder_height_series() {
    let m = LevyModel::compound_poisson(-1.0, 0.5, JumpLaw::GammaExp { alpha: 2.0, beta: 2.0 }).unwrap();
    let sup = supremum_many(&m, &SamplerControl::default(), 8, 100_000, None).unwrap();
    let s = SortedSample::new(&sup).unwrap();
    let n = s.len() as u64;
    for (t, exact) in [
        (0.0, 0.1386713831117776),
        (0.973, 0.009426112341127557),
        (1.845, 0.0010883033003356024),
    ] {
        let (lo, hi) = clopper_pearson(s.exceedances(t), n, 0.999);
        assert!(lo <= exact && exact <= hi, "P(S > {t}) = {exact} outside [{lo}, {hi}]");
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let m = LevyModel::compound_poisson(-1.0, 0.5, JumpLaw::Pareto { index: 3.0, scale: 1.0 }).unwrap();
    let ctrl = SamplerControl { remainder_cap: Some(1e30), ..SamplerControl::default() };
    let a = sample_many(&m, &ctrl, 3, 500, Some(1)).unwrap();
    let b = sample_many(&m, &ctrl, 3, 500, Some(4)).unwrap();
    assert_eq!(a, b);
    let bm = LevyModel::brownian(-2.0, 2.0).unwrap();
    assert_eq!(values(&bm, &SamplerControl::default(), 1, 50, Some(1)), values(&bm, &SamplerControl::default(), 1, 50, Some(3)));
}

#[test]
fn different_seeds_give_different_draws() {
    let m = LevyModel::brownian(-2.0, 2.0).unwrap();
    let c = SamplerControl::default();
    assert_ne!(values(&m, &c, 1, 20, None), values(&m, &c, 2, 20, None));
}
