use expfun::asymptotics::{
    asymptote_theorem1, asymptote_theorem2, downward_ladder_exponent, moment, moment_by_recursion,
    upward_ladder_exponent_neg, MomentSource,
};
use expfun::pathsim::{sample_many, SamplerControl};
use expfun::tailstats::{clopper_pearson, compare, tail_index_fit, TailIndexMethod};
use expfun::{JumpLaw, LevyModel, ModelSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(b: f64, s2: f64, rate: f64, law: Option<JumpLaw>) -> LevyModel {
    LevyModel::new(ModelSpec {
        drift: b,
        gaussian_var: s2,
        jump_rate: if law.is_some() { rate } else { 0.0 },
        jump_law: law,
        drift_certificate: None,
    })
    .unwrap()
}

fn jump_law() -> impl Strategy<Value = Option<JumpLaw>> {
    prop_oneof![
        Just(None),
        (2.0f64..6.0).prop_map(|r| Some(JumpLaw::Exponential { rate: r })),
        (2.5f64..5.0, 1.1f64..4.0).prop_map(|(a, b)| Some(JumpLaw::GammaExp { alpha: a, beta: b })),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psi_vanishes_at_zero_and_is_convex(
        b in -3.0f64..-0.5, s2 in 0.0f64..2.0, rate in 0.1f64..1.0, law in jump_law(),
        x in 0.0f64..1.5, y in 0.0f64..1.5,
    ) {
        let m = model(b, s2, rate, law);
        prop_assert_eq!(m.laplace_exponent(0.0).unwrap(), 0.0);
        let mid = m.laplace_exponent(0.5 * (x + y)).unwrap();
        let chord = 0.5 * (m.laplace_exponent(x).unwrap() + m.laplace_exponent(y).unwrap());
        prop_assert!(mid <= chord + 1e-12 * (1.0 + chord.abs()));
    }

    #[test]
    fn wiener_hopf_factors_multiply_to_psi(
        b in -3.0f64..-0.5, rate in 0.1f64..1.0, law in jump_law().prop_filter("jumps", |l| l.is_some()),
        lambda in 0.01f64..1.5,
    ) {
        let m = model(b, 0.0, rate, law);
        let psi = m.laplace_exponent(lambda).unwrap();
        let prod = -upward_ladder_exponent_neg(&m, lambda).unwrap() * downward_ladder_exponent(&m, lambda).unwrap();
        prop_assert!((prod - psi).abs() <= 1e-12 * psi.abs().max(1e-300));
        let at_zero = upward_ladder_exponent_neg(&m, 0.0).unwrap();
        let near = upward_ladder_exponent_neg(&m, 1e-7).unwrap();
        prop_assert!((near - at_zero).abs() < 1e-5 * at_zero);
    }

    #[test]
    fn recursion_agrees_with_product_formula(
        b in -6.0f64..-2.0, s2 in 0.0f64..1.0, rate in 0.1f64..0.5, law in jump_law(), k in 1u32..4,
    ) {
        let m = model(b, s2, rate, law);
        prop_assume!(matches!(m.laplace_exponent(f64::from(k)), Ok(v) if v < 0.0));
        let r = moment_by_recursion(&m, k).unwrap();
        let p = moment(&m, f64::from(k), MomentSource::Exact).unwrap().value;
        prop_assert!((r - p).abs() <= 1e-12 * p, "{} vs {}", r, p);
    }

    #[test]
    fn comparison_is_invariant_under_rescaling(
        seed in any::<u64>(), c in 0.01f64..100.0, theta in 0.3f64..3.0, k in 0.1f64..10.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..2000).map(|_| rng.random::<f64>().powf(-1.0 / theta)).collect();
        let grid = [1.5, 3.0, 6.0];
        let a = compare(&x, |t| k * t.powf(-theta), &grid, "r").unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * c).collect();
        let gs: Vec<f64> = grid.iter().map(|g| g * c).collect();
        let b = compare(&xs, |t| k * c.powf(theta) * t.powf(-theta), &gs, "r").unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            prop_assert_eq!(p.n_exceed, q.n_exceed);
            match (p.ratio, q.ratio) {
                (Some(u), Some(v)) => prop_assert!((u - v).abs() <= 1e-10 * u),
                (None, None) => {}
                _ => prop_assert!(false, "ratio presence differs"),
            }
        }
    }

    #[test]
    fn excursion_and_functional_constants_differ_by_d_alpha(
        b in -6.0f64..-1.0, rate in 0.1f64..0.5, beta in 1.1f64..4.0, alpha in 1u32..3,
    ) {
        let a = f64::from(alpha);
        let m = model(b, 0.0, rate, Some(JumpLaw::GammaExp { alpha: a, beta }));
        prop_assume!(m.laplace_exponent(a).unwrap() < 0.0);
        let t1 = asymptote_theorem1(&m, a, MomentSource::Exact).unwrap();
        let t2 = asymptote_theorem2(&m, a, MomentSource::Exact).unwrap();
        let want = m.ladder_drift().unwrap() * a;
        prop_assert!((t2.constant / t1.constant - want).abs() <= 1e-12 * want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn draws_do_not_depend_on_worker_count(seed in any::<u64>(), workers in 2usize..6) {
        let m = model(-1.0, 0.5, 0.5, Some(JumpLaw::Exponential { rate: 2.0 }));
        let c = SamplerControl { dt: 1e-2, ..SamplerControl::default() };
        prop_assert_eq!(sample_many(&m, &c, seed, 40, Some(1)).unwrap(), sample_many(&m, &c, seed, 40, Some(workers)).unwrap());
    }
}

#[test]
fn clopper_pearson_covers_at_nominal_level() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (n, p) in [(50u64, 0.5), (200, 0.05), (1000, 0.01), (5000, 0.002)] {
        let reps = 1000;
        let mut hits = 0;
        for _ in 0..reps {
            let k = (0..n).filter(|_| rng.random::<f64>() < p).count() as u64;
            let (lo, hi) = clopper_pearson(k, n, 0.99);
            hits += u32::from(lo <= p && p <= hi);
        }
        assert!(hits >= 990, "n={n} p={p}: {hits}/{reps}");
    }
}

#[test]
fn hill_recovers_exact_pareto_index() {
    for (i, alpha) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let x: Vec<f64> = (0..10_000).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)).collect();
        let fit = tail_index_fit(&x, TailIndexMethod::Hill { k: None }).unwrap();
        assert!((fit.estimate - alpha).abs() < 3.0 * fit.stderr, "{alpha}: {fit:?}");
    }
}
