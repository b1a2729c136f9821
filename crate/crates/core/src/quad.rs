//! Adaptive Gauss–Kronrod quadrature (7/15 point pair) on finite and
//! semi-infinite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Default relative tolerance used throughout the crate.
pub const REL_TOL: f64 = 1e-10;
const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (value, err) = kronrod(&f, a, b);
    let mut panels = vec![Panel { a, b, value, err }];
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if total_err <= (rel_tol * total.abs()).max(1e-300) {
            return Ok(total);
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "error estimate {total_err:e} above tolerance for value {total:e} on [{a}, {b}]"
            )));
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .expect("nonempty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            return Err(Error::Quadrature(format!(
                "interval [{}, {}] cannot be bisected further",
                p.a, p.b
            )));
        }
        for (lo, hi) in [(p.a, mid), (mid, p.b)] {
            let (value, err) = kronrod(&f, lo, hi);
            panels.push(Panel { a: lo, b: hi, value, err });
        }
    }
}

/// Integrates `f` over `[a, ∞)` via the substitution `x = a + t / (1 - t)`.
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64) -> Result<f64> {
    let g = |t: f64| {
        let s = 1.0 - t;
        let x = a + t / s;
        if !x.is_finite() {
            return 0.0;
        }
        let v = f(x);
        if v == 0.0 {
            0.0
        } else {
            v / (s * s)
        }
    };
    integrate(g, 0.0, 1.0, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(v, 8.0, max_relative = 1e-14);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate_to_inf(|x| (-x).exp(), 1.0, 1e-12).unwrap();
        assert_relative_eq!(v, (-1.0f64).exp(), max_relative = 1e-11);
    }

    #[test]
    fn power_tail() {
        let v = integrate_to_inf(|x| x.powi(-3), 1.0, 1e-11).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-10);
    }

    #[test]
    fn non_finite_is_an_error() {
        assert!(integrate(|x| 1.0 / x, 0.0, 1.0, 1e-10).is_err());
    }
}
