//! Generalized exponential integral `E_p(x) = ∫₁^∞ e^{-xt} t^{-p} dt`.

use statrs::function::gamma::{digamma, gamma};

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

/// `E_p(x)` for `x ≥ 0`, `p > 0` (and `p > 1` when `x = 0`).
pub fn expint(p: f64, x: f64) -> f64 {
    assert!(x >= 0.0 && p > 0.0, "expint({p}, {x}) out of range");
    if x == 0.0 {
        return if p > 1.0 { 1.0 / (p - 1.0) } else { f64::INFINITY };
    }
    if x > 1.0 {
        return continued_fraction(p, x);
    }
    let rounded = p.round();
    if (p - rounded).abs() < 1e-12 {
        integer_series(rounded as i64, x)
    } else {
        real_series(p, x)
    }
}

fn continued_fraction(p: f64, x: f64) -> f64 {
    // Modified Lentz evaluation of the Legendre continued fraction.
    let mut b = x + p;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        let an = -fi * (p - 1.0 + fi);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h * (-x).exp()
}

fn integer_series(n: i64, x: f64) -> f64 {
    let nm1 = n - 1;
    let mut ans = if nm1 != 0 {
        1.0 / nm1 as f64
    } else {
        -x.ln() + digamma(1.0)
    };
    let mut fact = 1.0;
    for i in 1..MAX_ITER as i64 {
        fact *= -x / i as f64;
        let del = if i != nm1 {
            -fact / (i - nm1) as f64
        } else {
            fact * (-x.ln() + digamma(n as f64))
        };
        ans += del;
        if del.abs() < ans.abs() * EPS {
            break;
        }
    }
    ans
}

fn real_series(p: f64, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 0..MAX_ITER {
        if k > 0 {
            term *= -x / k as f64;
        }
        let del = term / (1.0 - p + k as f64);
        sum += del;
        if k > 2 && del.abs() < sum.abs() * EPS {
            break;
        }
    }
    gamma(1.0 - p) * x.powf(p - 1.0) - sum
}
