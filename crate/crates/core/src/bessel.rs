//! Bessel functions of the first kind for real order and their zeros.

use crate::error::{Error, Result};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// J_nu(x) for nu >= 0, x >= 0.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0 && x >= 0.0, "bessel_j requires nu >= 0 and x >= 0");
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x < 18.0 + nu {
        series(nu, x)
    } else {
        asymptotic(nu, x)
    }
}

fn series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powf(nu) / gamma(nu + 1.0);
    let mut sum = term;
    let q = half * half;
    for k in 1..500 {
        let kf = k as f64;
        term *= -q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && kf > half {
            break;
        }
    }
    sum
}

// Hankel expansion, truncated at the smallest term.
fn asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 0..40 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        }
        if a.abs() > last {
            break;
        }
        last = a.abs();
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
    }
    let w = x - 0.5 * nu * PI - 0.25 * PI;
    (2.0 / (PI * x)).sqrt() * (p * w.cos() - q * w.sin())
}

/// The `k`-th positive zero (k >= 1) of J_nu, found by scanning for a sign change and bisecting.
pub fn bessel_j_zero(nu: f64, k: usize) -> Result<f64> {
    if k == 0 || nu < 0.0 || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!("bessel zero needs k >= 1 and nu >= 0 (k = {k}, nu = {nu})")));
    }
    let step = 0.02;
    let mut a = nu.max(1e-3);
    let mut fa = bessel_j(nu, a);
    let mut found = 0;
    let limit = nu + 4.0 * (k as f64 + 2.0) * PI + 10.0;
    while a < limit {
        let b = a + step;
        let fb = bessel_j(nu, b);
        if fa == 0.0 || fa * fb < 0.0 {
            found += 1;
            if found == k {
                return Ok(bisect(|x| bessel_j(nu, x), a, b));
            }
        }
        a = b;
        fa = fb;
    }
    Err(Error::NoBracket(format!("J_{nu} zero #{k}")))
}

pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}
