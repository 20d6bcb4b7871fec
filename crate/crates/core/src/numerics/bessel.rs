//! Modified Bessel functions of the second kind, orders 0, 1, 2.
//!
//! `K₀` and `K₁` come from Temme's series for `z ≤ 2` and Steed's continued
//! fraction (CF2) for `z > 2`; both run to double precision. `K₂` follows from
//! the recurrence `K₂ = K₀ + (2/z)·K₁`.

use std::f64::consts::PI;

use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-17;

fn check(z: f64) -> Result<()> {
    if z > 0.0 && !z.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("modified Bessel K needs z > 0, got {z}")))
    }
}

/// `(K₀(z), K₁(z))` for `z > 0`.
fn k0_k1(z: f64) -> (f64, f64) {
    if z.is_infinite() || z > 745.0 {
        return (0.0, 0.0);
    }
    if z <= 2.0 {
        temme_series(z)
    } else {
        steed_cf2(z)
    }
}

fn temme_series(z: f64) -> (f64, f64) {
    let half = 0.5 * z;
    let d = -half.ln();
    // order μ = 0: γ₁ = -γ_E, γ₂ = 1, 1/Γ(1±μ) = 1
    let mut ff = -EULER_GAMMA + d;
    let mut sum = ff;
    let mut p = 0.5;
    let mut q = 0.5;
    let mut c = 1.0;
    let d2 = half * half;
    let mut sum1 = p;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi);
        c *= d2 / fi;
        p /= fi;
        q /= fi;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / z)
}

fn steed_cf2(z: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * z)).sqrt() * (-z).exp() / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    (k0, k1)
}

pub fn bessel_k0(z: f64) -> Result<f64> {
    check(z)?;
    Ok(k0_k1(z).0)
}

pub fn bessel_k1(z: f64) -> Result<f64> {
    check(z)?;
    Ok(k0_k1(z).1)
}

/// `K₂(z)` for `z > 0`. Underflows to 0 for very large `z`.
pub fn bessel_k2(z: f64) -> Result<f64> {
    check(z)?;
    let (k0, k1) = k0_k1(z);
    Ok(k0 + 2.0 / z * k1)
}
