//! Closed forms for parallel plates (`ħ = c = 1`, Dirichlet unless noted).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::numerics::{bessel_k2, integrate_1d};
use crate::{Error, Result};

/// Riemann ζ(4).
pub const ZETA4: f64 = PI * PI * PI * PI / 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateSpec {
    pub a: f64,
    pub area: f64,
}

impl PlateSpec {
    pub fn new(a: f64, area: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(area > 0.0 && area.is_finite()) {
            return Err(Error::Config(format!("plates need a > 0 and S > 0, got a = {a}, S = {area}")));
        }
        Ok(Self { a, area })
    }
}

/// Sum over all even reflection classes: `−π² S / (1440 a³)`.
pub fn plates_even_closed_form(spec: &PlateSpec) -> f64 {
    -PI * PI * spec.area / (1440.0 * spec.a.powi(3))
}

/// Even classes `2, 4, …, 2N`: `−(S/π²) Σ a/(2na)⁴`.
pub fn plates_even_partial(spec: &PlateSpec, n_terms: usize) -> f64 {
    let a = spec.a;
    let s: f64 = (1..=n_terms).rev().map(|n| a / (2.0 * n as f64 * a).powi(4)).sum();
    -spec.area / (PI * PI) * s
}

/// Leading divergent behavior of the odd classes under point splitting at
/// separation `epsilon`: `S / (8π ε³)`.
pub fn plates_odd_regulated(spec: &PlateSpec, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("cutoff must be positive, got {epsilon}")));
    }
    if epsilon >= spec.a {
        return Err(Error::Precision(format!(
            "cutoff {epsilon} is not small against the separation {}",
            spec.a
        )));
    }
    Ok(spec.area / (8.0 * PI * epsilon.powi(3)))
}

/// Odd classes `1, 3, …` up to `max_order`, with the one-reflection class
/// regulated as `ℓ⁻⁴ → (ℓ² + ε²)⁻²`, by 1D quadrature over the base point
/// height. Each order covers both plates.
pub fn plates_odd_regulated_sum(spec: &PlateSpec, epsilon: f64, max_order: usize) -> f64 {
    let a = spec.a;
    let mut total = 0.0;
    for n in (1..=max_order).step_by(2) {
        let k = ((n - 1) / 2) as f64;
        let f = |z: f64| {
            let l = 2.0 * z + 2.0 * k * a;
            if n == 1 {
                1.0 / (l * l + epsilon * epsilon).powi(2)
            } else {
                1.0 / l.powi(4)
            }
        };
        // split at the regulator scale so the peak is resolved
        let mut v = 0.0;
        let mut lo = 0.0;
        for hi in [epsilon.min(a), (10.0 * epsilon).min(a), a] {
            if hi > lo {
                v += integrate_1d(f, lo, hi, 0.0, 1e-12, 2000).value;
                lo = hi;
            }
        }
        total += v;
    }
    // −(1/2π²)·(−1)ⁿ·S·2 plates
    spec.area / (PI * PI) * total
}

/// Two-reflection class of a massive field: `−S m² K₂(2ma) / (8π² a)`,
/// reducing to `−S/(16π² a³)` at `m = 0`.
pub fn plates_massive_two_reflection(spec: &PlateSpec, m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(Error::Domain(format!("mass must be non-negative, got {m}")));
    }
    let a = spec.a;
    if m == 0.0 {
        return Ok(-spec.area / (16.0 * PI * PI * a.powi(3)));
    }
    Ok(-spec.area * m * m * bessel_k2(2.0 * m * a)? / (8.0 * PI * PI * a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> PlateSpec {
        PlateSpec::new(1.0, 1.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn even_closed_form_values() {
        assert!(rel(plates_even_closed_form(&unit()), -6.85389e-3) < 1e-5);
        assert!(rel(plates_even_closed_form(&PlateSpec::new(2.0, 1.0).unwrap()), -8.56737e-4) < 1e-5);
        assert!(rel(plates_even_closed_form(&PlateSpec::new(1.0, 10.0).unwrap()), -6.85389e-2) < 1e-5);
    }

    #[test]
    fn even_partial_fractions() {
        for spec in [unit(), PlateSpec::new(0.3, 7.0).unwrap()] {
            let full = plates_even_closed_form(&spec);
            assert!((plates_even_partial(&spec, 1) / full - 90.0 / PI.powi(4)).abs() < 1e-14);
            assert!((plates_even_partial(&spec, 1) / full - 0.923938).abs() < 1e-6);
            assert!((plates_even_partial(&spec, 2) / full - 0.981684).abs() < 1e-6);
            assert!((plates_even_partial(&spec, 100_000) / full - 1.0).abs() < 1e-12);
        }
        assert!(rel(plates_even_partial(&unit(), 1), -1.0 / (16.0 * PI * PI)) < 1e-15);
    }

    #[test]
    fn odd_leading_form() {
        assert!(rel(plates_odd_regulated(&unit(), 0.01).unwrap(), 3.97887e4) < 1e-5);
        let v1 = plates_odd_regulated(&unit(), 0.01).unwrap();
        let v2 = plates_odd_regulated(&unit(), 0.005).unwrap();
        assert!(rel(v2, 8.0 * v1) < 1e-14);
        assert!(matches!(plates_odd_regulated(&unit(), 1.0), Err(Error::Precision(_))));
    }

    #[test]
    fn odd_regulated_sum_matches_leading_form() {
        // with every order included the sum tends to S/(8πε³) up to O(ε²/a²)
        for eps in [0.05, 0.02] {
            let leading = plates_odd_regulated(&unit(), eps).unwrap();
            let summed = plates_odd_regulated_sum(&unit(), eps, 2001);
            assert!(rel(summed, leading) < 2.0 * eps, "{summed} vs {leading}");
        }
    }

    #[test]
    fn odd_sum_is_independent_of_separation() {
        // a-derivative by central differences
        let eps = 0.02;
        let e = |a: f64| plates_odd_regulated_sum(&PlateSpec::new(a, 1.0).unwrap(), eps, 4001);
        for a in [0.5, 1.0, 2.0] {
            let h = 1e-3 * a;
            let d = (e(a + h) - e(a - h)) / (2.0 * h);
            // truncation at order 4001 leaves a tail derivative of order 1e-10
            assert!(d.abs() < 1e-6 * e(a), "a = {a}: dE/da = {d}");
        }
    }

    #[test]
    fn massive_two_reflection() {
        let s = unit();
        assert!(rel(plates_massive_two_reflection(&s, 0.0).unwrap(), -6.3326e-3) < 1e-4);
        assert!(rel(plates_massive_two_reflection(&s, 1e-6).unwrap(), plates_massive_two_reflection(&s, 0.0).unwrap()) < 1e-9);
        let heavy = plates_massive_two_reflection(&s, 5.0).unwrap();
        assert!(heavy.abs() < (-10.0f64).exp() * 25.0 / (8.0 * PI * PI) * 100.0);
        // K₂(2) from ∫₀^∞ exp(−2 cosh t) cosh 2t dt
        let k2 = integrate_1d(|t| (-2.0 * t.cosh()).exp() * (2.0 * t).cosh(), 0.0, 8.0, 0.0, 1e-13, 500).value;
        assert!(rel(plates_massive_two_reflection(&s, 1.0).unwrap(), -k2 / (8.0 * PI * PI)) < 1e-10);
        // monotone toward zero
        let mut prev = plates_massive_two_reflection(&s, 0.0).unwrap();
        for i in 1..200 {
            let v = plates_massive_two_reflection(&s, i as f64 * 0.05).unwrap();
            assert!(v > prev && v < 0.0);
            prev = v;
        }
        assert!(plates_massive_two_reflection(&s, -1.0).is_err());
    }
}
