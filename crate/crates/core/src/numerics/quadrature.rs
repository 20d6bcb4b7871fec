//! Globally adaptive Gauss–Kronrod (7/15) quadrature, and nested use of it
//! for slab (1D in `z`) and axisymmetric (2D in `r, z`) volume integrals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rayon::prelude::*;

use super::{IntegralEstimate, IntegratorConfig, Region};
use crate::geometry::Point3;
use crate::Result;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, center)
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Abscissae of the 15-point rule on `[a, b]`, in a fixed order.
fn nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [c; 15];
    for j in 0..7 {
        x[2 * j] = c - h * XGK[j];
        x[2 * j + 1] = c + h * XGK[j];
    }
    x
}

/// Kronrod estimate and error from values at [`nodes`].
fn combine(a: f64, b: f64, fv: &[f64; 15]) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let mut k = WGK[7] * fv[14];
    let mut g = WG[3] * fv[14];
    for j in 0..7 {
        let pair = fv[2 * j] + fv[2 * j + 1];
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    let err = ((k - g) * h).abs();
    (k * h, err)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: u64,
    pub converged: bool,
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Adaptive integration driver. `eval` receives a batch of abscissae and
/// returns the integrand at each, which lets callers evaluate in parallel.
fn adaptive<E>(eval: E, a: f64, b: f64, abs_tol: f64, rel_tol: f64, limit: usize) -> QuadResult
where
    E: Fn(&[f64]) -> Vec<f64>,
{
    let rule = |lo: f64, hi: f64, fv: &[f64]| {
        let arr: [f64; 15] = fv.try_into().expect("15 values");
        let (value, error) = combine(lo, hi, &arr);
        Interval { a: lo, b: hi, value, error }
    };
    let first = rule(a, b, &eval(&nodes(a, b)));
    let mut evaluations = 15u64;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut intervals = 1;
    let tolerance = |v: f64| abs_tol.max(rel_tol * v.abs());
    while total_err > tolerance(total) && intervals < limit {
        let worst = heap.pop().expect("non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let mut xs = nodes(worst.a, mid).to_vec();
        xs.extend_from_slice(&nodes(mid, worst.b));
        let fv = eval(&xs);
        evaluations += 30;
        let left = rule(worst.a, mid, &fv[..15]);
        let right = rule(mid, worst.b, &fv[15..]);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        intervals += 1;
    }
    // re-sum to shed the drift of the incremental updates
    let mut intervals: Vec<Interval> = heap.into_vec();
    intervals.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = super::KahanSum::default();
    let mut error = 0.0;
    for iv in &intervals {
        value.add(iv.value);
        error += iv.error;
    }
    let value = value.value();
    QuadResult {
        value,
        error,
        evaluations,
        converged: error <= tolerance(value),
    }
}

/// Adaptive 1D integral of `f` over `[a, b]` (finite).
pub fn integrate_1d<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, limit: usize) -> QuadResult
where
    F: Fn(f64) -> f64,
{
    adaptive(|xs| xs.iter().map(|&x| f(x)).collect(), a, b, abs_tol, rel_tol, limit)
}

fn limit(cfg: &IntegratorConfig) -> usize {
    100 * cfg.max_passes.max(1)
}

/// Integral over a slab region of an integrand that depends on `z` only.
pub fn integrate_slab<F>(f: F, region: &Region, cfg: &IntegratorConfig) -> Result<IntegralEstimate>
where
    F: Fn(&Point3) -> Option<f64> + Sync,
{
    let Region::Slab { side, z } = region else {
        return Err(crate::Error::Config("slab quadrature needs a slab region".into()));
    };
    let area = side * side;
    let counts = std::sync::atomic::AtomicU64::new(0);
    let r = adaptive(
        |us| {
            us.par_iter()
                .map(|&u| {
                    let (zz, jz) = z.map(u);
                    match f(&Point3::new(0.0, 0.0, zz)) {
                        Some(v) => v * jz * area,
                        None => {
                            counts.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                            0.0
                        }
                    }
                })
                .collect()
        },
        0.0,
        1.0,
        0.0,
        cfg.rel_tol,
        limit(cfg),
    );
    let excluded = counts.into_inner();
    Ok(IntegralEstimate {
        value: r.value,
        std_error: r.error,
        excluded,
        evaluated: r.evaluations - excluded,
        converged: r.converged,
    })
}

/// `2π ∫∫ f(r, z) r dr dz` over a cylindrical region, by nested adaptive
/// quadrature (outer in `r`, inner in `z`). Deterministic.
pub fn integrate_axisymmetric<F>(
    f: F,
    region: &Region,
    cfg: &IntegratorConfig,
) -> Result<IntegralEstimate>
where
    F: Fn(f64, f64) -> Option<f64> + Sync,
{
    let Region::Cylinder { r: r_axis, z: z_axis } = region else {
        return Err(crate::Error::Config("axisymmetric quadrature needs a cylinder region".into()));
    };
    let inner_tol = 0.1 * cfg.rel_tol;
    let lim = limit(cfg);
    let excluded = std::sync::atomic::AtomicU64::new(0);
    let inner_ok = std::sync::atomic::AtomicBool::new(true);
    let inner_evals = std::sync::atomic::AtomicU64::new(0);
    let column = |ur: f64| -> f64 {
        let (r, jr) = r_axis.map(ur);
        let q = adaptive(
            |uzs| {
                uzs.iter()
                    .map(|&uz| {
                        let (z, jz) = z_axis.map(uz);
                        match f(r, z) {
                            Some(v) => v * jz,
                            None => {
                                excluded.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                                0.0
                            }
                        }
                    })
                    .collect()
            },
            0.0,
            1.0,
            0.0,
            inner_tol,
            lim,
        );
        inner_evals.fetch_add(q.evaluations, std::sync::atomic::Ordering::Relaxed);
        if !q.converged && q.error > 0.0 {
            inner_ok.store(false, std::sync::atomic::Ordering::Relaxed);
        }
        2.0 * PI * r * jr * q.value
    };
    let outer = adaptive(
        |urs| urs.par_iter().map(|&u| column(u)).collect(),
        0.0,
        1.0,
        0.0,
        cfg.rel_tol,
        lim,
    );
    let excluded = excluded.into_inner();
    Ok(IntegralEstimate {
        value: outer.value,
        std_error: outer.error,
        excluded,
        evaluated: inner_evals.into_inner() - excluded,
        converged: outer.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Axis, Method};

    fn cfg() -> IntegratorConfig {
        IntegratorConfig {
            method: Method::Quadrature,
            rel_tol: 1e-10,
            ..Default::default()
        }
    }

    #[test]
    fn polynomial_exact() {
        let r = integrate_1d(|x| x.powi(5) - 3.0 * x, 0.0, 2.0, 0.0, 1e-14, 10);
        assert!((r.value - (64.0 / 6.0 - 6.0)).abs() < 1e-13);
    }

    #[test]
    fn discontinuous_and_peaked() {
        let r = integrate_1d(|x| if x < 0.3 { 1.0 } else { 0.0 }, 0.0, 1.0, 1e-12, 1e-12, 2000);
        assert!((r.value - 0.3).abs() < 1e-10);
        let eps: f64 = 0.01;
        let r = integrate_1d(|z| 1.0 / (eps * eps + 4.0 * z * z).powi(2), 0.0, 50.0, 0.0, 1e-12, 2000);
        let exact = ((100.0 / eps).atan() / 2.0 + (50.0 / eps) / (1.0 + (100.0 / eps).powi(2)))
            / (2.0 * eps.powi(3));
        assert!((r.value / exact - 1.0).abs() < 1e-10, "{} vs {}", r.value, exact);
    }

    #[test]
    fn cylinder_volume_and_moment() {
        let region = Region::Cylinder {
            r: Axis::Finite { lo: 0.0, hi: 1.0 },
            z: Axis::Finite { lo: 0.0, hi: 1.0 },
        };
        let v = integrate_axisymmetric(|_, _| Some(1.0), &region, &cfg()).unwrap();
        assert!((v.value - PI).abs() < 1e-12);
        let m = integrate_axisymmetric(|r, _| Some(r), &region, &cfg()).unwrap();
        assert!((m.value - 2.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn half_infinite_axes() {
        // ∫ over all space above z=0 of exp(-(r²+z²)) = π^{3/2}/2
        let region = Region::Cylinder {
            r: Axis::Above { lo: 0.0, scale: 1.0 },
            z: Axis::Above { lo: 0.0, scale: 1.0 },
        };
        let v = integrate_axisymmetric(|r, z| Some((-(r * r + z * z)).exp()), &region, &cfg())
            .unwrap();
        assert!((v.value - PI.powf(1.5) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn slab_counts_exclusions() {
        let region = Region::Slab { side: 2.0, z: Axis::Finite { lo: 0.0, hi: 1.0 } };
        let v = integrate_slab(|p| (p.z < 0.5).then_some(1.0), &region, &cfg()).unwrap();
        assert!((v.value - 2.0).abs() < 1e-8);
        assert!(v.excluded > 0 && v.evaluated > 0);
    }
}
