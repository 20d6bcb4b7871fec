//! Casimir energy as a sum over closed optical paths, and the proximity
//! force comparators.
//!
//! Class `n` with reflection sequence `s` contributes
//! `−(1/2π²)·σₙ·M·∫_D √Δ/ℓ³ d³x` (`ħ = c = 1`), where `σₙ = (−1)ⁿ` for
//! Dirichlet and `1` for Neumann walls and `M` counts traversal directions.
//! A massive field replaces `√Δ/ℓ³` by `(m²/2)(√Δ/ℓ)K₂(mℓ)`.
//!
//! One-reflection classes diverge at the surfaces. Their value is regulated
//! by point splitting, `ℓ⁻⁴ → (ℓ² + ε²)⁻²`, and their separation-dependent
//! part is obtained by subtracting the same class in a scene holding only
//! the reflecting surface.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::geometry::{first_hit, Direction3, Point3, SurfaceId};
use crate::numerics::{bessel_k2, integrate, integrate_1d, IntegralEstimate, IntegratorConfig};
use crate::optpath::{enumerate_sequences, solve, OpticalPath, ReflectionSequence};
use crate::scenes::{Scene, SceneConfig};
use crate::wavefront::{enlargement_factor, Method};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    #[default]
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    /// Sign attached to a class with `n` reflections.
    pub fn sign(&self, n: usize) -> f64 {
        match self {
            BoundaryCondition::Dirichlet if n % 2 == 1 => -1.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Field mass in inverse length units.
    #[serde(default)]
    pub mass: f64,
    #[serde(default)]
    pub bc: BoundaryCondition,
    /// Point-splitting length for one-reflection classes.
    pub cutoff: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { mass: 0.0, bc: BoundaryCondition::Dirichlet, cutoff: 0.01 }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass >= 0.0 && self.mass.is_finite()) {
            return Err(Error::Config(format!("mass must be non-negative, got {}", self.mass)));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::Config(format!("cutoff must be positive, got {}", self.cutoff)));
        }
        Ok(())
    }
}

/// Integrand at the base point of `path` from its enlargement factor and
/// length. One-reflection paths are regulated when `regulate` is set.
pub fn pointwise_integrand(length: f64, delta: f64, order: usize, params: &PhysicalParams, regulate: bool) -> Result<f64> {
    let l = length;
    let base = if params.mass > 0.0 {
        0.5 * params.mass * params.mass * delta.sqrt() / l * bessel_k2(params.mass * l)?
    } else {
        delta.sqrt() / (l * l * l)
    };
    if regulate && order == 1 {
        let w = l * l / (l * l + params.cutoff * params.cutoff);
        Ok(base * w * w)
    } else {
        Ok(base)
    }
}

/// Outcome of evaluating one class at one base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointValue {
    Value(f64),
    /// No valid stationary path of the class through this point.
    Excluded,
    Caustic,
}

/// Solves, validates and weighs the class path through `x`.
pub fn evaluate_class(scene: &Scene, seq: &ReflectionSequence, x: &Point3, params: &PhysicalParams, regulate: bool) -> PointValue {
    let path = solve(scene, x, seq);
    evaluate_path(scene, &path, params, regulate)
}

fn evaluate_path(scene: &Scene, path: &OpticalPath, params: &PhysicalParams, regulate: bool) -> PointValue {
    if !path.validity.is_valid() {
        return PointValue::Excluded;
    }
    match enlargement_factor(path, &scene.surfaces, Method::Propagation) {
        Ok(e) if e.caustic => PointValue::Caustic,
        Ok(e) => match pointwise_integrand(path.length, e.delta, path.reflections.len(), params, regulate) {
            Ok(v) => PointValue::Value(v),
            Err(_) => PointValue::Excluded,
        },
        Err(_) => PointValue::Excluded,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Finite,
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub order: usize,
    pub sequence: Vec<SurfaceId>,
    pub label: String,
    pub multiplicity: u8,
    /// Regulated value of the class.
    pub value: f64,
    pub error: f64,
    /// Separation-dependent part; equals `value` for classes with two or
    /// more reflections.
    pub finite: f64,
    pub finite_error: f64,
    /// `value − finite`: zero for classes with two or more reflections,
    /// `None` for a one-reflection class off an infinite surface, whose
    /// constant is infinite. `value` then equals `finite`.
    pub divergent: Option<f64>,
    pub tag: Tag,
    pub excluded: u64,
    pub evaluated: u64,
    pub caustics: u64,
    pub converged: bool,
}

/// Weight `−σₙ M / 2π²` multiplying the integrand of a class.
pub fn class_weight(seq: &ReflectionSequence, params: &PhysicalParams) -> f64 {
    -params.bc.sign(seq.order()) * seq.multiplicity() as f64 / (2.0 * PI * PI)
}

fn integrate_class<F>(f: F, region: &crate::numerics::Region, cfg: &IntegratorConfig, caustics: &AtomicU64) -> Result<IntegralEstimate>
where
    F: Fn(&Point3) -> PointValue + Sync,
{
    integrate(
        |x| match f(x) {
            PointValue::Value(v) => Some(v),
            PointValue::Excluded => None,
            PointValue::Caustic => {
                caustics.fetch_add(1, Ordering::Relaxed);
                None
            }
        },
        region,
        cfg,
    )
}

/// Separation-dependent integrand of a class at `x`, unweighted. For one
/// reflection this is the scene path minus the path off the same surface
/// standing alone, which vanishes wherever both exist.
pub fn finite_integrand(scene: &Scene, seq: &ReflectionSequence, x: &Point3, params: &PhysicalParams) -> PointValue {
    if seq.order() != 1 {
        return evaluate_class(scene, seq, x, params, false);
    }
    let id = seq.surfaces()[0];
    let alone = scene.isolated(id);
    let alone_seq = ReflectionSequence::new(vec![0]).expect("single surface");
    let inside = evaluate_class(scene, seq, x, params, false);
    let outside = evaluate_class(&alone, &alone_seq, x, params, false);
    match (inside, outside) {
        // identical paths cancel exactly
        (PointValue::Value(_), PointValue::Value(_)) => PointValue::Value(0.0),
        (PointValue::Value(v), _) => PointValue::Value(v),
        (_, PointValue::Value(v)) => PointValue::Value(-v),
        (PointValue::Caustic, _) | (_, PointValue::Caustic) => PointValue::Caustic,
        _ => PointValue::Excluded,
    }
}

/// Weighted sum of the separation-dependent integrands of every class up to
/// `max_reflections` at `x`. `None` outside the vacuum domain, at a caustic
/// of any class, or where no class has a path.
pub fn local_integrand(scene: &Scene, params: &PhysicalParams, max_reflections: usize, x: &Point3) -> Option<f64> {
    if !scene.contains(x) {
        return None;
    }
    let mut total = 0.0;
    let mut any = false;
    for seq in enumerate_sequences(scene, max_reflections) {
        match finite_integrand(scene, &seq, x, params) {
            PointValue::Value(v) => {
                total += class_weight(&seq, params) * v;
                any = true;
            }
            PointValue::Caustic => return None,
            PointValue::Excluded => {}
        }
    }
    any.then_some(total)
}

/// Contribution of one reflection class.
pub fn class_contribution(scene: &Scene, seq: &ReflectionSequence, params: &PhysicalParams, cfg: &IntegratorConfig) -> Result<Contribution> {
    params.validate()?;
    let pre = class_weight(seq, params);
    let caustics = AtomicU64::new(0);
    let est = if seq.order() == 1 && !self_energy_bounded(scene, seq.surfaces()[0]) {
        None
    } else {
        Some(integrate_class(|x| evaluate_class(scene, seq, x, params, true), &scene.region, cfg, &caustics)?.scaled(pre))
    };
    let (finite, tag) = if seq.order() == 1 {
        let diff = |x: &Point3| finite_integrand(scene, seq, x, params);
        let mut total = IntegralEstimate::zero();
        for region in scene.all_space() {
            total = total.combine(integrate_class(diff, &region, cfg, &caustics)?);
        }
        (total.scaled(pre), Tag::Divergent)
    } else {
        (est.expect("bounded class"), Tag::Finite)
    };
    let bounded = est.is_some();
    let est = est.unwrap_or(finite);
    Ok(Contribution {
        order: seq.order(),
        sequence: seq.surfaces().to_vec(),
        label: seq.label(&scene.names),
        multiplicity: seq.multiplicity(),
        value: est.value,
        error: est.std_error,
        finite: finite.value,
        finite_error: finite.std_error,
        divergent: bounded.then(|| est.value - finite.value),
        tag,
        excluded: est.excluded,
        evaluated: est.evaluated,
        caustics: caustics.into_inner(),
        converged: est.converged && finite.converged,
    })
}

/// False for an infinite plane in a scene whose region extends along it:
/// its self-energy grows with the (infinite) area.
fn self_energy_bounded(scene: &Scene, id: SurfaceId) -> bool {
    match (&scene.surfaces[id].kind, &scene.region) {
        (crate::geometry::SurfaceKind::Plane { extent: None, .. }, crate::numerics::Region::Cylinder { .. }) => false,
        _ => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderSummary {
    pub order: usize,
    /// Sum of finite parts of the classes of this order.
    pub value: f64,
    pub error: f64,
    /// Finite parts of all classes up to this order.
    pub cumulative: f64,
    /// Even-order classes up to this order.
    pub cumulative_even: f64,
    /// `cumulative / finite`.
    pub fraction: f64,
    /// `cumulative_even / finite`.
    pub even_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyResult {
    pub contributions: Vec<Contribution>,
    pub orders: Vec<OrderSummary>,
    pub finite: f64,
    pub finite_error: f64,
    /// Separation-independent one-reflection constant at the configured
    /// cutoff, summed over the classes where it is finite.
    pub divergent: f64,
    pub converged: bool,
}

impl EnergyResult {
    fn assemble(contributions: Vec<Contribution>, max_order: usize) -> Self {
        let mut per_order = vec![(0.0, 0.0); max_order + 1];
        for c in &contributions {
            per_order[c.order].0 += c.finite;
            per_order[c.order].1 += c.finite_error * c.finite_error;
        }
        let finite: f64 = per_order.iter().map(|p| p.0).sum();
        let finite_error = per_order.iter().map(|p| p.1).sum::<f64>().sqrt();
        let (mut cumulative, mut cumulative_even) = (0.0, 0.0);
        let orders = (1..=max_order)
            .map(|n| {
                cumulative += per_order[n].0;
                if n % 2 == 0 {
                    cumulative_even += per_order[n].0;
                }
                OrderSummary {
                    order: n,
                    value: per_order[n].0,
                    error: per_order[n].1.sqrt(),
                    cumulative,
                    cumulative_even,
                    fraction: cumulative / finite,
                    even_fraction: cumulative_even / finite,
                }
            })
            .collect();
        EnergyResult {
            divergent: contributions.iter().filter_map(|c| c.divergent).sum(),
            converged: contributions.iter().all(|c| c.converged),
            contributions,
            orders,
            finite,
            finite_error,
        }
    }

    /// Sum of the even classes.
    pub fn even_sum(&self) -> f64 {
        self.contributions.iter().filter(|c| c.order % 2 == 0).map(|c| c.finite).sum()
    }

    /// Sum of the finite parts of the odd classes.
    pub fn odd_sum(&self) -> f64 {
        self.contributions.iter().filter(|c| c.order % 2 == 1).map(|c| c.finite).sum()
    }

    /// Sum of the regulated values of the odd classes.
    pub fn odd_regulated_sum(&self) -> f64 {
        self.contributions.iter().filter(|c| c.order % 2 == 1).map(|c| c.value).sum()
    }

    /// Finite part of the classes of order `n`.
    pub fn order_value(&self, n: usize) -> f64 {
        self.orders.get(n.wrapping_sub(1)).map_or(0.0, |o| o.value)
    }

    pub fn caustics(&self) -> u64 {
        self.contributions.iter().map(|c| c.caustics).sum()
    }
}

/// Finite part and per-order bookkeeping over all classes up to
/// `max_reflections`.
pub fn total_energy(scene: &Scene, params: &PhysicalParams, max_reflections: usize, cfg: &IntegratorConfig) -> Result<EnergyResult> {
    if max_reflections < 2 {
        return Err(Error::Config(format!("need at least two reflections, got {max_reflections}")));
    }
    params.validate()?;
    cfg.validate()?;
    let contributions = enumerate_sequences(scene, max_reflections)
        .iter()
        .map(|s| class_contribution(scene, s, params, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyResult::assemble(contributions, max_reflections))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductorResult {
    pub dirichlet: f64,
    pub neumann: f64,
    /// Odd classes dropped, even classes doubled.
    pub doubled_even: f64,
    /// Statistical error of the Dirichlet finite part.
    pub error: f64,
}

impl ConductorResult {
    /// Electromagnetic conductor: Dirichlet plus Neumann modes.
    pub fn conductor(&self) -> f64 {
        self.dirichlet + self.neumann
    }
}

/// Parallel-plate conductor energy from one set of samples: the Neumann
/// classes differ from the Dirichlet ones only by the odd-class sign.
pub fn conductor_plates(scene: &Scene, params: &PhysicalParams, max_reflections: usize, cfg: &IntegratorConfig) -> Result<ConductorResult> {
    if !matches!(scene.config, SceneConfig::ParallelPlates { .. }) {
        return Err(Error::Config("conductor identity needs parallel plates".into()));
    }
    let d = total_energy(scene, &PhysicalParams { bc: BoundaryCondition::Dirichlet, ..*params }, max_reflections, cfg)?;
    let even = d.even_sum();
    let odd = d.odd_sum();
    Ok(ConductorResult {
        dirichlet: even + odd,
        neumann: even - odd,
        doubled_even: 2.0 * even,
        error: d.finite_error,
    })
}

/// `∫₀^∞ w(k) sin(kℓ) e^{−ηk} dk`, summed over half periods of the sine up
/// to `k = 40/η`.
pub fn damped_sine_integral<W: Fn(f64) -> f64>(w: W, ell: f64, eta: f64) -> f64 {
    let k_max = 40.0 / eta;
    let half = PI / ell;
    let n = (k_max / half).ceil() as usize;
    let mut sum = crate::numerics::KahanSum::default();
    for j in 0..n {
        let r = integrate_1d(|k| w(k) * (k * ell).sin() * (-eta * k).exp(), j as f64 * half, (j + 1) as f64 * half, 0.0, 1e-13, 20);
        sum.add(r.value);
    }
    sum.value()
}

/// Value at `0` of the interpolating polynomial through `(x_i, y_i)`.
pub fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (xs[i + m] * p[i] - xs[i] * p[i + 1]) / (xs[i + m] - xs[i]);
        }
    }
    p[0]
}

/// Damping lengths, relative to the path length, for the `η → 0` limit.
const ETA_STEPS: [f64; 5] = [0.1, 0.05, 0.025, 0.0125, 0.00625];

/// Abel limit of `∫ w(k) sin(kℓ) e^{−ηk} dk`, with a flag for an unstable
/// extrapolation.
pub fn abel_sine_integral<W: Fn(f64) -> f64>(w: W, ell: f64) -> (f64, bool) {
    let xs: Vec<f64> = ETA_STEPS.iter().map(|c| c * ell).collect();
    let ys: Vec<f64> = xs.iter().map(|&eta| damped_sine_integral(&w, ell, eta)).collect();
    let all = neville_at_zero(&xs, &ys);
    let fewer = neville_at_zero(&xs[1..], &ys[1..]);
    let stable = (all - fewer).abs() <= 1e-4 * all.abs().max(1e-300);
    (all, stable)
}

/// Contribution of a class from the frequency representation
/// `σₙ M ∫ dk/(4π²) k ω(k) ∫ d³x √Δ sin(kℓ)` with `ω = √(k² + m²)`.
/// A cross-check of [`class_contribution`] for classes with two or more
/// reflections.
pub fn spectral_contribution(scene: &Scene, seq: &ReflectionSequence, params: &PhysicalParams, cfg: &IntegratorConfig) -> Result<Contribution> {
    params.validate()?;
    let m = params.mass;
    let unstable = AtomicU64::new(0);
    let caustics = AtomicU64::new(0);
    let f = |x: &Point3| {
        let path = solve(scene, x, seq);
        if !path.validity.is_valid() {
            return PointValue::Excluded;
        }
        match enlargement_factor(&path, &scene.surfaces, Method::Propagation) {
            Ok(e) if e.caustic => PointValue::Caustic,
            Ok(e) => {
                let (k_int, stable) = abel_sine_integral(|k| k * (k * k + m * m).sqrt(), path.length);
                if !stable {
                    unstable.fetch_add(1, Ordering::Relaxed);
                }
                PointValue::Value(e.delta.sqrt() * k_int)
            }
            Err(_) => PointValue::Excluded,
        }
    };
    let pre = params.bc.sign(seq.order()) * seq.multiplicity() as f64 / (4.0 * PI * PI);
    let est = integrate_class(f, &scene.region, cfg, &caustics)?.scaled(pre);
    Ok(Contribution {
        order: seq.order(),
        sequence: seq.surfaces().to_vec(),
        label: seq.label(&scene.names),
        multiplicity: seq.multiplicity(),
        value: est.value,
        error: est.std_error,
        finite: est.value,
        finite_error: est.std_error,
        divergent: Some(0.0),
        tag: Tag::Finite,
        excluded: est.excluded,
        evaluated: est.evaluated,
        caustics: caustics.into_inner(),
        converged: est.converged && unstable.into_inner() == 0,
    })
}

const PFA_DENSITY: f64 = PI * PI / 1440.0;

/// Proximity force estimate built on surface `base`: the plate energy per
/// area at the local normal distance, integrated over that surface.
pub fn pfa_energy(scene: &Scene, base: SurfaceId, cfg: &IntegratorConfig) -> Result<f64> {
    let normal_gap = |p: &Point3| -> Option<f64> {
        let s = &scene.surfaces[base];
        let n = s.normal_at(p);
        let h = crate::geometry::first_hit_beyond(p, &n, &scene.surfaces, 1e-12 * scene.gap())?;
        (h.surface != base).then_some(h.distance)
    };
    let tol = cfg.rel_tol.min(1e-6);
    match scene.config {
        SceneConfig::ParallelPlates { side, .. } => {
            let d = normal_gap(&scene.surfaces[base].nearest_point(&Point3::zeros()))
                .ok_or_else(|| Error::Domain("plates do not face each other".into()))?;
            Ok(-PFA_DENSITY * side * side / d.powi(3))
        }
        SceneConfig::SpherePlate { a, radius } => {
            let density = |d: Option<f64>| d.map_or(0.0, |d| d.powi(-3));
            let v = if base == 0 {
                // plate rings of radius r; beyond r = R the normal misses
                integrate_1d(|r| 2.0 * PI * r * density(normal_gap(&Point3::new(r, 0.0, 0.0))), 0.0, radius, 0.0, tol, 4000).value
            } else {
                // sphere rings at polar angle θ from the lowest point
                let c = Point3::new(0.0, 0.0, a + radius);
                integrate_1d(
                    |t| {
                        let p = c + Point3::new(t.sin(), 0.0, -t.cos()) * radius;
                        2.0 * PI * radius * radius * t.sin() * density(normal_gap(&p))
                    },
                    0.0,
                    PI / 2.0,
                    0.0,
                    tol,
                    4000,
                )
                .value
            };
            Ok(-PFA_DENSITY * v)
        }
    }
}

/// Volume form of the proximity estimate: plate energy density at the
/// length of the shortest segment from one body to the other through each
/// point.
pub fn pfa_star_energy(scene: &Scene, cfg: &IntegratorConfig) -> Result<IntegralEstimate> {
    let est = integrate(|x| scene.shortest_bridge(x).map(|l| l.powi(-4)), &scene.region, cfg)?;
    Ok(est.scaled(-PFA_DENSITY))
}

/// Length of the normal from `p` along `d` to the first surface.
pub fn normal_distance(scene: &Scene, p: &Point3, d: &Direction3) -> Option<f64> {
    first_hit(p, d, &scene.surfaces).map(|h| h.distance)
}
