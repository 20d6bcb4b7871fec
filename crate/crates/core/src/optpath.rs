//! Closed specular paths: from a base point `x`, off an ordered list of
//! surfaces, and back to `x`.
//!
//! A path is a stationary point of the total length over the positions of
//! its reflection points. The solver runs a damped Newton iteration in local
//! tangent charts (affine for planes, gnomonic for spheres) with the exact
//! gradient and Hessian of the length, then re-anchors the charts at the new
//! points. Stationarity is equivalent to the reflection law at every bounce.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{first_hit_beyond, Point3, Surface, SurfaceChart, SurfaceId, SurfaceKind};
use crate::scenes::Scene;

/// Angle below `π/2` inside which incidence counts as grazing.
pub const GRAZING_MARGIN: f64 = 1e-6;
/// Stationarity target on the tangential gradient of the length.
pub const GRADIENT_TOL: f64 = 1e-10;
/// Gradient below which steps are judged by the gradient alone.
const NEWTON_ZONE: f64 = 1e-6;
const POLISH_STEPS: usize = 3;
const POLISH_TOL: f64 = 1e-14;
pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReflectionSequence {
    surfaces: Vec<SurfaceId>,
    multiplicity: u8,
}

impl ReflectionSequence {
    /// Sequence with the multiplicity implied by reversal: a sequence that
    /// differs from its reverse stands for both traversal directions.
    pub fn new(surfaces: Vec<SurfaceId>) -> Option<Self> {
        if surfaces.is_empty() || surfaces.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        let reversed: Vec<_> = surfaces.iter().rev().copied().collect();
        let multiplicity = if reversed == surfaces { 1 } else { 2 };
        Some(Self { surfaces, multiplicity })
    }

    pub fn order(&self) -> usize {
        self.surfaces.len()
    }

    pub fn multiplicity(&self) -> u8 {
        self.multiplicity
    }

    pub fn surfaces(&self) -> &[SurfaceId] {
        &self.surfaces
    }

    pub fn reversed(&self) -> Self {
        Self {
            surfaces: self.surfaces.iter().rev().copied().collect(),
            multiplicity: self.multiplicity,
        }
    }

    /// Readable label, e.g. `plate-sphere`.
    pub fn label(&self, names: &[&str]) -> String {
        self.surfaces
            .iter()
            .map(|&i| names.get(i).copied().unwrap_or("?"))
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// All reflection classes up to `max_reflections` bounces, ordered by order
/// and then lexicographically. The direct path (no bounce) is never emitted;
/// a sequence and its reverse are merged into one entry of multiplicity 2.
pub fn enumerate_sequences(scene: &Scene, max_reflections: usize) -> Vec<ReflectionSequence> {
    let k = scene.surfaces.len();
    let mut out = Vec::new();
    let mut layer: Vec<Vec<SurfaceId>> = (0..k).map(|i| vec![i]).collect();
    for _ in 1..=max_reflections {
        for seq in &layer {
            let rev: Vec<_> = seq.iter().rev().copied().collect();
            if rev < *seq {
                continue;
            }
            if let Some(s) = ReflectionSequence::new(seq.clone()) {
                out.push(s);
            }
        }
        layer = layer
            .iter()
            .flat_map(|seq| {
                (0..k).filter(move |&j| j != *seq.last().unwrap()).map(move |j| {
                    let mut s = seq.clone();
                    s.push(j);
                    s
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    NoConvergence,
    OffSurface,
    Shadowed,
    Penetrates,
    Grazing,
    OutsideDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Validity {
    /// Stationary, but not yet checked against the scene.
    Unchecked,
    Valid,
    Invalid(InvalidReason),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPoint {
    pub chart: SurfaceChart,
    pub point: Point3,
}

impl ReflectionPoint {
    pub fn surface(&self) -> SurfaceId {
        self.chart.surface
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalPath {
    pub base: Point3,
    pub reflections: Vec<ReflectionPoint>,
    pub length: f64,
    /// Largest tangential gradient of the length over the reflection points.
    pub residual: f64,
    pub iterations: usize,
    pub validity: Validity,
}

impl OpticalPath {
    /// Vertices `x, y₁, …, yₙ, x`.
    pub fn vertices(&self) -> Vec<Point3> {
        let mut v = Vec::with_capacity(self.reflections.len() + 2);
        v.push(self.base);
        v.extend(self.reflections.iter().map(|r| r.point));
        v.push(self.base);
        v
    }

    pub fn reversed(&self) -> OpticalPath {
        OpticalPath {
            reflections: self.reflections.iter().rev().copied().collect(),
            ..self.clone()
        }
    }
}

fn polyline_length(x: &Point3, ys: &[Point3]) -> f64 {
    let mut l = (ys[0] - x).norm();
    for w in ys.windows(2) {
        l += (w[1] - w[0]).norm();
    }
    l + (ys[ys.len() - 1] - x).norm()
}

/// Local chart at `y`: tangent basis and `∂²p/∂t²` (isotropic for the shapes
/// in scope, so a single vector).
fn local_chart(s: &Surface, y: &Point3) -> ([Vector3<f64>; 2], Vector3<f64>) {
    let t = s.tangent_frame(y);
    let second = match &s.kind {
        SurfaceKind::Plane { .. } => Vector3::zeros(),
        SurfaceKind::Sphere { center, radius, .. } => -(y - center) / (radius * radius),
    };
    (t, second)
}

/// Moves `y` by the tangent displacement `d` and maps back onto the surface.
fn retract(s: &Surface, y: &Point3, d: &Vector3<f64>) -> Point3 {
    match &s.kind {
        SurfaceKind::Plane { .. } => y + d,
        SurfaceKind::Sphere { center, radius, .. } => {
            let q = y - center + d;
            center + q * (radius / q.norm())
        }
    }
}

struct Linearization {
    length: f64,
    gradient: DVector<f64>,
    hessian: DMatrix<f64>,
}

fn linearize(surfaces: &[&Surface], x: &Point3, ys: &[Point3]) -> Linearization {
    let n = ys.len();
    let mut verts = Vec::with_capacity(n + 2);
    verts.push(*x);
    verts.extend_from_slice(ys);
    verts.push(*x);

    let charts: Vec<_> = surfaces.iter().zip(ys).map(|(s, y)| local_chart(s, y)).collect();
    // Cartesian gradient and Hessian blocks with respect to each y_i
    let mut g_cart = vec![Vector3::zeros(); n];
    let mut h_diag = vec![Matrix3::zeros(); n];
    let mut h_off = vec![Matrix3::zeros(); n.saturating_sub(1)]; // (i, i+1)
    let mut length = 0.0;
    for seg in 0..=n {
        let (a, b) = (verts[seg], verts[seg + 1]);
        let d = b - a;
        let len = d.norm();
        length += len;
        let u = d / len;
        let p = (Matrix3::identity() - u * u.transpose()) / len;
        // segment seg joins vertex seg (y_{seg-1} or x) to vertex seg+1
        if seg >= 1 {
            g_cart[seg - 1] -= u;
            h_diag[seg - 1] += p;
        }
        if seg < n {
            g_cart[seg] += u;
            h_diag[seg] += p;
        }
        if seg >= 1 && seg < n {
            h_off[seg - 1] -= p;
        }
    }

    let mut gradient = DVector::zeros(2 * n);
    let mut hessian = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        let (t, second) = &charts[i];
        for k in 0..2 {
            gradient[2 * i + k] = t[k].dot(&g_cart[i]);
            for l in 0..2 {
                let mut v = t[k].dot(&(h_diag[i] * t[l]));
                if k == l {
                    v += g_cart[i].dot(second);
                }
                hessian[(2 * i + k, 2 * i + l)] = v;
            }
        }
        if i + 1 < n {
            let (t2, _) = &charts[i + 1];
            for k in 0..2 {
                for l in 0..2 {
                    let v = t[k].dot(&(h_off[i] * t2[l]));
                    hessian[(2 * i + k, 2 * (i + 1) + l)] = v;
                    hessian[(2 * (i + 1) + l, 2 * i + k)] = v;
                }
            }
        }
    }
    Linearization { length, gradient, hessian }
}

/// Largest single-point tangential gradient norm.
fn residual(g: &DVector<f64>) -> f64 {
    (0..g.len() / 2)
        .map(|i| g[2 * i].hypot(g[2 * i + 1]))
        .fold(0.0, f64::max)
}

fn initial_points(surfaces: &[&Surface], x: &Point3) -> Vec<Point3> {
    surfaces.iter().map(|s| s.nearest_point(x)).collect()
}

/// Moves each reflection point along its tangent plane by its block of
/// `step`, optionally capping the move so gnomonic charts stay in range.
fn advance(surfaces: &[&Surface], ys: &[Point3], step: &DVector<f64>, plane_cap: Option<f64>) -> Vec<Point3> {
    surfaces
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (t, _) = local_chart(s, &ys[i]);
            let mut d = t[0] * step[2 * i] + t[1] * step[2 * i + 1];
            if let Some(plane_cap) = plane_cap {
                let cap = match &s.kind {
                    SurfaceKind::Sphere { radius, .. } => 0.5 * radius,
                    SurfaceKind::Plane { .. } => plane_cap,
                };
                if d.norm() > cap {
                    d *= cap / d.norm();
                }
            }
            retract(s, &ys[i], &d)
        })
        .collect()
}

/// Newton relaxation of the reflection points from `start`.
fn relax(
    scene: &Scene,
    seq: &ReflectionSequence,
    x: &Point3,
    start: Vec<Point3>,
) -> OpticalPath {
    let surfaces: Vec<&Surface> = seq.surfaces().iter().map(|&i| &scene.surfaces[i]).collect();
    let n = surfaces.len();
    let scale = scene.gap();
    let mut ys = start;
    let mut lin = linearize(&surfaces, x, &ys);
    let mut lambda = 0.0;
    let mut iterations = 0;
    let mut converged = residual(&lin.gradient) <= GRADIENT_TOL;
    while !converged && iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut accepted = false;
        for _ in 0..40 {
            let mut h = lin.hessian.clone();
            for i in 0..2 * n {
                h[(i, i)] += lambda;
            }
            let step = match h.cholesky() {
                Some(ch) => ch.solve(&(-&lin.gradient)),
                None => {
                    lambda = (lambda * 10.0).max(1e-3 / scale);
                    continue;
                }
            };
            let trial = advance(&surfaces, &ys, &step, Some(10.0 * scale.max(lin.length)));
            let new_len = polyline_length(x, &trial);
            let near = residual(&lin.gradient) < NEWTON_ZONE;
            if near || new_len <= lin.length * (1.0 + 4.0 * f64::EPSILON) {
                let new_lin = linearize(&surfaces, x, &trial);
                let flatter = residual(&new_lin.gradient) < residual(&lin.gradient);
                if flatter || (!near && new_len < lin.length) {
                    ys = trial;
                    lin = new_lin;
                    lambda *= 0.1;
                    if lambda < 1e-12 / scale {
                        lambda = 0.0;
                    }
                    accepted = true;
                    break;
                }
            }
            lambda = (lambda * 10.0).max(1e-3 / scale);
        }
        converged = residual(&lin.gradient) <= GRADIENT_TOL;
        if !accepted {
            break;
        }
    }
    // polish with plain Newton steps while the gradient keeps shrinking
    if converged {
        for _ in 0..POLISH_STEPS {
            if residual(&lin.gradient) <= POLISH_TOL {
                break;
            }
            let Some(step) = lin.hessian.clone().lu().solve(&(-&lin.gradient)) else { break };
            let trial = advance(&surfaces, &ys, &step, None);
            let new_lin = linearize(&surfaces, x, &trial);
            if !(residual(&new_lin.gradient) < residual(&lin.gradient)) {
                break;
            }
            ys = trial;
            lin = new_lin;
        }
    }
    let reflections = seq
        .surfaces()
        .iter()
        .zip(&ys)
        .map(|(&id, y)| ReflectionPoint {
            chart: scene.surfaces[id].point_to_chart(id, y),
            point: *y,
        })
        .collect();
    OpticalPath {
        base: *x,
        reflections,
        length: polyline_length(x, &ys),
        residual: residual(&lin.gradient),
        iterations,
        validity: if converged {
            Validity::Unchecked
        } else {
            Validity::Invalid(InvalidReason::NoConvergence)
        },
    }
}

/// Closed stationary path through `x` for `seq`, relaxed from the feet of
/// the perpendiculars from `x` onto each surface. The result still has to go
/// through [`validate_path`].
pub fn find_closed_path(scene: &Scene, x: &Point3, seq: &ReflectionSequence) -> OpticalPath {
    let surfaces: Vec<&Surface> = seq.surfaces().iter().map(|&i| &scene.surfaces[i]).collect();
    relax(scene, seq, x, initial_points(&surfaces, x))
}

/// Canonical path plus any distinct stationary paths reached from `extra`
/// perturbed starting points. Only converged, valid paths are returned.
pub fn find_closed_paths(
    scene: &Scene,
    x: &Point3,
    seq: &ReflectionSequence,
    extra: usize,
) -> Vec<OpticalPath> {
    let surfaces: Vec<&Surface> = seq.surfaces().iter().map(|&i| &scene.surfaces[i]).collect();
    let base = initial_points(&surfaces, x);
    let mut found: Vec<OpticalPath> = Vec::new();
    let spread = scene.gap().max(1e-3);
    for k in 0..=extra {
        let start: Vec<Point3> = if k == 0 {
            base.clone()
        } else {
            // deterministic golden-angle offsets in each tangent plane
            base.iter()
                .zip(&surfaces)
                .enumerate()
                .map(|(i, (y, s))| {
                    let (t, _) = local_chart(s, y);
                    let ang = 2.399_963_229_728_653 * (k * (i + 1)) as f64;
                    let rad = spread * (k as f64).sqrt();
                    retract(s, y, &(t[0] * (rad * ang.cos()) + t[1] * (rad * ang.sin())))
                })
                .collect()
        };
        let mut p = relax(scene, seq, x, start);
        p.validity = validate_path(&p, scene);
        if !p.validity.is_valid() {
            continue;
        }
        let tol = 1e-7 * p.length;
        let duplicate = found.iter().any(|q| {
            (q.length - p.length).abs() < tol
                && q.reflections
                    .iter()
                    .zip(&p.reflections)
                    .all(|(a, b)| (a.point - b.point).norm() < 1e-6 * p.length)
        });
        if !duplicate {
            found.push(p);
        }
    }
    found
}

/// Checks a stationary path against the scene: reflection points inside
/// their surfaces' extents, rays arriving from the vacuum side away from
/// grazing, and every segment unobstructed.
pub fn validate_path(path: &OpticalPath, scene: &Scene) -> Validity {
    if let Validity::Invalid(r) = path.validity {
        return Validity::Invalid(r);
    }
    if !scene.contains(&path.base) {
        return Validity::Invalid(InvalidReason::OutsideDomain);
    }
    let verts = path.vertices();
    let grazing_cos = GRAZING_MARGIN.sin();
    for (i, r) in path.reflections.iter().enumerate() {
        let s = &scene.surfaces[r.surface()];
        if !s.within_extent(&r.point) {
            return Validity::Invalid(InvalidReason::OffSurface);
        }
        let n = s.normal_at(&r.point);
        let to_prev = (verts[i] - r.point).normalize();
        let to_next = (verts[i + 2] - r.point).normalize();
        let (c_in, c_out) = (n.dot(&to_prev), n.dot(&to_next));
        if c_in <= 0.0 || c_out <= 0.0 {
            return Validity::Invalid(InvalidReason::Penetrates);
        }
        if c_in < grazing_cos || c_out < grazing_cos {
            return Validity::Invalid(InvalidReason::Grazing);
        }
    }
    let n = path.reflections.len();
    for seg in 0..=n {
        let (a, b) = (verts[seg], verts[seg + 1]);
        let d = b - a;
        let len = d.norm();
        let Ok(dir) = crate::geometry::Direction3::new(d) else {
            return Validity::Invalid(InvalidReason::Grazing);
        };
        let t_min = 1e-9 * len.max(1e-12);
        let hit = first_hit_beyond(&a, &dir, &scene.surfaces, t_min);
        let tol = 1e-7 * len.max(scene.gap());
        if seg < n {
            let target = path.reflections[seg].surface();
            match hit {
                Some(h) if h.surface == target && (h.distance - len).abs() <= tol => {}
                _ => return Validity::Invalid(InvalidReason::Shadowed),
            }
        } else if let Some(h) = hit {
            if h.distance < len - tol {
                return Validity::Invalid(InvalidReason::Shadowed);
            }
        }
    }
    Validity::Valid
}

/// Solve and validate in one step.
pub fn solve(scene: &Scene, x: &Point3, seq: &ReflectionSequence) -> OpticalPath {
    if !scene.contains(x) {
        let mut p = OpticalPath {
            base: *x,
            reflections: Vec::new(),
            length: f64::NAN,
            residual: f64::NAN,
            iterations: 0,
            validity: Validity::Invalid(InvalidReason::OutsideDomain),
        };
        p.validity = Validity::Invalid(InvalidReason::OutsideDomain);
        return p;
    }
    let mut p = find_closed_path(scene, x, seq);
    p.validity = validate_path(&p, scene);
    p
}
