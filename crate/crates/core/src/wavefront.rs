//! Wavefront curvature along a reflected path and the enlargement factor
//! `Δ = dΩ/dA` of a pencil of rays leaving a point source.
//!
//! Curvatures are signed so that a diverging wavefront is positive. The
//! enlargement factor is computed from the ray Jacobian `J = ∂(transverse
//! position)/∂(launch angle)`: a point source starts with `J = 0`,
//! `K = ∂(transverse direction)/∂(launch angle) = I`, free flight adds `s·K`
//! to `J`, and a mirror adds its curvature kick times `J` to `K`. Then
//! `Q = K·J⁻¹` and `Δ = 1/det J`, which removes the singular initial
//! curvature of the source exactly.

use nalgebra::{Matrix2, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::{any_perpendicular, Direction3, Point3, ShapeData, Surface};
use crate::optpath::{OpticalPath, GRAZING_MARGIN};
use crate::{Error, Result};

/// Transverse frame carried along a ray: `frame[0]`, `frame[1]` and the
/// propagation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavefrontState {
    /// Curvature matrix (1/length) in `frame`.
    pub q: Matrix2<f64>,
    pub frame: [Vector3<f64>; 2],
    pub direction: Direction3,
    /// Arc length travelled.
    pub s: f64,
}

impl WavefrontState {
    /// Spherical wave of radius `radius` around `direction`.
    pub fn spherical(direction: Direction3, radius: f64) -> Self {
        Self {
            q: Matrix2::identity() / radius,
            frame: transverse_frame(&direction),
            direction,
            s: 0.0,
        }
    }

    /// Principal radii (inverse eigenvalues of `q`), ascending by curvature.
    pub fn radii(&self) -> [f64; 2] {
        let e = self.q.symmetric_eigenvalues();
        let (lo, hi) = if e[0] <= e[1] { (e[0], e[1]) } else { (e[1], e[0]) };
        [1.0 / lo, 1.0 / hi]
    }
}

/// Right-handed transverse frame: `f0 × f1 = d`.
fn transverse_frame(d: &Direction3) -> [Vector3<f64>; 2] {
    let f0 = any_perpendicular(d.vec());
    [f0, d.vec().cross(&f0)]
}

/// Smallest `t ∈ (0, s]` with `det(J + tK) = 0`, if any.
fn det_root(j: &Matrix2<f64>, k: &Matrix2<f64>, s: f64) -> Option<f64> {
    let c0 = j.determinant();
    let c1 = j[(0, 0)] * k[(1, 1)] + k[(0, 0)] * j[(1, 1)] - j[(0, 1)] * k[(1, 0)] - k[(0, 1)] * j[(1, 0)];
    let c2 = k.determinant();
    let scale = c0.abs() + c1.abs() * s + c2.abs() * s * s;
    let mut roots = Vec::with_capacity(2);
    if c2.abs() <= 1e-14 * scale {
        if c1 != 0.0 {
            roots.push(-c0 / c1);
        }
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc >= 0.0 {
            let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
            if q != 0.0 {
                roots.push(q / c2);
                roots.push(c0 / q);
            } else {
                roots.push(0.0);
            }
        }
    }
    roots
        .into_iter()
        .filter(|&t| t > 0.0 && t <= s)
        .min_by(f64::total_cmp)
}

/// Free flight over `distance`: `Q ← Q (I + distance·Q)⁻¹`.
pub fn propagate_free(state: &WavefrontState, distance: f64) -> Result<WavefrontState> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("propagation distance must be positive, got {distance}")));
    }
    if det_root(&Matrix2::identity(), &state.q, distance).is_some() {
        return Err(Error::Caustic);
    }
    let m = Matrix2::identity() + state.q * distance;
    let inv = m.try_inverse().ok_or(Error::Caustic)?;
    let q = state.q * inv;
    Ok(WavefrontState {
        q: (q + q.transpose()) * 0.5,
        s: state.s + distance,
        ..*state
    })
}

/// Incidence-plane frame at a mirror: rotation from the incoming frame, the
/// curvature kick in the new frame, and the mirrored frame and direction.
struct MirrorFrame {
    rot: Matrix2<f64>,
    kick: Matrix2<f64>,
    frame_out: [Vector3<f64>; 2],
    direction_out: Direction3,
}

fn mirror_frame(
    frame: &[Vector3<f64>; 2],
    d: &Direction3,
    mirror: &ShapeData,
    index: usize,
) -> Result<MirrorFrame> {
    let n = mirror.normal.vec();
    let cos = -d.dot(n);
    if cos < GRAZING_MARGIN.sin() {
        return Err(Error::Grazing { index });
    }
    let mut e_perp = d.vec().cross(n);
    if e_perp.norm() < 1e-12 {
        // normal incidence: any transverse axis will do
        e_perp = frame[1];
    }
    let e_perp = e_perp.normalize();
    let e_par = e_perp.cross(d.vec());
    let mut e = [e_par, e_perp];
    let mut rot = Matrix2::from_fn(|i, k| frame[i].dot(&e[k]));
    if rot.determinant() < 0.0 {
        // keep the handedness of the incoming frame
        e[1] = -e[1];
        rot = Matrix2::from_fn(|i, k| frame[i].dot(&e[k]));
    }

    // shape operator restricted to the incidence-plane tangent directions
    let t_par = (e[0] - n * e[0].dot(n)).normalize();
    let t = [t_par, e[1]];
    let s3 = |a: &Vector3<f64>, b: &Vector3<f64>| {
        let mut v = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                v += a.dot(&mirror.tangent[i]) * mirror.shape[(i, j)] * mirror.tangent[j].dot(b);
            }
        }
        v
    };
    let (cpp, cpt, ctt) = (s3(&t[0], &t[0]), s3(&t[0], &t[1]), s3(&t[1], &t[1]));
    let kick = Matrix2::new(cpp / cos, cpt, cpt, ctt * cos) * 2.0;

    let mirror_vec = |v: &Vector3<f64>| v - n * (2.0 * v.dot(n));
    Ok(MirrorFrame {
        rot,
        kick,
        frame_out: [mirror_vec(&e[0]), e[1]],
        direction_out: crate::geometry::reflect(d, &mirror.normal),
    })
}

/// Specular reflection of a wavefront. Adds the mirror kick (`2/R` at
/// normal incidence on a sphere convex toward the ray; `1/cosθ` and `cosθ`
/// scalings in and across the plane of incidence) and mirrors the frame.
pub fn reflect_wavefront(state: &WavefrontState, mirror: &ShapeData, index: usize) -> Result<WavefrontState> {
    let m = mirror_frame(&state.frame, &state.direction, mirror, index)?;
    let q = m.rot.transpose() * state.q * m.rot + m.kick;
    Ok(WavefrontState {
        q: (q + q.transpose()) * 0.5,
        frame: m.frame_out,
        direction: m.direction_out,
        s: state.s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Propagation,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnlargementResult {
    /// `1/det J` (1/length²). Meaningless when `caustic` is set.
    pub delta: f64,
    pub caustic: bool,
    pub method: Method,
}

/// Enlargement factor of a closed path that starts and ends at its base.
pub fn enlargement_factor(path: &OpticalPath, surfaces: &[Surface], method: Method) -> Result<EnlargementResult> {
    match method {
        Method::Propagation => propagation(path, surfaces),
        Method::FiniteDifference => finite_difference(path, surfaces),
    }
}

fn segment_dirs(path: &OpticalPath) -> Result<(Vec<Direction3>, Vec<f64>)> {
    let v = path.vertices();
    let mut dirs = Vec::with_capacity(v.len() - 1);
    let mut lens = Vec::with_capacity(v.len() - 1);
    for w in v.windows(2) {
        let d = w[1] - w[0];
        lens.push(d.norm());
        dirs.push(Direction3::new(d)?);
    }
    Ok((dirs, lens))
}

fn propagation(path: &OpticalPath, surfaces: &[Surface]) -> Result<EnlargementResult> {
    let (dirs, lens) = segment_dirs(path)?;
    let mut frame = transverse_frame(&dirs[0]);
    let mut dir = dirs[0];
    let mut j = Matrix2::zeros();
    let mut k = Matrix2::identity();
    let mut caustic = false;
    for (i, r) in path.reflections.iter().enumerate() {
        if det_root(&j, &k, lens[i]).is_some() {
            caustic = true;
        }
        j += k * lens[i];
        let shape = surfaces[r.surface()].shape_at(&r.point)?;
        let m = mirror_frame(&frame, &dir, &shape, i)?;
        j = m.rot.transpose() * j;
        k = m.rot.transpose() * k + m.kick * j;
        frame = m.frame_out;
        dir = m.direction_out;
    }
    let last = *lens.last().unwrap();
    if det_root(&j, &k, last).is_some() {
        caustic = true;
    }
    j += k * last;
    let det = j.determinant();
    Ok(EnlargementResult {
        delta: 1.0 / det,
        caustic: caustic || !(det > 0.0),
        method: Method::Propagation,
    })
}

/// Traces a ray from `origin` along `d` through the given mirrors, then to
/// the plane through `end` normal to `end_dir`.
fn trace(
    origin: &Point3,
    d: Direction3,
    mirrors: &[&Surface],
    end: &Point3,
    end_dir: &Vector3<f64>,
    t_min: f64,
) -> Option<Point3> {
    let mut p = *origin;
    let mut dir = d;
    for s in mirrors {
        let t = s.intersect(&p, &dir, t_min)?;
        p += dir.vec() * t;
        dir = crate::geometry::reflect(&dir, &s.normal_at(&p));
    }
    let denom = dir.dot(end_dir);
    if denom <= 0.0 {
        return None;
    }
    let t = (end - p).dot(end_dir) / denom;
    Some(p + dir.vec() * t)
}

/// Opening pencil angle (radians) at normal incidence.
const PENCIL_STEP: f64 = 1e-3;
/// Step ratio and tableau depth of the extrapolation.
const PENCIL_SHRINK: f64 = 1.4;
const PENCIL_LEVELS: usize = 12;

type Column = [f64; 2];

/// Ridders' extrapolation of a central difference `column(h)` to `h = 0`.
/// Steps that miss a mirror are shrunk until they hit.
fn extrapolate(column: impl Fn(f64) -> Option<Column>, h0: f64) -> Option<Column> {
    let mut h = h0;
    let mut first = None;
    for _ in 0..40 {
        first = column(h);
        if first.is_some() {
            break;
        }
        h /= 4.0;
    }
    let dist = |a: &Column, b: &Column| (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
    let c2 = PENCIL_SHRINK * PENCIL_SHRINK;
    let mut prev: Vec<Column> = vec![first?];
    let mut best = prev[0];
    let mut err = f64::INFINITY;
    for _ in 1..PENCIL_LEVELS {
        h /= PENCIL_SHRINK;
        let mut row = vec![column(h)?];
        let mut fac = c2;
        for j in 1..=prev.len() {
            let (lo, hi) = (&row[j - 1], &prev[j - 1]);
            let next = [(lo[0] * fac - hi[0]) / (fac - 1.0), (lo[1] * fac - hi[1]) / (fac - 1.0)];
            fac *= c2;
            let e = dist(&next, lo).max(dist(&next, hi));
            if e <= err {
                err = e;
                best = next;
            }
            row.push(next);
        }
        let n = prev.len();
        if dist(&row[n], &prev[n - 1]) >= 2.0 * err {
            break;
        }
        prev = row;
    }
    Some(best)
}

fn finite_difference(path: &OpticalPath, surfaces: &[Surface]) -> Result<EnlargementResult> {
    let (dirs, lens) = segment_dirs(path)?;
    let mirrors: Vec<&Surface> = path.reflections.iter().map(|r| &surfaces[r.surface()]).collect();
    let d0 = dirs[0];
    let f = transverse_frame(&d0);
    // frame carried by mirror images along the central ray
    let mut g = f;
    for r in &path.reflections {
        let n = *surfaces[r.surface()].normal_at(&r.point).vec();
        for v in &mut g {
            *v -= n * (2.0 * v.dot(&n));
        }
    }
    let end_dir = *dirs.last().unwrap().vec();
    let x = path.base;
    let t_min = 1e-9 * lens.iter().cloned().fold(0.0, f64::max);
    let shoot = |a: [f64; 2]| -> Option<[f64; 2]> {
        let d = Direction3::new(d0.vec() + f[0] * a[0] + f[1] * a[1]).ok()?;
        let p = trace(&x, d, &mirrors, &x, &end_dir, t_min)? - x;
        Some([p.dot(&g[0]), p.dot(&g[1])])
    };
    let column = |k: usize, h: f64| -> Option<[f64; 2]> {
        let mut a = [0.0; 2];
        a[k] = h;
        let plus = shoot(a)?;
        a[k] = -h;
        let minus = shoot(a)?;
        Some([(plus[0] - minus[0]) / (2.0 * h), (plus[1] - minus[1]) / (2.0 * h)])
    };
    let grazing = path
        .reflections
        .iter()
        .zip(&dirs)
        .map(|(r, d)| surfaces[r.surface()].normal_at(&r.point).dot(d.vec()).abs())
        .fold(1.0, f64::min);
    let mut j = Matrix2::zeros();
    for k in 0..2 {
        let c = extrapolate(|h| column(k, h), PENCIL_STEP * grazing * grazing)
            .ok_or_else(|| Error::Precision("pencil ray missed a mirror".into()))?;
        j[(0, k)] = c[0];
        j[(1, k)] = c[1];
    }
    let det = j.determinant();
    Ok(EnlargementResult {
        delta: 1.0 / det,
        caustic: !(det > 0.0),
        method: Method::FiniteDifference,
    })
}
