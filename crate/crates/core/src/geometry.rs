//! Rigid boundary surfaces: infinite or rectangular planes and spheres.
//!
//! Every surface knows which side faces the vacuum. Normals returned by this
//! module always point into the vacuum, and shape operators are positive for
//! a surface that is convex as seen from the vacuum.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point3 = Vector3<f64>;
pub type SurfaceId = usize;

/// Points closer than this (relative to the local length scale) to a surface
/// count as lying on it.
pub const ON_SURFACE_TOL: f64 = 1e-9;

/// A unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction3(Vector3<f64>);

impl Direction3 {
    pub fn new(v: Vector3<f64>) -> Result<Self> {
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain(format!("cannot normalize vector {v:?}")));
        }
        Ok(Self(v / n))
    }

    /// Wraps `v` without normalizing. Callers guarantee `|v| = 1`.
    pub fn new_unchecked(v: Vector3<f64>) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-9, "not unit: {v:?}");
        Self(v)
    }

    pub fn x_axis() -> Self {
        Self(Vector3::x())
    }

    pub fn y_axis() -> Self {
        Self(Vector3::y())
    }

    pub fn z_axis() -> Self {
        Self(Vector3::z())
    }

    #[inline]
    pub fn vec(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn neg(&self) -> Self {
        Self(-self.0)
    }

    pub fn dot(&self, other: &Vector3<f64>) -> f64 {
        self.0.dot(other)
    }
}

/// Deterministic unit vector orthogonal to `n`.
pub fn any_perpendicular(n: &Vector3<f64>) -> Vector3<f64> {
    let helper = if n.x.abs() < 0.6 {
        Vector3::x()
    } else if n.y.abs() < 0.6 {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let t = helper - n * n.dot(&helper);
    t / t.norm()
}

/// Mirror reflection of `d_in` off a surface with unit normal `normal`.
pub fn reflect(d_in: &Direction3, normal: &Direction3) -> Direction3 {
    let d = d_in.vec();
    let n = normal.vec();
    let out = d - n * (2.0 * n.dot(d));
    // re-normalize to keep |d| = 1 at machine precision across many bounces
    Direction3(out / out.norm())
}

/// Rectangular extent of a finite plane, centered on the plane base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneExtent {
    pub length_u: f64,
    pub length_v: f64,
}

/// Which side of a sphere is vacuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Outside,
    Inside,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SurfaceKind {
    /// The normal points into the vacuum. `axis_u` spans the chart together
    /// with `normal × axis_u`.
    Plane {
        base: Point3,
        normal: Direction3,
        axis_u: Direction3,
        extent: Option<PlaneExtent>,
    },
    Sphere {
        center: Point3,
        radius: f64,
        vacuum: Side,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub kind: SurfaceKind,
}

/// Chart coordinates on a surface. Planes use Cartesian offsets from the base
/// point along `axis_u` and `normal × axis_u`; spheres use the polar angle
/// `u ∈ [0, π]` from `+z` and the azimuth `v ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceChart {
    pub surface: SurfaceId,
    pub u: f64,
    pub v: f64,
}

/// Local differential data at a surface point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeData {
    pub point: Point3,
    /// Unit normal pointing into the vacuum.
    pub normal: Direction3,
    /// Orthonormal tangent basis; `tangent[0] × tangent[1] = normal`.
    pub tangent: [Vector3<f64>; 2],
    /// Shape operator in the tangent basis (1/length).
    pub shape: Matrix2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub surface: SurfaceId,
    pub point: Point3,
    pub distance: f64,
}

impl Surface {
    pub fn plane(base: Point3, normal: Vector3<f64>) -> Result<Self> {
        let normal = Direction3::new(normal)?;
        let axis_u = Direction3::new_unchecked(any_perpendicular(normal.vec()));
        Ok(Self {
            kind: SurfaceKind::Plane {
                base,
                normal,
                axis_u,
                extent: None,
            },
        })
    }

    pub fn finite_plane(
        base: Point3,
        normal: Vector3<f64>,
        axis_u: Vector3<f64>,
        extent: PlaneExtent,
    ) -> Result<Self> {
        if !(extent.length_u > 0.0 && extent.length_v > 0.0) {
            return Err(Error::Config(format!("plate extent must be positive: {extent:?}")));
        }
        let normal = Direction3::new(normal)?;
        let u = axis_u - normal.vec() * normal.dot(&axis_u);
        let axis_u = Direction3::new(u)?;
        Ok(Self {
            kind: SurfaceKind::Plane {
                base,
                normal,
                axis_u,
                extent: Some(extent),
            },
        })
    }

    pub fn sphere(center: Point3, radius: f64, vacuum: Side) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Self {
            kind: SurfaceKind::Sphere {
                center,
                radius,
                vacuum,
            },
        })
    }

    /// Typical length used to scale tolerances.
    pub fn scale(&self) -> f64 {
        match &self.kind {
            SurfaceKind::Plane { base, .. } => 1.0_f64.max(base.norm()),
            SurfaceKind::Sphere { radius, .. } => *radius,
        }
    }

    /// Signed distance-like residual of the implicit equation; zero on the
    /// surface, positive on the vacuum side.
    pub fn implicit(&self, p: &Point3) -> f64 {
        match &self.kind {
            SurfaceKind::Plane { base, normal, .. } => normal.dot(&(p - base)),
            SurfaceKind::Sphere {
                center,
                radius,
                vacuum,
            } => {
                let d = (p - center).norm() - radius;
                match vacuum {
                    Side::Outside => d,
                    Side::Inside => -d,
                }
            }
        }
    }

    /// True when `p` lies inside the solid body bounded by this surface.
    /// Finite plates are zero-thickness sheets and contain nothing.
    pub fn body_contains(&self, p: &Point3) -> bool {
        match &self.kind {
            SurfaceKind::Plane { extent: Some(_), .. } => false,
            _ => self.implicit(p) < 0.0,
        }
    }

    pub fn within_extent(&self, p: &Point3) -> bool {
        match &self.kind {
            SurfaceKind::Plane {
                base,
                normal,
                axis_u,
                extent: Some(ext),
            } => {
                let axis_v = normal.vec().cross(axis_u.vec());
                let d = p - base;
                let tol = ON_SURFACE_TOL * self.scale();
                d.dot(axis_u.vec()).abs() <= 0.5 * ext.length_u + tol
                    && d.dot(&axis_v).abs() <= 0.5 * ext.length_v + tol
            }
            _ => true,
        }
    }

    /// Vacuum-facing unit normal at a point on (or near) the surface.
    pub fn normal_at(&self, p: &Point3) -> Direction3 {
        match &self.kind {
            SurfaceKind::Plane { normal, .. } => *normal,
            SurfaceKind::Sphere { center, vacuum, .. } => {
                let r = (p - center).normalize();
                match vacuum {
                    Side::Outside => Direction3(r),
                    Side::Inside => Direction3(-r),
                }
            }
        }
    }

    /// Signed principal curvature (all directions are principal for the
    /// shapes in scope): `+1/R` for a sphere convex toward the vacuum.
    pub fn curvature(&self) -> f64 {
        match &self.kind {
            SurfaceKind::Plane { .. } => 0.0,
            SurfaceKind::Sphere { radius, vacuum, .. } => match vacuum {
                Side::Outside => 1.0 / radius,
                Side::Inside => -1.0 / radius,
            },
        }
    }

    /// Orthonormal tangent basis at `p` with `t0 × t1 = normal`.
    pub fn tangent_frame(&self, p: &Point3) -> [Vector3<f64>; 2] {
        let n = self.normal_at(p);
        let t0 = match &self.kind {
            SurfaceKind::Plane { axis_u, .. } => *axis_u.vec(),
            SurfaceKind::Sphere { .. } => any_perpendicular(n.vec()),
        };
        let t1 = n.vec().cross(&t0);
        [t0, t1]
    }

    pub fn shape_at(&self, p: &Point3) -> Result<ShapeData> {
        let residual = self.implicit(p).abs();
        if residual > ON_SURFACE_TOL * self.scale() {
            return Err(Error::Precision(format!(
                "point {p:?} is {residual:e} off the surface"
            )));
        }
        Ok(ShapeData {
            point: *p,
            normal: self.normal_at(p),
            tangent: self.tangent_frame(p),
            shape: Matrix2::identity() * self.curvature(),
        })
    }

    /// Closest point of the (untrimmed) surface to `x`.
    pub fn nearest_point(&self, x: &Point3) -> Point3 {
        match &self.kind {
            SurfaceKind::Plane { base, normal, .. } => x - normal.vec() * normal.dot(&(x - base)),
            SurfaceKind::Sphere { center, radius, .. } => {
                let d = x - center;
                let n = d.norm();
                if n == 0.0 {
                    center + Vector3::z() * *radius
                } else {
                    center + d * (radius / n)
                }
            }
        }
    }

    pub fn chart_to_point(&self, chart: &SurfaceChart) -> Result<Point3> {
        let (u, v) = (chart.u, chart.v);
        if !(u.is_finite() && v.is_finite()) {
            return Err(Error::Domain(format!("non-finite chart ({u}, {v})")));
        }
        match &self.kind {
            SurfaceKind::Plane {
                base,
                normal,
                axis_u,
                extent,
            } => {
                if let Some(ext) = extent {
                    if u.abs() > 0.5 * ext.length_u || v.abs() > 0.5 * ext.length_v {
                        return Err(Error::Domain(format!(
                            "chart ({u}, {v}) outside plate extent {ext:?}"
                        )));
                    }
                }
                let axis_v = normal.vec().cross(axis_u.vec());
                Ok(base + axis_u.vec() * u + axis_v * v)
            }
            SurfaceKind::Sphere { center, radius, .. } => {
                if !(0.0..=PI).contains(&u) || !(0.0..2.0 * PI).contains(&v) {
                    return Err(Error::Domain(format!(
                        "sphere chart ({u}, {v}) outside [0,π]×[0,2π)"
                    )));
                }
                let (st, ct) = u.sin_cos();
                let (sp, cp) = v.sin_cos();
                Ok(center + Vector3::new(st * cp, st * sp, ct) * *radius)
            }
        }
    }

    pub fn point_to_chart(&self, id: SurfaceId, p: &Point3) -> SurfaceChart {
        match &self.kind {
            SurfaceKind::Plane {
                base,
                normal,
                axis_u,
                ..
            } => {
                let axis_v = normal.vec().cross(axis_u.vec());
                let d = p - base;
                SurfaceChart {
                    surface: id,
                    u: d.dot(axis_u.vec()),
                    v: d.dot(&axis_v),
                }
            }
            SurfaceKind::Sphere { center, .. } => {
                let d = (p - center).normalize();
                let u = d.z.clamp(-1.0, 1.0).acos();
                let mut v = d.y.atan2(d.x);
                if v < 0.0 {
                    v += 2.0 * PI;
                }
                if v >= 2.0 * PI {
                    v = 0.0;
                }
                SurfaceChart { surface: id, u, v }
            }
        }
    }

    /// Smallest ray parameter `t > t_min` where `origin + t d` meets the
    /// surface, honoring finite extents.
    pub fn intersect(&self, origin: &Point3, d: &Direction3, t_min: f64) -> Option<f64> {
        match &self.kind {
            SurfaceKind::Plane { base, normal, .. } => {
                let denom = normal.dot(d.vec());
                if denom == 0.0 {
                    return None;
                }
                let t = normal.dot(&(base - origin)) / denom;
                if t > t_min && self.within_extent(&(origin + d.vec() * t)) {
                    Some(t)
                } else {
                    None
                }
            }
            SurfaceKind::Sphere { center, radius, .. } => {
                let oc = origin - center;
                let b = oc.dot(d.vec());
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                // numerically stable pair of roots
                let q = if b > 0.0 { -b - sq } else { -b + sq };
                let (mut t0, mut t1) = if q != 0.0 { (q, c / q) } else { (-b, -b) };
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                [t0, t1].into_iter().find(|&t| t > t_min)
            }
        }
    }
}

/// Nearest intersection of a ray with any surface in `surfaces`.
pub fn first_hit(origin: &Point3, d: &Direction3, surfaces: &[Surface]) -> Option<Hit> {
    first_hit_beyond(origin, d, surfaces, 0.0)
}

/// As [`first_hit`], ignoring intersections closer than `t_min`.
pub fn first_hit_beyond(
    origin: &Point3,
    d: &Direction3,
    surfaces: &[Surface],
    t_min: f64,
) -> Option<Hit> {
    surfaces
        .iter()
        .enumerate()
        .filter_map(|(id, s)| s.intersect(origin, d, t_min).map(|t| (id, t)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(surface, distance)| Hit {
            surface,
            point: origin + d.vec() * distance,
            distance,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn unit_sphere() -> Surface {
        Surface::sphere(Point3::zeros(), 1.0, Side::Outside).unwrap()
    }

    #[test]
    fn plane_chart_is_cartesian() {
        let s = Surface::plane(Point3::zeros(), Vector3::z()).unwrap();
        let p = s.chart_to_point(&SurfaceChart { surface: 0, u: 0.0, v: 0.0 }).unwrap();
        assert_eq!(p, Point3::zeros());
        let p = s.chart_to_point(&SurfaceChart { surface: 0, u: 1.5, v: -2.0 }).unwrap();
        // axis_u for a +z normal is +x, axis_v = z × x = +y
        assert_abs_diff_eq!(p, Point3::new(1.5, -2.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn sphere_pole() {
        let p = unit_sphere()
            .chart_to_point(&SurfaceChart { surface: 0, u: 0.0, v: 0.0 })
            .unwrap();
        assert_abs_diff_eq!(p, Point3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn chart_out_of_range_is_domain_error() {
        let err = unit_sphere().chart_to_point(&SurfaceChart { surface: 0, u: 4.0, v: 0.0 });
        assert!(matches!(err, Err(Error::Domain(_))));
        let plate = Surface::finite_plane(
            Point3::zeros(),
            Vector3::z(),
            Vector3::x(),
            PlaneExtent { length_u: 1.0, length_v: 1.0 },
        )
        .unwrap();
        let err = plate.chart_to_point(&SurfaceChart { surface: 0, u: 0.6, v: 0.0 });
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn shape_operators() {
        let plane = Surface::plane(Point3::zeros(), Vector3::z()).unwrap();
        let sd = plane.shape_at(&Point3::new(3.0, -1.0, 0.0)).unwrap();
        assert_eq!(*sd.normal.vec(), Vector3::z());
        assert_eq!(sd.shape, Matrix2::zeros());

        let s2 = Surface::sphere(Point3::zeros(), 2.0, Side::Outside).unwrap();
        let sd = s2.shape_at(&Point3::new(0.0, 0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(*sd.normal.vec(), Vector3::z(), epsilon = 1e-15);
        assert_abs_diff_eq!(sd.shape, Matrix2::identity() * 0.5, epsilon = 1e-15);

        let sd = unit_sphere().shape_at(&Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(*sd.normal.vec(), Vector3::x(), epsilon = 1e-15);
        assert_abs_diff_eq!(sd.shape, Matrix2::identity(), epsilon = 1e-15);
        let t = sd.tangent;
        assert_abs_diff_eq!(t[0].cross(&t[1]), *sd.normal.vec(), epsilon = 1e-15);

        let inner = Surface::sphere(Point3::zeros(), 1.0, Side::Inside).unwrap();
        let sd = inner.shape_at(&Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(*sd.normal.vec(), -Vector3::x(), epsilon = 1e-15);
        assert_abs_diff_eq!(sd.shape, -Matrix2::identity(), epsilon = 1e-15);
    }

    #[test]
    fn shape_off_surface_is_precision_error() {
        assert!(matches!(
            unit_sphere().shape_at(&Point3::new(1.1, 0.0, 0.0)),
            Err(Error::Precision(_))
        ));
    }

    #[test]
    fn reflect_examples() {
        let n = Direction3::z_axis();
        let d = Direction3::new(Vector3::new(0.0, 0.0, -1.0)).unwrap();
        assert_abs_diff_eq!(*reflect(&d, &n).vec(), Vector3::z(), epsilon = 1e-15);
        let d = Direction3::new(Vector3::new(1.0, 0.0, -1.0)).unwrap();
        let r = reflect(&d, &n);
        assert_abs_diff_eq!(*r.vec(), Vector3::new(1.0, 0.0, 1.0) / 2f64.sqrt(), epsilon = 1e-15);
        let d = Direction3::x_axis();
        assert_abs_diff_eq!(*reflect(&d, &n).vec(), Vector3::x(), epsilon = 1e-15);
    }

    #[test]
    fn first_hit_between_plates() {
        let scene = vec![
            Surface::plane(Point3::zeros(), Vector3::z()).unwrap(),
            Surface::plane(Point3::new(0.0, 0.0, 1.0), -Vector3::z()).unwrap(),
        ];
        let hit = first_hit(
            &Point3::new(0.0, 0.0, 0.5),
            &Direction3::new(-Vector3::z()).unwrap(),
            &scene,
        )
        .unwrap();
        assert_eq!(hit.surface, 0);
        assert_abs_diff_eq!(hit.distance, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn first_hit_on_sphere_axis() {
        let (a, r, z0) = (0.3, 1.0, 0.1);
        let scene = vec![
            Surface::plane(Point3::zeros(), Vector3::z()).unwrap(),
            Surface::sphere(Point3::new(0.0, 0.0, a + r), r, Side::Outside).unwrap(),
        ];
        let hit = first_hit(&Point3::new(0.0, 0.0, z0), &Direction3::z_axis(), &scene).unwrap();
        assert_eq!(hit.surface, 1);
        assert_abs_diff_eq!(hit.distance, a - z0, epsilon = 1e-14);
    }

    #[test]
    fn horizontal_ray_escapes_finite_plates() {
        let ext = PlaneExtent { length_u: 1.0, length_v: 1.0 };
        let scene = vec![
            Surface::finite_plane(Point3::zeros(), Vector3::z(), Vector3::x(), ext).unwrap(),
            Surface::finite_plane(Point3::new(0.0, 0.0, 1.0), -Vector3::z(), Vector3::x(), ext)
                .unwrap(),
        ];
        assert!(first_hit(&Point3::new(0.0, 0.0, 0.5), &Direction3::x_axis(), &scene).is_none());
        // a steep ray still lands within the extent
        let d = Direction3::new(Vector3::new(0.1, 0.0, -1.0)).unwrap();
        assert_eq!(first_hit(&Point3::new(0.0, 0.0, 0.5), &d, &scene).unwrap().surface, 0);
    }

    fn unit_vec() -> impl Strategy<Value = Vector3<f64>> {
        (-1.0f64..1.0, 0.0f64..(2.0 * PI)).prop_map(|(c, phi)| {
            let s = (1.0 - c * c).sqrt();
            Vector3::new(s * phi.cos(), s * phi.sin(), c)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn reflection_is_an_involution(d in unit_vec(), n in unit_vec()) {
            let d = Direction3::new_unchecked(d);
            let n = Direction3::new_unchecked(n);
            let r = reflect(&d, &n);
            prop_assert!((r.vec().norm() - 1.0).abs() < 1e-12);
            prop_assert!((reflect(&r, &n).vec() - d.vec()).norm() < 1e-12);
            // equal angles: angle(d, -n) == angle(r, n)
            prop_assert!((d.dot(&-n.vec()) - r.dot(n.vec())).abs() < 1e-12);
        }

        #[test]
        fn sphere_chart_round_trip(u in 1e-3f64..(PI - 1e-3), v in 0.0f64..(2.0 * PI - 1e-9)) {
            let s = Surface::sphere(Point3::new(0.3, -1.0, 2.0), 1.7, Side::Outside).unwrap();
            let c = SurfaceChart { surface: 0, u, v };
            let p = s.chart_to_point(&c).unwrap();
            prop_assert!(s.implicit(&p).abs() < 1e-12 * 1.7);
            let back = s.point_to_chart(0, &p);
            prop_assert!((back.u - u).abs() < 1e-9);
            prop_assert!((back.v - v).abs() < 1e-9);
        }

        #[test]
        fn plane_chart_round_trip(u in -50.0f64..50.0, v in -50.0f64..50.0, n in unit_vec()) {
            let s = Surface::plane(Point3::new(1.0, 2.0, 3.0), n).unwrap();
            let p = s.chart_to_point(&SurfaceChart { surface: 3, u, v }).unwrap();
            prop_assert!(s.implicit(&p).abs() < 1e-12 * 60.0);
            let back = s.point_to_chart(3, &p);
            prop_assert!((back.u - u).abs() < 1e-9 && (back.v - v).abs() < 1e-9);
        }

        #[test]
        fn hits_land_on_the_surface(o in unit_vec(), d in unit_vec()) {
            let s = vec![Surface::sphere(Point3::zeros(), 1.0, Side::Outside).unwrap()];
            let origin = o * 3.0;
            if let Some(h) = first_hit(&origin, &Direction3::new_unchecked(d), &s) {
                prop_assert!(h.distance > 0.0);
                prop_assert!(s[0].implicit(&h.point).abs() < 1e-9);
            }
        }
    }
}
