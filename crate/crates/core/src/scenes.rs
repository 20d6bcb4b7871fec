//! The two geometries in scope: parallel plates and a sphere above a plate.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{first_hit, Direction3, Point3, Side, Surface, SurfaceId};
use crate::numerics::{Axis, Region};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SceneConfig {
    /// Plates at `z = 0` and `z = a`; area `side²` enters as a factor.
    ParallelPlates { a: f64, side: f64 },
    /// Infinite plate at `z = 0`, sphere of radius `radius` centered at
    /// `(0, 0, a + radius)`.
    SpherePlate { a: f64, radius: f64 },
}

impl SceneConfig {
    pub fn gap(&self) -> f64 {
        match *self {
            SceneConfig::ParallelPlates { a, .. } | SceneConfig::SpherePlate { a, .. } => a,
        }
    }

    /// `a/R` for the sphere–plate scene.
    pub fn xi(&self) -> Option<f64> {
        match *self {
            SceneConfig::SpherePlate { a, radius } => Some(a / radius),
            SceneConfig::ParallelPlates { .. } => None,
        }
    }

    /// Same geometry with the gap replaced.
    pub fn with_gap(&self, a: f64) -> Self {
        match *self {
            SceneConfig::ParallelPlates { side, .. } => SceneConfig::ParallelPlates { a, side },
            SceneConfig::SpherePlate { radius, .. } => SceneConfig::SpherePlate { a, radius },
        }
    }

    /// All lengths multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        match *self {
            SceneConfig::ParallelPlates { a, side } => SceneConfig::ParallelPlates {
                a: a * lambda,
                side: side * lambda,
            },
            SceneConfig::SpherePlate { a, radius } => SceneConfig::SpherePlate {
                a: a * lambda,
                radius: radius * lambda,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        match *self {
            SceneConfig::ParallelPlates { a, side } => {
                if !ok(a) {
                    return Err(Error::Config(format!("plate separation must be positive, got {a}")));
                }
                if !ok(side) {
                    return Err(Error::Config(format!("plate side must be positive, got {side}")));
                }
            }
            SceneConfig::SpherePlate { a, radius } => {
                if !ok(a) {
                    return Err(Error::Config(format!(
                        "sphere–plate gap must be positive (bodies overlap), got {a}"
                    )));
                }
                if !ok(radius) {
                    return Err(Error::Config(format!("sphere radius must be positive, got {radius}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// Invariant under translations in `x, y`.
    Slab,
    /// Invariant under rotations about the `z` axis.
    Axisymmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub config: SceneConfig,
    pub surfaces: Vec<Surface>,
    pub names: Vec<&'static str>,
    /// Region enclosing the vacuum domain of every reflection class.
    pub region: Region,
    pub symmetry: Symmetry,
}

impl Scene {
    /// Builds the surfaces and bounding region for a configuration.
    pub fn build(cfg: SceneConfig) -> Result<Self> {
        cfg.validate()?;
        match cfg {
            SceneConfig::ParallelPlates { a, side } => Ok(Scene {
                config: cfg,
                surfaces: vec![
                    Surface::plane(Point3::zeros(), Vector3::z())?,
                    Surface::plane(Point3::new(0.0, 0.0, a), -Vector3::z())?,
                ],
                names: vec!["bottom", "top"],
                region: Region::Slab { side, z: Axis::Finite { lo: 0.0, hi: a } },
                symmetry: Symmetry::Slab,
            }),
            SceneConfig::SpherePlate { a, radius } => Ok(Scene {
                config: cfg,
                surfaces: vec![
                    Surface::plane(Point3::zeros(), Vector3::z())?,
                    Surface::sphere(Point3::new(0.0, 0.0, a + radius), radius, Side::Outside)?,
                ],
                names: vec!["plate", "sphere"],
                region: Region::Cylinder {
                    r: Axis::Above { lo: 0.0, scale: Self::radial_scale(a, radius) },
                    z: Axis::Above { lo: 0.0, scale: a },
                },
                symmetry: Symmetry::Axisymmetric,
            }),
        }
    }

    /// Radius where the local gap has doubled; sets the radial map scale.
    fn radial_scale(a: f64, radius: f64) -> f64 {
        (2.0 * a * radius).sqrt().min(radius) + a
    }

    pub fn gap(&self) -> f64 {
        self.config.gap()
    }

    /// True for points of the vacuum domain (outside every body).
    pub fn contains(&self, x: &Point3) -> bool {
        self.surfaces.iter().all(|s| !s.body_contains(x))
    }

    /// Scene holding only surface `id` (which becomes surface 0), with an
    /// all-space region. Used to subtract single-body self energies.
    pub fn isolated(&self, id: SurfaceId) -> Scene {
        Scene {
            config: self.config,
            surfaces: vec![self.surfaces[id].clone()],
            names: vec![self.names[id]],
            region: self.region,
            symmetry: self.symmetry,
        }
    }

    /// Regions that together cover all of space.
    pub fn all_space(&self) -> Vec<Region> {
        let a = self.gap();
        match (self.symmetry, self.config) {
            (Symmetry::Slab, SceneConfig::ParallelPlates { side, .. }) => vec![
                Region::Slab { side, z: Axis::Below { hi: 0.0, scale: a } },
                Region::Slab { side, z: Axis::Finite { lo: 0.0, hi: a } },
                Region::Slab { side, z: Axis::Above { lo: a, scale: a } },
            ],
            (_, SceneConfig::SpherePlate { a, radius }) => {
                let r = Axis::Above { lo: 0.0, scale: Self::radial_scale(a, radius) };
                vec![
                    Region::Cylinder { r, z: Axis::Below { hi: 0.0, scale: a + radius } },
                    Region::Cylinder { r, z: Axis::Above { lo: 0.0, scale: a } },
                ]
            }
            _ => unreachable!("slab symmetry implies parallel plates"),
        }
    }

    /// Length of the shortest straight segment from the first surface to the
    /// second that passes through `x`, when one exists.
    pub fn shortest_bridge(&self, x: &Point3) -> Option<f64> {
        if !self.contains(x) {
            return None;
        }
        match self.config {
            SceneConfig::ParallelPlates { a, .. } => Some(a),
            SceneConfig::SpherePlate { a, radius } => {
                // the minimizing segment lies in the plane through the axis and x
                let r = x.x.hypot(x.y);
                let (ex, ey) = if r > 0.0 { (x.x / r, x.y / r) } else { (1.0, 0.0) };
                let length = |theta: f64| -> Option<f64> {
                    let (s, c) = theta.sin_cos();
                    let u = Direction3::new_unchecked(Vector3::new(s * ex, s * ey, c));
                    let up = first_hit(x, &u, &self.surfaces)?;
                    let down = first_hit(x, &u.neg(), &self.surfaces)?;
                    (up.surface == 1 && down.surface == 0).then_some(up.distance + down.distance)
                };
                // the sphere subtends a cone around the direction to its center
                let center = Point3::new(0.0, 0.0, a + radius);
                let to_c = center - x;
                let dist = to_c.norm();
                let half = (radius / dist).clamp(-1.0, 1.0).asin();
                let axis_angle = (to_c.x * ex + to_c.y * ey).atan2(to_c.z);
                let (lo, hi) = (
                    (axis_angle - half).max(-PI / 2.0),
                    (axis_angle + half).min(PI / 2.0),
                );
                if lo >= hi {
                    return None;
                }
                let n = 48;
                let mut best: Option<(f64, f64)> = None;
                for i in 0..=n {
                    let t = lo + (hi - lo) * i as f64 / n as f64;
                    if let Some(l) = length(t) {
                        if best.is_none_or(|(_, bl)| l < bl) {
                            best = Some((t, l));
                        }
                    }
                }
                let (t0, _) = best?;
                let step = (hi - lo) / n as f64;
                golden_min(&length, (t0 - step).max(lo), (t0 + step).min(hi))
            }
        }
    }
}

/// Golden-section minimum of a partial function on `[lo, hi]`.
fn golden_min<F: Fn(f64) -> Option<f64>>(f: &F, mut lo: f64, mut hi: f64) -> Option<f64> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let eval = |t: f64| f(t).unwrap_or(f64::INFINITY);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (eval(c), eval(d));
    for _ in 0..80 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = eval(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = eval(d);
        }
    }
    let best = fc.min(fd).min(eval(lo)).min(eval(hi));
    best.is_finite().then_some(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plates_slab_volume() {
        let s = Scene::build(SceneConfig::ParallelPlates { a: 1.0, side: 1.0 }).unwrap();
        assert_eq!(s.region.volume(), 1.0);
        assert_eq!(s.symmetry, Symmetry::Slab);
        assert!(s.contains(&Point3::new(0.0, 0.0, 0.5)));
        assert!(!s.contains(&Point3::new(0.0, 0.0, 1.5)));
    }

    #[test]
    fn sphere_plate_gap_and_xi() {
        let cfg = SceneConfig::SpherePlate { a: 1.0, radius: 1.0 };
        let s = Scene::build(cfg).unwrap();
        assert_eq!(cfg.xi(), Some(1.0));
        let hit = first_hit(&Point3::new(0.0, 0.0, 1e-9), &Direction3::z_axis(), &s.surfaces).unwrap();
        assert!((hit.distance - 1.0).abs() < 1e-8);
        let cfg = SceneConfig::SpherePlate { a: 0.1, radius: 1.0 };
        assert!((cfg.xi().unwrap() - 0.1).abs() < 1e-15);
        assert!(!Scene::build(cfg).unwrap().contains(&Point3::new(0.0, 0.0, 1.0)));
    }

    #[test]
    fn overlapping_bodies_rejected() {
        assert!(Scene::build(SceneConfig::SpherePlate { a: 0.0, radius: 1.0 }).is_err());
        assert!(Scene::build(SceneConfig::SpherePlate { a: -0.1, radius: 1.0 }).is_err());
        assert!(Scene::build(SceneConfig::ParallelPlates { a: 1.0, side: 0.0 }).is_err());
    }

    #[test]
    fn bridge_on_axis_is_the_gap() {
        let s = Scene::build(SceneConfig::SpherePlate { a: 0.2, radius: 1.0 }).unwrap();
        let l = s.shortest_bridge(&Point3::new(0.0, 0.0, 0.05)).unwrap();
        assert!((l - 0.2).abs() < 1e-9, "{l}");
        // off axis the shortest bridge points at the sphere center
        let x = Point3::new(0.3, 0.0, 0.1);
        let l = s.shortest_bridge(&x).unwrap();
        let vertical = 1.2 - (1.0f64 - 0.09).sqrt();
        assert!(l < vertical);
        assert!(l > 0.2);
    }

    #[test]
    fn bridge_matches_direction_scan() {
        let s = Scene::build(SceneConfig::SpherePlate { a: 0.3, radius: 1.0 }).unwrap();
        for x in [Point3::new(0.4, 0.0, 0.2), Point3::new(-0.7, 0.5, 0.1), Point3::new(1.1, 0.0, 0.6)] {
            let mut best = f64::INFINITY;
            let n = 400;
            for i in 0..=n {
                let th = PI * i as f64 / n as f64;
                for j in 0..2 * n {
                    let ph = PI * j as f64 / n as f64;
                    let d = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
                    let u = Direction3::new_unchecked(d);
                    if let (Some(up), Some(down)) = (first_hit(&x, &u, &s.surfaces), first_hit(&x, &u.neg(), &s.surfaces)) {
                        if up.surface == 1 && down.surface == 0 {
                            best = best.min(up.distance + down.distance);
                        }
                    }
                }
            }
            let l = s.shortest_bridge(&x).unwrap();
            assert!(l <= best + 1e-12 && l > best - 1e-3, "{l} vs {best}");
        }
    }
}
