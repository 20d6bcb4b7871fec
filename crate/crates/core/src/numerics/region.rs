use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::Point3;

/// One coordinate range, possibly half-infinite. Half-infinite ranges are
/// mapped from the unit interval by `t = scale·u/(1-u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Axis {
    Finite { lo: f64, hi: f64 },
    Above { lo: f64, scale: f64 },
    Below { hi: f64, scale: f64 },
}

impl Axis {
    /// Coordinate and `dcoord/du` for `u ∈ [0, 1)`.
    #[inline]
    pub fn map(&self, u: f64) -> (f64, f64) {
        match *self {
            Axis::Finite { lo, hi } => (lo + (hi - lo) * u, hi - lo),
            Axis::Above { lo, scale } => {
                let w = 1.0 - u;
                (lo + scale * u / w, scale / (w * w))
            }
            Axis::Below { hi, scale } => {
                let w = 1.0 - u;
                (hi - scale * u / w, scale / (w * w))
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Axis::Finite { lo, hi } => hi - lo,
            _ => f64::INFINITY,
        }
    }
}

/// Integration region in 3D, described as a map from the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// `x, y ∈ [-side/2, side/2]`, `z` along `z`.
    Slab { side: f64, z: Axis },
    /// Cylindrical shell about the `z` axis; `r` should start at 0.
    Cylinder { r: Axis, z: Axis },
}

impl Region {
    /// Maps `u ∈ [0,1)³` to a point and the volume Jacobian.
    #[inline]
    pub fn map(&self, u: [f64; 3]) -> (Point3, f64) {
        match self {
            Region::Slab { side, z } => {
                let (zz, jz) = z.map(u[2]);
                (
                    Point3::new(side * (u[0] - 0.5), side * (u[1] - 0.5), zz),
                    side * side * jz,
                )
            }
            Region::Cylinder { r, z } => {
                let (rr, jr) = r.map(u[0]);
                let (zz, jz) = z.map(u[2]);
                let phi = 2.0 * PI * u[1];
                (
                    Point3::new(rr * phi.cos(), rr * phi.sin(), zz),
                    2.0 * PI * rr * jr * jz,
                )
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Region::Slab { side, z } => side * side * z.length(),
            Region::Cylinder { r, z } => match r {
                Axis::Finite { lo, hi } => PI * (hi * hi - lo * lo) * z.length(),
                _ => f64::INFINITY,
            },
        }
    }

    /// Default stratification grid for a sample budget.
    pub fn default_strata(&self, samples: usize) -> [usize; 3] {
        // keep at least ~16 samples per stratum in the uniform first pass
        let cells = (samples / 32).max(1);
        match self {
            Region::Slab { .. } => [1, 1, cells.clamp(1, 4096)],
            Region::Cylinder { .. } => {
                let n = ((cells as f64).sqrt() as usize).clamp(1, 256);
                [n, 1, n]
            }
        }
    }
}
