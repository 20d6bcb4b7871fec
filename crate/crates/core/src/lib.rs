//! Casimir interaction energies in the optical approximation.
//!
//! The vacuum energy between rigid bodies is written as a volume integral,
//! over every point `x` of the vacuum domain, of a sum over closed specular
//! ray paths that leave `x`, bounce `n` times off the boundaries and return to
//! `x`. Each path contributes `sqrt(Δ)/ℓ³` where `ℓ` is its length and `Δ` the
//! ray-optics enlargement factor. Units are `ħ = c = 1` throughout; energies
//! come out in `ħc / length`.
//!
//! Module map:
//! - [`geometry`]: planes and spheres with normals, shape operators, ray hits.
//! - [`optpath`]: closed stationary paths for a reflection sequence.
//! - [`wavefront`]: enlargement factor by curvature transport and by ray pencils.
//! - [`numerics`]: Monte Carlo and adaptive quadrature, Bessel `K₂`.
//! - [`energy`]: per-class contributions, totals, PFA comparators.
//! - [`analytic`]: closed forms for parallel plates.
//! - [`scenes`]: parallel plates and sphere above a plate.

pub mod analytic;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod optpath;
pub mod scenes;
pub mod wavefront;

pub use error::{Error, Result};
