//! Integration over the vacuum domain and the special functions the energy
//! integrands need.

mod bessel;
mod montecarlo;
mod quadrature;
mod region;

pub use bessel::{bessel_k0, bessel_k1, bessel_k2};
pub use montecarlo::integrate_volume;
pub use quadrature::{integrate_1d, integrate_axisymmetric, integrate_slab, QuadResult};
pub use region::{Axis, Region};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MonteCarlo,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Total Monte Carlo samples per integral.
    pub samples: usize,
    pub seed: u64,
    /// Strata per unit-cube axis; `None` picks a grid from the region shape.
    pub strata: Option<[usize; 3]>,
    pub rel_tol: f64,
    /// Monte Carlo: number of sampling passes (the first is uniform, later
    /// ones follow Neyman allocation). Quadrature: subdivision budget per
    /// dimension, in units of 100 intervals.
    pub max_passes: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Quadrature,
            samples: 200_000,
            seed: 20040101,
            strata: None,
            rel_tol: 1e-4,
            max_passes: 4,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 1000 {
            return Err(Error::Config(format!(
                "sample count must be at least 1000, got {}",
                self.samples
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.rel_tol)));
        }
        if self.max_passes == 0 {
            return Err(Error::Config("max_passes must be at least 1".into()));
        }
        if let Some(s) = self.strata {
            if s.iter().any(|&n| n == 0) {
                return Err(Error::Config(format!("strata must be positive, got {s:?}")));
            }
        }
        Ok(())
    }
}

/// Result of integrating over a region. Points where the integrand reports
/// "excluded" contribute zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub std_error: f64,
    pub excluded: u64,
    pub evaluated: u64,
    pub converged: bool,
}

impl IntegralEstimate {
    pub fn sampled(&self) -> u64 {
        self.excluded + self.evaluated
    }

    pub fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            std_error: self.std_error * factor.abs(),
            ..self
        }
    }

    /// Sum of independent estimates.
    pub fn combine(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            std_error: self.std_error.hypot(other.std_error),
            excluded: self.excluded + other.excluded,
            evaluated: self.evaluated + other.evaluated,
            converged: self.converged && other.converged,
        }
    }

    pub fn zero() -> Self {
        Self {
            converged: true,
            ..Self::default()
        }
    }
}

/// Integrates `f` over `region` with the configured method. Quadrature uses
/// the region's symmetry: slabs are integrated along `z` only (the integrand
/// must be invariant in `x, y`), cylinders over `(r, z)` at azimuth zero.
pub fn integrate<F>(f: F, region: &Region, cfg: &IntegratorConfig) -> Result<IntegralEstimate>
where
    F: Fn(&crate::geometry::Point3) -> Option<f64> + Sync,
{
    cfg.validate()?;
    match cfg.method {
        Method::MonteCarlo => integrate_volume(f, region, cfg),
        Method::Quadrature => match region {
            Region::Slab { .. } => integrate_slab(f, region, cfg),
            Region::Cylinder { .. } => integrate_axisymmetric(
                |r, z| f(&crate::geometry::Point3::new(r, 0.0, z)),
                region,
                cfg,
            ),
        },
    }
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
