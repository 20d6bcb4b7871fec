//! The `energy`, `sweep` and `map` subcommands.

use std::io::Write;

use anyhow::{bail, Result};
use casimir_optics::energy::{local_integrand, pfa_energy, pfa_star_energy, total_energy, EnergyResult, Tag};
use casimir_optics::geometry::Point3;
use casimir_optics::scenes::{Scene, SceneConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Format, RunConfig, MIN_GRID};
use crate::output::{cell, csv_writer, energy_column, length_column, sci, write_json, Document};

pub fn energy(cfg: &RunConfig) -> Result<EnergyResult> {
    let scene = Scene::build(cfg.geometry)?;
    Ok(total_energy(&scene, &cfg.params(), cfg.physics.max_reflections, &cfg.integrator())?)
}

/// Warnings attached to an energy result.
pub fn energy_warnings(r: &EnergyResult) -> Vec<String> {
    let mut w: Vec<String> = r
        .contributions
        .iter()
        .filter(|c| !c.converged)
        .map(|c| format!("class {} did not reach the requested tolerance", c.label))
        .collect();
    if r.caustics() > 0 {
        w.push(format!("{} sample points hit a caustic and were skipped", r.caustics()));
    }
    w
}

pub fn write_energy<W: Write>(w: W, cfg: &RunConfig, r: &EnergyResult, warnings: &[String]) -> Result<()> {
    match cfg.output.format {
        Format::Json => write_json(
            w,
            &Document {
                command: "energy",
                version: crate::VERSION,
                seed: cfg.integration.seed,
                config: cfg,
                warnings,
                data: r,
            },
        )?,
        Format::Csv => {
            let u = &cfg.output.length_unit;
            let mut out = csv_writer(w);
            let e = |n: &str| energy_column(n, u);
            out.write_record([
                "record".to_string(),
                "n".into(),
                "sequence".into(),
                "multiplicity".into(),
                "tag".into(),
                e("value"),
                e("error"),
                e("finite"),
                e("finite_error"),
                e("divergent"),
                "fraction".into(),
                "even_fraction".into(),
                "converged".into(),
            ])?;
            for c in &r.contributions {
                let tag = match c.tag {
                    Tag::Finite => "finite",
                    Tag::Divergent => "divergent",
                };
                out.write_record([
                    "class".to_string(),
                    c.order.to_string(),
                    c.label.clone(),
                    c.multiplicity.to_string(),
                    tag.into(),
                    sci(c.value),
                    sci(c.error),
                    sci(c.finite),
                    sci(c.finite_error),
                    cell(c.divergent),
                    String::new(),
                    String::new(),
                    c.converged.to_string(),
                ])?;
            }
            for o in &r.orders {
                out.write_record([
                    "order".to_string(),
                    o.order.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    sci(o.value),
                    sci(o.error),
                    sci(o.value),
                    sci(o.error),
                    String::new(),
                    sci(o.fraction),
                    sci(o.even_fraction),
                    String::new(),
                ])?;
            }
            out.write_record([
                "total".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                sci(r.finite + r.divergent),
                sci(r.finite_error),
                sci(r.finite),
                sci(r.finite_error),
                sci(r.divergent),
                String::new(),
                String::new(),
                r.converged.to_string(),
            ])?;
            out.flush()?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub xi: f64,
    pub e_optical: f64,
    pub e_optical_err: f64,
    pub e_pfa_plate: f64,
    pub e_pfa_sphere: f64,
    pub e_pfa_star: f64,
    pub ratio_opt_to_pfa_plate: f64,
    pub converged: bool,
}

/// `points` values of `ξ`, evenly spaced in `ln ξ`, endpoints included.
pub fn log_spaced(xi_min: f64, xi_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(xi_min > 0.0 && xi_min < xi_max && xi_max.is_finite()) {
        bail!("need 0 < xi_min < xi_max, got {xi_min} and {xi_max}");
    }
    if points < 2 {
        bail!("need at least 2 points, got {points}");
    }
    let (lo, hi) = (xi_min.ln(), xi_max.ln());
    Ok((0..points)
        .map(|i| match i {
            0 => xi_min,
            i if i == points - 1 => xi_max,
            i => (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp(),
        })
        .collect())
}

fn sweep_row(cfg: &RunConfig, radius: f64, xi: f64) -> Result<SweepRow> {
    let geometry = SceneConfig::SpherePlate { a: xi * radius, radius };
    let scene = Scene::build(geometry)?;
    let integ = cfg.integrator();
    let opt = total_energy(&scene, &cfg.params(), cfg.physics.max_reflections, &integ)?;
    let plate = pfa_energy(&scene, 0, &integ)?;
    Ok(SweepRow {
        xi,
        e_optical: opt.finite,
        e_optical_err: opt.finite_error,
        e_pfa_plate: plate,
        e_pfa_sphere: pfa_energy(&scene, 1, &integ)?,
        e_pfa_star: pfa_star_energy(&scene, &integ)?.value,
        ratio_opt_to_pfa_plate: opt.finite / plate,
        converged: opt.converged,
    })
}

/// Sphere–plate energies at log-spaced `ξ` with the configured radius. Rows
/// that fail carry NaN and a warning.
pub fn sweep(cfg: &RunConfig, xi_min: f64, xi_max: f64, points: usize) -> Result<(Vec<SweepRow>, Vec<String>)> {
    let SceneConfig::SpherePlate { radius, .. } = cfg.geometry else {
        bail!("sweep needs a sphere_plate geometry");
    };
    let mut rows = Vec::with_capacity(points);
    let mut warnings = Vec::new();
    for xi in log_spaced(xi_min, xi_max, points)? {
        match sweep_row(cfg, radius, xi) {
            Ok(row) => {
                if !row.converged {
                    warnings.push(format!("xi = {xi}: optical energy did not reach the requested tolerance"));
                }
                rows.push(row);
            }
            Err(e) => {
                warnings.push(format!("xi = {xi}: {e}"));
                rows.push(SweepRow {
                    xi,
                    e_optical: f64::NAN,
                    e_optical_err: f64::NAN,
                    e_pfa_plate: f64::NAN,
                    e_pfa_sphere: f64::NAN,
                    e_pfa_star: f64::NAN,
                    ratio_opt_to_pfa_plate: f64::NAN,
                    converged: false,
                });
            }
        }
    }
    Ok((rows, warnings))
}

pub fn write_sweep<W: Write>(w: W, cfg: &RunConfig, rows: &[SweepRow], warnings: &[String]) -> Result<()> {
    match cfg.output.format {
        Format::Json => write_json(
            w,
            &Document {
                command: "sweep",
                version: crate::VERSION,
                seed: cfg.integration.seed,
                config: cfg,
                warnings,
                data: rows,
            },
        )?,
        Format::Csv => {
            let u = &cfg.output.length_unit;
            let mut out = csv_writer(w);
            out.write_record([
                "xi".to_string(),
                energy_column("E_optical", u),
                energy_column("E_optical_err", u),
                energy_column("E_pfa_plate", u),
                energy_column("E_pfa_sphere", u),
                energy_column("E_pfa_star", u),
                "ratio_opt_to_pfa_plate".into(),
            ])?;
            for r in rows {
                out.write_record([
                    sci(r.xi),
                    sci(r.e_optical),
                    sci(r.e_optical_err),
                    sci(r.e_pfa_plate),
                    sci(r.e_pfa_sphere),
                    sci(r.e_pfa_star),
                    sci(r.ratio_opt_to_pfa_plate),
                ])?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapCell {
    pub r: f64,
    pub z: f64,
    pub integrand: Option<f64>,
}

/// Default `(r_max, z_max)` of the map window.
pub fn map_extent(cfg: &RunConfig) -> (f64, f64) {
    let (r, z) = match cfg.geometry {
        SceneConfig::ParallelPlates { a, side } => (0.5 * side, a),
        SceneConfig::SpherePlate { a, radius } => (1.5 * radius, a + 2.5 * radius),
    };
    (cfg.output.r_max.unwrap_or(r), cfg.output.z_max.unwrap_or(z))
}

/// Separation-dependent integrand of every class up to the configured order,
/// at the centers of a `grid × grid` mesh over `(r, z)`. Rows run over `z`
/// fastest.
pub fn map(cfg: &RunConfig, grid: usize) -> Result<Vec<MapCell>> {
    if grid < MIN_GRID {
        bail!("grid must be at least {MIN_GRID}, got {grid}");
    }
    let scene = Scene::build(cfg.geometry)?;
    let params = cfg.params();
    let (r_max, z_max) = map_extent(cfg);
    let n = cfg.physics.max_reflections;
    Ok((0..grid * grid)
        .into_par_iter()
        .map(|k| {
            let r = (k / grid) as f64 + 0.5;
            let z = (k % grid) as f64 + 0.5;
            let (r, z) = (r * r_max / grid as f64, z * z_max / grid as f64);
            MapCell { r, z, integrand: local_integrand(&scene, &params, n, &Point3::new(r, 0.0, z)) }
        })
        .collect())
}

pub fn write_map<W: Write>(w: W, cfg: &RunConfig, cells: &[MapCell]) -> Result<()> {
    match cfg.output.format {
        Format::Json => write_json(
            w,
            &Document {
                command: "map",
                version: crate::VERSION,
                seed: cfg.integration.seed,
                config: cfg,
                warnings: &[],
                data: cells,
            },
        )?,
        Format::Csv => {
            let u = &cfg.output.length_unit;
            let mut out = csv_writer(w);
            out.write_record([length_column("r", u), length_column("z", u), format!("integrand[hbar_c/{u}^4]")])?;
            for c in cells {
                out.write_record([sci(c.r), sci(c.z), cell(c.integrand)])?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_spacing() {
        let xs = log_spaced(0.01, 1.0, 3).unwrap();
        assert_eq!(xs[0], 0.01);
        assert_eq!(xs[2], 1.0);
        assert!((xs[1] - 0.1).abs() < 1e-15);
        assert!(log_spaced(0.0, 1.0, 3).is_err());
        assert!(log_spaced(1.0, 0.5, 3).is_err());
        assert!(log_spaced(0.1, 0.5, 1).is_err());
    }
}
