//! Run configuration: a TOML file with `[geometry]`, `[physics]`,
//! `[integration]` and `[output]` sections. Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use casimir_optics::energy::{BoundaryCondition, PhysicalParams};
use casimir_optics::numerics::{IntegratorConfig, Method};
use casimir_optics::scenes::SceneConfig;
use serde::{Deserialize, Serialize};

pub const MIN_GRID: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: SceneConfig,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub integration: Integration,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    pub mass: f64,
    pub bc: BoundaryCondition,
    pub cutoff: f64,
    /// Highest reflection order summed.
    pub max_reflections: usize,
}

impl Default for Physics {
    fn default() -> Self {
        let p = PhysicalParams::default();
        Self { mass: p.mass, bc: p.bc, cutoff: p.cutoff, max_reflections: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Integration {
    pub method: Method,
    pub samples: usize,
    pub seed: u64,
    pub strata: Option<[usize; 3]>,
    pub rel_tol: f64,
    pub max_passes: usize,
}

impl Default for Integration {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            method: d.method,
            samples: d.samples,
            seed: d.seed,
            strata: d.strata,
            rel_tol: 1e-3,
            max_passes: d.max_passes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub format: Format,
    /// Written to stdout when absent.
    pub path: Option<PathBuf>,
    /// Cells per axis for `map`.
    pub grid: usize,
    /// Name of the length unit the geometry is given in.
    pub length_unit: String,
    /// Map extents; defaults follow the scene.
    pub r_max: Option<f64>,
    pub z_max: Option<f64>,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            format: Format::Csv,
            path: None,
            grid: 32,
            length_unit: "um".into(),
            r_max: None,
            z_max: None,
        }
    }
}

/// Configuration error, anchored to a line of the file when one applies.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.path, l, self.message),
            None => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.display().to_string(),
            line: None,
            message: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates; `origin` names the source in messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let err = |line: Option<usize>, message: String| ConfigError { path: origin.to_string(), line, message };
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
            err(line, e.message().to_string())
        })?;
        cfg.check().map_err(|(section, key, msg)| err(key_line(text, section, key), msg))?;
        Ok(cfg)
    }

    /// Semantic checks; failures name the offending section and key.
    fn check(&self) -> Result<(), (&'static str, &'static str, String)> {
        if let Err(e) = self.geometry.validate() {
            let key = match self.geometry {
                SceneConfig::ParallelPlates { a, .. } | SceneConfig::SpherePlate { a, .. } if !(a > 0.0 && a.is_finite()) => "a",
                SceneConfig::ParallelPlates { .. } => "side",
                SceneConfig::SpherePlate { .. } => "radius",
            };
            return Err(("geometry", key, e.to_string()));
        }
        let p = self.params();
        if let Err(e) = p.validate() {
            let key = if !(p.mass >= 0.0 && p.mass.is_finite()) { "mass" } else { "cutoff" };
            return Err(("physics", key, e.to_string()));
        }
        if self.physics.max_reflections < 2 {
            return Err(("physics", "max_reflections", format!("max_reflections must be at least 2, got {}", self.physics.max_reflections)));
        }
        if let Err(e) = self.integrator().validate() {
            let i = &self.integration;
            let key = if i.samples < 1000 {
                "samples"
            } else if !(i.rel_tol > 0.0) {
                "rel_tol"
            } else if i.max_passes == 0 {
                "max_passes"
            } else {
                "strata"
            };
            return Err(("integration", key, e.to_string()));
        }
        if self.output.grid < MIN_GRID {
            return Err(("output", "grid", format!("grid must be at least {MIN_GRID}, got {}", self.output.grid)));
        }
        for (key, v) in [("r_max", self.output.r_max), ("z_max", self.output.z_max)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(("output", key, format!("{key} must be positive, got {v}")));
                }
            }
        }
        if self.output.length_unit.trim().is_empty() || self.output.length_unit.contains([',', '"', '\n']) {
            return Err(("output", "length_unit", format!("unusable length unit {:?}", self.output.length_unit)));
        }
        Ok(())
    }

    pub fn params(&self) -> PhysicalParams {
        PhysicalParams { mass: self.physics.mass, bc: self.physics.bc, cutoff: self.physics.cutoff }
    }

    pub fn integrator(&self) -> IntegratorConfig {
        let i = &self.integration;
        IntegratorConfig {
            method: i.method,
            samples: i.samples,
            seed: i.seed,
            strata: i.strata,
            rel_tol: i.rel_tol,
            max_passes: i.max_passes,
        }
    }
}

/// Line (1-based) of `key = …` inside `[section]`.
fn key_line(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
        } else if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLATES: &str = "[geometry]\nkind = \"parallel_plates\"\na = 1.0\nside = 1.0\n";

    #[test]
    fn defaults_fill_missing_sections() {
        let cfg = RunConfig::parse(PLATES, "t").unwrap();
        assert_eq!(cfg.geometry, SceneConfig::ParallelPlates { a: 1.0, side: 1.0 });
        assert_eq!(cfg.physics, Physics::default());
        assert_eq!(cfg.output.grid, 32);
    }

    #[test]
    fn unknown_keys_name_their_line() {
        let text = format!("{PLATES}\n[physics]\nmass = 0.0\ncolour = 3\n");
        let e = RunConfig::parse(&text, "run.toml").unwrap_err();
        assert_eq!(e.line, Some(8), "{e}");
        assert!(e.to_string().starts_with("run.toml:8:"), "{e}");
        let e = RunConfig::parse("[geometry]\nkind = \"sphere_plate\"\na = 1.0\nradius = 1.0\nside = 2.0\n", "t").unwrap_err();
        assert_eq!(e.line, Some(1), "{e}");
        assert!(e.message.contains("side"), "{e}");
    }

    #[test]
    fn invalid_values_name_their_line() {
        let e = RunConfig::parse("[geometry]\nkind = \"sphere_plate\"\nradius = 1.0\na = -0.5\n", "t").unwrap_err();
        assert_eq!(e.line, Some(4), "{e}");
        let text = format!("{PLATES}[output]\nformat = \"json\"\ngrid = 4\n");
        assert_eq!(RunConfig::parse(&text, "t").unwrap_err().line, Some(7));
        let text = format!("{PLATES}[integration]\nsamples = 10\n");
        assert_eq!(RunConfig::parse(&text, "t").unwrap_err().line, Some(6));
        let text = format!("{PLATES}[physics]\nbc = \"robin\"\n");
        assert_eq!(RunConfig::parse(&text, "t").unwrap_err().line, Some(6));
    }

    #[test]
    fn syntax_errors_name_their_line() {
        let e = RunConfig::parse("[geometry]\nkind = \"parallel_plates\"\na = = 1\n", "t").unwrap_err();
        assert_eq!(e.line, Some(3), "{e}");
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::parse(PLATES, "t").unwrap();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::parse(&text, "t").unwrap(), cfg);
    }
}
