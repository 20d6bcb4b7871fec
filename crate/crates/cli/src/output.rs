//! CSV and JSON emission.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;

/// Scientific notation with 13 significant digits; non-finite values as `NaN`.
pub fn sci(v: f64) -> String {
    if v == 0.0 {
        format!("{:.12e}", 0.0)
    } else if v.is_finite() {
        format!("{v:.12e}")
    } else {
        "NaN".into()
    }
}

/// Empty cell for a missing value.
pub fn cell(v: Option<f64>) -> String {
    v.map(sci).unwrap_or_default()
}

/// Column name carrying its unit, e.g. `E_optical[hbar_c/um]`.
pub fn energy_column(name: &str, unit: &str) -> String {
    format!("{name}[hbar_c/{unit}]")
}

pub fn length_column(name: &str, unit: &str) -> String {
    format!("{name}[{unit}]")
}

pub fn open(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Envelope around every JSON document.
#[derive(Debug, Serialize)]
pub struct Document<'a, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub config: &'a RunConfig,
    pub warnings: &'a [String],
    pub data: T,
}

pub fn write_json<W: Write, T: Serialize>(mut w: W, doc: &Document<'_, T>) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, doc)?;
    writeln!(w)?;
    w.flush()
}
