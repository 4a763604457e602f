//! CSV tables with one fixed header per file.

use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};

/// Header of every table except the orbit samples.
pub const HEADER: [&str; 7] = ["kappa", "index", "level", "quantity", "value", "tolerance", "status"];
pub const ORBIT_HEADER: [&str; 6] = ["kappa", "orbit", "t", "re_z", "im_z", "drift"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Flag,
    Info,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Flag => "flag",
            Status::Info => "info",
        }
    }

    pub fn check(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Flag
        }
    }
}

/// `kappa`, a row index (level, trial or zero number), the level or `s`
/// where it applies, what was measured, the value, and the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub kappa: f64,
    pub index: usize,
    pub level: Option<f64>,
    pub quantity: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub status: Status,
}

impl Row {
    pub fn info(kappa: f64, index: usize, level: Option<f64>, quantity: impl Into<String>, value: f64) -> Self {
        Self { kappa, index, level, quantity: quantity.into(), value, tolerance: None, status: Status::Info }
    }

    /// Passes when `value <= tolerance`.
    pub fn bounded(kappa: f64, index: usize, level: Option<f64>, quantity: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            kappa,
            index,
            level,
            quantity: quantity.into(),
            value,
            tolerance: Some(tolerance),
            status: Status::check(value <= tolerance),
        }
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_rows(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            num(r.kappa),
            r.index.to_string(),
            opt(r.level),
            r.quantity.clone(),
            num(r.value),
            opt(r.tolerance),
            r.status.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn orbit_writer(path: &Path) -> Result<csv::Writer<File>> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(ORBIT_HEADER)?;
    Ok(w)
}

pub fn flagged(rows: &[Row]) -> usize {
    rows.iter().filter(|r| r.status == Status::Flag).count()
}
