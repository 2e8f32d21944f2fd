//! CSV and JSON output. Floats are written with 17 significant digits so that
//! re-parsing reproduces them bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::config::Scenario;
use super::run::{FourConfigurationReport, MagnitudeReport, ScanRecord};
use crate::dynamics::CancellationReport;
use crate::hyperfine::Sublevel;
use crate::{Error, Result};

pub fn csv_header() -> Vec<String> {
    let mut h = vec![
        "scan_var".to_string(),
        "visibility".into(),
        "phase_rad".into(),
    ];
    h.extend(Sublevel::ALL.iter().map(|s| s.label()));
    h
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(records: &[ScanRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(csv_header()).map_err(io)?;
    for r in records {
        let mut row = vec![fmt(r.scan_value), fmt(r.modulus), fmt(r.phase)];
        row.extend(r.breakdown.total.iter().map(|&x| fmt(x)));
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scan_value: f64,
    pub modulus: f64,
    pub phase: f64,
    pub sublevel_phases: [f64; 8],
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let bad = |m: String| Error::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, m));
    let header: Vec<String> = r
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != csv_header() {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let v: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| bad(format!("`{f}`: {e}"))))
            .collect::<Result<_>>()?;
        let mut sub = [0.0; 8];
        sub.copy_from_slice(&v[3..11]);
        rows.push(CsvRow {
            scan_value: v[0],
            modulus: v[1],
            phase: v[2],
            sublevel_phases: sub,
        });
    }
    Ok(rows)
}

/// JSON summary: config echo, records and derived reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub records: Vec<ScanRecord>,
    pub magnitudes: MagnitudeReport,
    pub four_configuration: Option<FourConfigurationReport>,
    pub force_cancellation: Option<CancellationReport>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub points: usize,
    pub min_modulus: f64,
    pub max_modulus: f64,
    /// Largest ⟨δφ²⟩ of the trajectory dispersion, when P(y) averaging is on.
    pub max_trajectory_m2: Option<f64>,
    pub max_trajectory_deviation: Option<f64>,
}

impl Diagnostics {
    pub fn from_records(records: &[ScanRecord]) -> Self {
        let m2 = records
            .iter()
            .filter_map(|r| r.moments.map(|m| m.m2))
            .reduce(f64::max);
        let dev = records
            .iter()
            .filter_map(|r| r.moments.map(|m| m.max_abs_deviation))
            .reduce(f64::max);
        Diagnostics {
            points: records.len(),
            min_modulus: records
                .iter()
                .map(|r| r.modulus)
                .fold(f64::INFINITY, f64::min),
            max_modulus: records.iter().map(|r| r.modulus).fold(0.0, f64::max),
            max_trajectory_m2: m2,
            max_trajectory_deviation: dev,
        }
    }
}

pub fn write_json<W: Write, T: Serialize>(value: &T, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, value).map_err(|e| Error::Io(std::io::Error::other(e)))
}
