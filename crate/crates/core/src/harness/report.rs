//! Schema-versioned JSON and plain CSV reports.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::campaign::InequalityReport;
use crate::mild_solver::SolverSummary;

pub const SCHEMA: &str = "varns-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportBody {
    Campaign(InequalityReport),
    Campaigns { reports: Vec<InequalityReport> },
    Solver(SolverSummary),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    #[serde(flatten)]
    pub body: ReportBody,
}

impl Report {
    pub fn new(body: ReportBody) -> Self {
        Report {
            schema: SCHEMA.to_string(),
            body,
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

pub fn emit_report(report: &Report, path: &Path, format: ReportFormat) -> Result<()> {
    match format {
        ReportFormat::Json => {
            let mut w = create(path)?;
            serde_json::to_writer_pretty(&mut w, report).map_err(|e| Error::Format(e.to_string()))?;
            w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
        }
        ReportFormat::Csv => match &report.body {
            ReportBody::Campaign(r) => campaign_csv(std::slice::from_ref(r), path),
            ReportBody::Campaigns { reports } => campaign_csv(reports, path),
            ReportBody::Solver(s) => solver_csv(s, path),
        },
    }
}

pub fn read_report(path: &Path) -> Result<Report> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let report: Report =
        serde_json::from_reader(std::io::BufReader::new(file)).map_err(|e| Error::Format(e.to_string()))?;
    if report.schema != SCHEMA {
        return Err(Error::Format(format!("unsupported schema {:?}", report.schema)));
    }
    Ok(report)
}

/// One row per evaluation: `target,grid_index,level,element,ratio`.
fn campaign_csv(reports: &[InequalityReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["target", "grid_index", "level", "element", "ratio"])
        .map_err(|e| csv_err(path, e))?;
    for r in reports {
        for ev in &r.evaluations {
            w.write_record([
                r.target.name().to_string(),
                ev.grid_index.to_string(),
                ev.level.to_string(),
                ev.element.to_string(),
                format!("{:e}", ev.ratio),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per Picard iterate, starting at `iter = 0` (`e0`). The increment
/// column is empty on row 0 and the residual is only known for the last row.
fn solver_csv(s: &SolverSummary, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["iter", "E_norm", "increment_norm", "residual"])
        .map_err(|e| csv_err(path, e))?;
    let last = s.iterates_norms.len() - 1;
    for (i, n) in s.iterates_norms.iter().enumerate() {
        let inc = if i == 0 { String::new() } else { format!("{:e}", s.increments[i - 1]) };
        let res = if i == last { format!("{:e}", s.residual) } else { String::new() };
        w.write_record([i.to_string(), format!("{n:e}"), inc, res])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
