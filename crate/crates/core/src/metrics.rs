//! Per-run metrics rows and their CSV form.

use std::fs::OpenOptions;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relocation::Instance;
use crate::solvers::{Outcome, Report};

/// Value of the `schema` column; bumped whenever columns change.
pub const SCHEMA: &str = "relocate-metrics/1";

pub const HEADER: [&str; 20] = [
    "schema",
    "instance_id",
    "family",
    "variant",
    "algorithm",
    "n",
    "k",
    "seed",
    "outcome",
    "solved",
    "xi",
    "mu",
    "runtime_ms",
    "sat_ms",
    "sat_calls",
    "clauses",
    "variables",
    "refinements",
    "conflicts",
    "ct_nodes",
];

/// Columns that measure time and therefore differ between identical runs.
pub const TIMING_COLUMNS: [&str; 2] = ["runtime_ms", "sat_ms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub schema: String,
    pub instance_id: String,
    pub family: String,
    pub variant: String,
    pub algorithm: String,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// `solved`, `timeout`, `unsolvable` or `error`.
    pub outcome: String,
    pub solved: bool,
    pub xi: Option<u32>,
    pub mu: Option<usize>,
    pub runtime_ms: f64,
    pub sat_ms: f64,
    pub sat_calls: usize,
    pub clauses: usize,
    pub variables: usize,
    pub refinements: usize,
    pub conflicts: usize,
    pub ct_nodes: usize,
}

fn millis(d: std::time::Duration) -> f64 {
    (d.as_secs_f64() * 1e6).round() / 1e3
}

impl MetricsRow {
    pub fn from_report(instance_id: &str, family: &str, inst: &Instance, seed: u64, report: &Report) -> MetricsRow {
        let s = &report.stats;
        let outcome = match report.outcome {
            Outcome::Solved(_) => "solved",
            Outcome::Timeout => "timeout",
            Outcome::Unsolvable => "unsolvable",
        };
        MetricsRow {
            schema: SCHEMA.to_owned(),
            instance_id: instance_id.to_owned(),
            family: family.to_owned(),
            variant: inst.variant().to_string(),
            algorithm: s.algorithm.to_string(),
            n: inst.num_vertices(),
            k: inst.num_items(),
            seed,
            outcome: outcome.to_owned(),
            solved: report.plan().is_some(),
            xi: s.cost,
            mu: s.makespan,
            runtime_ms: millis(s.wall_time),
            sat_ms: millis(s.sat_time),
            sat_calls: s.sat_calls,
            clauses: s.clauses,
            variables: s.variables,
            refinements: s.refinements,
            conflicts: s.conflicts,
            ct_nodes: s.ct_nodes,
        }
    }

    /// A run that failed before producing a report.
    pub fn failed(instance_id: &str, family: &str, variant: &str, algorithm: &str, n: usize, k: usize, seed: u64) -> MetricsRow {
        MetricsRow {
            schema: SCHEMA.to_owned(),
            instance_id: instance_id.to_owned(),
            family: family.to_owned(),
            variant: variant.to_owned(),
            algorithm: algorithm.to_owned(),
            n,
            k,
            seed,
            outcome: "error".to_owned(),
            solved: false,
            xi: None,
            mu: None,
            runtime_ms: 0.0,
            sat_ms: 0.0,
            sat_calls: 0,
            clauses: 0,
            variables: 0,
            refinements: 0,
            conflicts: 0,
            ct_nodes: 0,
        }
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[MetricsRow], header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        w.write_record(HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn rows_to_string(rows: &[MetricsRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows, true)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != HEADER {
        return Err(Error::InvalidArgument(format!("unexpected metrics header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: MetricsRow = rec?;
        if row.schema != SCHEMA {
            return Err(Error::InvalidArgument(format!("schema {:?} is not {SCHEMA}", row.schema)));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Appends one row, writing the header first if the file is new or empty.
pub fn append_row(path: &Path, row: &MetricsRow) -> Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let fresh = file.metadata()?.len() == 0;
    write_rows(&mut file, std::slice::from_ref(row), fresh)?;
    file.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_header_only() {
        let s = rows_to_string(&[]).unwrap();
        assert_eq!(s, HEADER.join(",") + "\n");
        assert!(read_rows(s.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn round_trip() {
        let mut row = MetricsRow::failed("x", "grid8", "mapf", "cbs", 64, 8, 3);
        row.xi = Some(12);
        row.runtime_ms = 1.25;
        let s = rows_to_string(std::slice::from_ref(&row)).unwrap();
        assert_eq!(read_rows(s.as_bytes()).unwrap(), vec![row]);
    }

    #[test]
    fn rejects_foreign_header() {
        assert!(read_rows("a,b\n1,2\n".as_bytes()).is_err());
    }
}
