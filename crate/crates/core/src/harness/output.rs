//! Tabular outputs and their schemas.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::csvio::write_row;

/// One documented CSV column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    pub name: &'static str,
    pub kind: &'static str,
    pub description: &'static str,
}

const fn col(name: &'static str, kind: &'static str, description: &'static str) -> Column {
    Column { name, kind, description }
}

pub const POWER_COLUMNS: [Column; 4] = [
    col("n", "integer", "number of surface elements"),
    col("ris_type", "string", "diagonal, fully-connected, random-diagonal or random-fully-connected"),
    col("trial", "integer", "trial index"),
    col("received_power_dbm", "float", "power received by the tag in dBm"),
];

pub const BENCH_COLUMNS: [Column; 10] = [
    col("algorithm", "string", "rzf, fp, ao or qnm"),
    col("n", "integer", "number of surface elements"),
    col("trial", "integer", "trial index"),
    col("sum_rate_bps_hz", "float", "RZF-precoded sum rate averaged over snapshots, bits/s/Hz"),
    col("per_device_rate_bps_hz", "float", "sum rate divided by the number of devices"),
    col("wall_time_s", "float", "optimizer wall time in seconds (omitted with --no-timing)"),
    col("iterations", "integer", "optimizer iterations"),
    col("converged", "bool", "whether the optimizer met its stationarity test"),
    col("final_objective", "float", "optimizer's own final objective value"),
    col("objective", "string", "kind of final_objective: channel_gain, sum_rate or cross_term"),
];

pub const QML_COLUMNS: [Column; 7] = [
    col("trial", "integer", "independent training run"),
    col("epoch", "integer", "epoch index, metrics taken after its update"),
    col("split", "string", "train or validation"),
    col("cross_entropy", "float", "mean cross-entropy on the split"),
    col("acc_delta0", "float", "distance-based accuracy with tolerance 0"),
    col("acc_delta1", "float", "distance-based accuracy with tolerance 1"),
    col("acc_delta2", "float", "distance-based accuracy with tolerance 2"),
];

/// A header and its string-formatted rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|s| s.as_ref().to_owned()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Drops the named column if present.
    pub fn without(mut self, name: &str) -> Self {
        if let Some(k) = self.header.iter().position(|h| h == name) {
            self.header.remove(k);
            for r in &mut self.rows {
                r.remove(k);
            }
        }
        self
    }

    pub fn write<W: Write + ?Sized>(&self, out: &mut W) -> io::Result<()> {
        write_row(out, &self.header)?;
        for r in &self.rows {
            write_row(out, r)?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> io::Result<()> {
        write_file(path, |w| self.write(w))
    }
}

pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()
}

/// `schema.txt`: one `name<TAB>type<TAB>description` line per column, in
/// `results.csv` order.
pub fn write_schema<W: Write + ?Sized>(columns: &[Column], out: &mut W) -> io::Result<()> {
    for c in columns {
        writeln!(out, "{}\t{}\t{}", c.name, c.kind, c.description)?;
    }
    Ok(())
}

/// Column names listed in a `schema.txt`.
pub fn schema_names(text: &str) -> Vec<&str> {
    text.lines().filter_map(|l| l.split('\t').next()).filter(|s| !s.is_empty()).collect()
}

pub const PLOTSPEC_HEADER: [&str; 6] = ["plot", "file", "x", "y", "series", "aggregate"];

/// A row of `plotspec.csv`: which columns draw which figure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlotSpec {
    pub plot: &'static str,
    pub file: &'static str,
    pub x: &'static str,
    pub y: &'static str,
    pub series: &'static str,
    pub aggregate: &'static str,
}

pub fn write_plotspec<W: Write + ?Sized>(specs: &[PlotSpec], out: &mut W) -> io::Result<()> {
    write_row(out, &PLOTSPEC_HEADER)?;
    for p in specs {
        write_row(out, &[p.plot, p.file, p.x, p.y, p.series, p.aggregate])?;
    }
    Ok(())
}

/// Outcome of an ordinal check on the results.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// `None` when the check could not be evaluated, e.g. without timing.
    pub passed: Option<bool>,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: Some(passed), detail: detail.into() }
    }

    pub fn skipped(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed: None, detail: detail.into() }
    }

    pub fn status(&self) -> &'static str {
        match self.passed {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "skipped",
        }
    }
}

pub fn write_checks<W: Write + ?Sized>(checks: &[Check], out: &mut W) -> io::Result<()> {
    write_row(out, &["check", "status", "detail"])?;
    for c in checks {
        // Details are free text; keep them inside one field.
        let detail = c.detail.replace(',', ";");
        write_row(out, &[c.name.as_str(), c.status(), detail.as_str()])?;
    }
    Ok(())
}
