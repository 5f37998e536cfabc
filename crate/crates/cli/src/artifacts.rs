//! CSV, JSON and gnuplot emission. Floats are written in Rust's shortest
//! round-trip form, so re-reading a file reproduces every value exactly.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

/// Named columns of equal length, one row per record or node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_columns(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Builds a table column by column; all columns must have one entry per row.
    pub fn from_columns(named: Vec<(String, Vec<f64>)>) -> Self {
        let n = named.first().map_or(0, |c| c.1.len());
        let rows = (0..n).map(|i| named.iter().map(|c| c.1[i]).collect()).collect();
        Self {
            columns: named.into_iter().map(|c| c.0).collect(),
            rows,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{v:?}");
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub fields: Table,
}

impl Snapshot {
    pub fn file_name(&self) -> String {
        format!("fields_{}.csv", time_label(self.t))
    }
}

/// `0.5 → "0.5"`, `3.0 → "3"`: six decimals with trailing zeros removed.
pub fn time_label(t: f64) -> String {
    let s = format!("{t:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// A failed run: where it stopped and why.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub t: f64,
    pub kind: &'static str,
    pub message: String,
}

/// Everything one run emits.
#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: String,
    pub config_echo: Value,
    pub trajectory: Table,
    pub snapshots: Vec<Snapshot>,
    pub results: Value,
    pub failure: Option<Failure>,
}

impl Report {
    pub fn status(&self) -> &'static str {
        if self.failure.is_some() {
            "failed"
        } else {
            "ok"
        }
    }

    /// `summary.json` without the run metadata (the part covered by golden files).
    pub fn summary_data(&self) -> Value {
        json!({
            "status": self.status(),
            "scenario": self.scenario,
            "config": self.config_echo,
            "results": self.results,
            "error": self.failure.as_ref().map(|f| json!({"t": f.t, "kind": f.kind, "message": f.message})),
            "artifacts": {
                "trajectory": "trajectory.csv",
                "fields": self.snapshots.iter().map(Snapshot::file_name).collect::<Vec<_>>(),
            },
        })
    }

    /// Writes all artifacts into `dir`; `wall_clock` lands in `metadata` only.
    pub fn write(&self, dir: &Path, wall_clock: f64, plot: bool) -> io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str, text: String| -> io::Result<()> {
            let p = dir.join(name);
            std::fs::write(&p, text)?;
            written.push(p);
            Ok(())
        };
        put("trajectory.csv", self.trajectory.to_csv())?;
        for s in &self.snapshots {
            put(&s.file_name(), s.fields.to_csv())?;
        }
        let mut summary = self.summary_data();
        summary["metadata"] = json!({
            "wall_clock_seconds": wall_clock,
            "version": env!("CARGO_PKG_VERSION"),
        });
        let mut text = serde_json::to_string_pretty(&summary).map_err(io::Error::other)?;
        text.push('\n');
        put("summary.json", text)?;
        if plot {
            put("plot.gp", self.gnuplot())?;
        }
        Ok(written)
    }

    /// A gnuplot script drawing the time series and the snapshot profiles.
    pub fn gnuplot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} run; render with `gnuplot plot.gp`", self.scenario);
        s.push_str("set datafile separator ','\nset key autotitle columnhead outside\n");
        s.push_str("set terminal pngcairo size 1000,640\n");
        let cols = self.trajectory.columns.len();
        if cols > 1 && self.trajectory.rows.len() > 1 {
            s.push_str("set output 'trajectory.png'\nset xlabel 't'\nset logscale y\n");
            let _ = writeln!(s, "plot for [i=2:{cols}] 'trajectory.csv' using 1:(abs(column(i))) with lines");
            s.push_str("unset logscale y\n");
        }
        for snap in &self.snapshots {
            let n = snap.fields.columns.len();
            let name = snap.file_name();
            let _ = writeln!(s, "set output '{}.png'", name.trim_end_matches(".csv"));
            let _ = writeln!(s, "set xlabel 'x'\nset title 't = {}'", time_label(snap.t));
            let _ = writeln!(s, "plot for [i=2:{n}] '{name}' using 1:i with lines");
        }
        s
    }
}

/// Indices of the records nearest to each requested time (first and last by
/// default), deduplicated and in time order.
pub fn snapshot_indices(times: &[f64], requested: Option<&[f64]>) -> Vec<usize> {
    if times.is_empty() {
        return Vec::new();
    }
    let mut idx: Vec<usize> = match requested {
        None => vec![0, times.len() - 1],
        Some(req) => req
            .iter()
            .map(|&t| {
                times
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
                    .map_or(0, |p| p.0)
            })
            .collect(),
    };
    idx.sort_unstable();
    idx.dedup();
    idx
}
