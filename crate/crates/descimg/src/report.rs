//! Rendering of evaluation reports and checkpoint series.
//!
//! Percentages use two decimals (`94.90%`); CSV, JSON and plot-series
//! outputs keep full precision. In every report the `PerImage` confusion
//! matrix counts images, the fusion matrices count sites.

use std::fmt::Write as _;
use std::str::FromStr;

use descimg_core::{best_metric, CheckpointSeries, EvaluationReport, Family, Level, MetricId};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Table,
    Csv,
    Json,
    /// Long-form `epoch,metric,accuracy` rows for plotting curves.
    PlotSeries,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "plot-series" => Ok(Self::PlotSeries),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

impl ReportFormat {
    pub const NAMES: [&'static str; 4] = ["table", "csv", "json", "plot-series"];
}

/// A saved report or series, as read back from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Document {
    Series(CheckpointSeries),
    Report(EvaluationReport),
}

pub fn parse_document(text: &str) -> std::result::Result<Document, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn percent(accuracy: f64) -> String {
    format!("{:.2}%", accuracy * 100.0)
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn render_document(doc: &Document, format: ReportFormat) -> Result<String> {
    match doc {
        Document::Report(r) => render_report(r, format),
        Document::Series(s) => render_series(s, format),
    }
}

pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Table => Ok(report_table(report)),
        ReportFormat::Csv => {
            let mut out = String::from("metric,accuracy,correct,total\n");
            for (metric, cm) in &report.confusion {
                let _ = writeln!(
                    out,
                    "{metric},{},{},{}",
                    report.accuracy_by_metric[metric],
                    cm.trace(),
                    cm.total()
                );
            }
            Ok(out)
        }
        ReportFormat::Json => Ok(json(report)),
        ReportFormat::PlotSeries => Err(Error::Config(
            "plot-series output needs a checkpoint series".into(),
        )),
    }
}

fn report_table(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "sites evaluated: {}  images: {}  skipped: {}",
        report.evaluated_sites,
        report.per_image_count,
        report.skipped.len()
    );
    out.push('\n');
    out.push_str(&metric_grid(report));
    if let Some((metric, acc)) = best_metric(report) {
        let _ = writeln!(out, "\nbest: {metric} {}", percent(acc));
    }
    if !report.skipped.is_empty() {
        out.push_str("\nskipped sites:\n");
        for s in &report.skipped {
            let _ = writeln!(out, "  {}: {}", s.site_id, s.reason);
        }
    }
    out
}

fn metric_grid(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<8}", "");
    for level in Level::ALL {
        let _ = write!(out, "{:>10}", format!("k={}", level.k()));
    }
    out.push('\n');
    for family in Family::ALL {
        let _ = write!(out, "{:<8}", family.letter().to_string());
        for level in Level::ALL {
            let cell = report
                .accuracy(MetricId::Fusion(family, level))
                .map_or_else(|| "-".to_string(), percent);
            let _ = write!(out, "{cell:>10}");
        }
        out.push('\n');
    }
    let per_image = report
        .accuracy(MetricId::PerImage)
        .map_or_else(|| "-".to_string(), percent);
    let _ = writeln!(out, "{:<8}{per_image:>10}", "PerImage");
    out
}

pub fn render_series(series: &CheckpointSeries, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Table => Ok(series_table(series)),
        ReportFormat::Csv => {
            let mut out = String::from("epoch");
            for m in MetricId::ALL {
                let _ = write!(out, ",{m}");
            }
            out.push('\n');
            for p in &series.points {
                let _ = write!(out, "{}", p.epoch);
                for m in MetricId::ALL {
                    let _ = write!(out, ",{}", p.report.accuracy(m).unwrap_or(f64::NAN));
                }
                out.push('\n');
            }
            Ok(out)
        }
        ReportFormat::Json => Ok(json(series)),
        ReportFormat::PlotSeries => {
            let mut out = String::from("epoch,metric,accuracy\n");
            for m in MetricId::ALL {
                for (epoch, acc) in series.curve(m) {
                    let _ = writeln!(out, "{epoch},{m},{acc}");
                }
            }
            Ok(out)
        }
    }
}

fn series_table(series: &CheckpointSeries) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:>6}", "epoch");
    for m in MetricId::ALL {
        let _ = write!(out, "{:>9}", m.to_string());
    }
    out.push('\n');
    for p in &series.points {
        let _ = write!(out, "{:>6}", p.epoch);
        for m in MetricId::ALL {
            let cell = p.report.accuracy(m).map_or_else(|| "-".into(), percent);
            let _ = write!(out, "{cell:>9}");
        }
        out.push('\n');
    }
    out.push('\n');
    match series.best() {
        Some((epoch, metric, acc)) => {
            let _ = writeln!(out, "best over series: epoch {epoch} {metric} {}", percent(acc));
        }
        None => out.push_str("best over series: -\n"),
    }
    match series.last().and_then(|p| best_metric(&p.report).map(|b| (p.epoch, b))) {
        Some((epoch, (metric, acc))) => {
            let _ = writeln!(out, "last point: epoch {epoch} {metric} {}", percent(acc));
        }
        None => out.push_str("last point: -\n"),
    }
    if !series.failed.is_empty() {
        out.push_str("\nfailed snapshots:\n");
        for f in &series.failed {
            let _ = writeln!(out, "  epoch {}: {}", f.epoch, f.reason);
        }
    }
    out
}

/// Method-comparison layout: one row per dataset variant, one column per
/// method. Cells without a number render as `-`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub columns: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub cells: Vec<Option<f64>>,
}

#[derive(Debug, Deserialize)]
struct ComparisonRecord {
    row: String,
    column: String,
    accuracy: Option<f64>,
}

impl Comparison {
    /// Reads `row,column,accuracy` CSV; an empty accuracy reserves the cell.
    pub fn from_csv(text: &str) -> std::result::Result<Self, csv::Error> {
        let mut table = Self::default();
        for record in csv::Reader::from_reader(text.as_bytes()).deserialize() {
            let r: ComparisonRecord = record?;
            table.set(&r.row, &r.column, r.accuracy);
        }
        Ok(table)
    }

    pub fn set(&mut self, row: &str, column: &str, accuracy: Option<f64>) {
        let col = match self.columns.iter().position(|c| c == column) {
            Some(i) => i,
            None => {
                self.columns.push(column.to_string());
                for r in &mut self.rows {
                    r.cells.push(None);
                }
                self.columns.len() - 1
            }
        };
        let width = self.columns.len();
        let row = match self.rows.iter_mut().position(|r| r.name == row) {
            Some(i) => &mut self.rows[i],
            None => {
                self.rows.push(ComparisonRow {
                    name: row.to_string(),
                    cells: vec![None; width],
                });
                self.rows.last_mut().expect("just pushed")
            }
        };
        if accuracy.is_some() {
            row.cells[col] = accuracy;
        }
    }

    pub fn get(&self, row: &str, column: &str) -> Option<f64> {
        let col = self.columns.iter().position(|c| c == column)?;
        self.rows.iter().find(|r| r.name == row)?.cells[col]
    }

    pub fn render_table(&self) -> String {
        let cell = |v: &Option<f64>| v.map_or_else(|| "-".to_string(), percent);
        let first = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .chain([5])
            .max()
            .unwrap_or(5);
        let widths: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| {
                self.rows
                    .iter()
                    .map(|r| cell(&r.cells[i]).len())
                    .chain([c.len(), 7])
                    .max()
                    .unwrap_or(7)
            })
            .collect();
        let mut out = format!("{:<first$}", "");
        for (c, w) in self.columns.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:<first$}", r.name);
            for (v, w) in r.cells.iter().zip(&widths) {
                let _ = write!(out, "  {:>w$}", cell(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("row,column,accuracy\n");
        for r in &self.rows {
            for (c, v) in self.columns.iter().zip(&r.cells) {
                let v = v.map(|v| v.to_string()).unwrap_or_default();
                let _ = writeln!(out, "{},{},{v}", r.name, c);
            }
        }
        out
    }
}
