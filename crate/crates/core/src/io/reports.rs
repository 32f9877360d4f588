//! Report rendering: evaluation summaries and the strategy grid as CSV
//! (machine-friendly) or markdown (review-friendly).
//!
//! CSV output uses a stable header, `.` as the decimal separator, and four
//! fractional digits. The markdown grid mirrors the conventional ablation
//! layout: one row group per boundary strategy with one sub-row per
//! selector, and one metric column per recall threshold plus mean IoU.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::metrics::{AblationReport, EvalReport};

use super::DataError;

/// Output format for report files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 2] = [ReportFormat::Csv, ReportFormat::Markdown];

    pub fn token(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "markdown",
        }
    }
}

#[derive(Debug, Error)]
#[error("unknown report format `{0}` (valid: csv, markdown)")]
pub struct ParseReportFormatError(String);

impl std::str::FromStr for ReportFormat {
    type Err = ParseReportFormatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ReportFormat::ALL
            .into_iter()
            .find(|f| f.token() == s)
            .ok_or_else(|| ParseReportFormatError(s.to_string()))
    }
}

impl std::fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

fn fmt_metric(v: f64) -> String {
    format!("{v:.4}")
}

/// Renders an evaluation report as CSV: one header row, one value row.
pub fn render_eval_csv(report: &EvalReport) -> String {
    let mut header: Vec<String> = report
        .recall_at
        .iter()
        .map(|(t, _)| format!("iou@{t}"))
        .collect();
    header.push("miou".to_string());
    header.push("num_queries".to_string());
    let mut values: Vec<String> = report
        .recall_at
        .iter()
        .map(|&(_, r)| fmt_metric(r))
        .collect();
    values.push(fmt_metric(report.mean_iou));
    values.push(report.num_queries.to_string());
    format!("{}\n{}\n", header.join(","), values.join(","))
}

/// Renders an evaluation report as a two-column markdown table.
pub fn render_eval_markdown(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str("| Metric | Value |\n|---|---|\n");
    for &(t, r) in &report.recall_at {
        let _ = writeln!(out, "| IoU@{t} | {} |", fmt_metric(r));
    }
    let _ = writeln!(out, "| mIoU | {} |", fmt_metric(report.mean_iou));
    let _ = writeln!(out, "| Queries | {} |", report.num_queries);
    out
}

/// Renders the ablation grid as CSV: one row per boundary/selector cell in
/// report order. An empty grid still carries the header row.
pub fn render_ablation_csv(report: &AblationReport) -> String {
    let mut header = vec!["boundary".to_string(), "selector".to_string()];
    header.extend(report.thresholds.iter().map(|t| format!("iou@{t}")));
    header.push("miou".to_string());
    let mut out = header.join(",");
    out.push('\n');
    for cell in &report.cells {
        let mut row = vec![
            cell.boundary.token().to_string(),
            cell.selector.token().to_string(),
        ];
        row.extend(cell.recall_at.iter().map(|&(_, r)| fmt_metric(r)));
        row.push(fmt_metric(cell.mean_iou));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Renders the ablation grid as a markdown table with boundary row groups:
/// the boundary name appears on the first selector row of its group only.
pub fn render_ablation_markdown(report: &AblationReport) -> String {
    let mut out = String::new();
    out.push_str("| Boundary | Selector |");
    for t in &report.thresholds {
        let _ = write!(out, " IoU@{t} |");
    }
    out.push_str(" mIoU |\n|---|---|");
    for _ in &report.thresholds {
        out.push_str("---|");
    }
    out.push_str("---|\n");
    let mut previous_boundary = None;
    for cell in &report.cells {
        let label = if previous_boundary == Some(cell.boundary) {
            ""
        } else {
            cell.boundary.display_name()
        };
        previous_boundary = Some(cell.boundary);
        let _ = write!(out, "| {label} | {} |", cell.selector.display_name());
        for &(_, r) in &cell.recall_at {
            let _ = write!(out, " {} |", fmt_metric(r));
        }
        let _ = writeln!(out, " {} |", fmt_metric(cell.mean_iou));
    }
    out
}

/// Writes an evaluation report to `path` in the requested format.
pub fn write_eval_report(
    report: &EvalReport,
    path: &Path,
    format: ReportFormat,
) -> Result<(), DataError> {
    let content = match format {
        ReportFormat::Csv => render_eval_csv(report),
        ReportFormat::Markdown => render_eval_markdown(report),
    };
    std::fs::write(path, content).map_err(|e| DataError::io(path, e))
}

/// Writes an ablation report to `path` in the requested format.
pub fn write_ablation_report(
    report: &AblationReport,
    path: &Path,
    format: ReportFormat,
) -> Result<(), DataError> {
    let content = match format {
        ReportFormat::Csv => render_ablation_csv(report),
        ReportFormat::Markdown => render_ablation_markdown(report),
    };
    std::fs::write(path, content).map_err(|e| DataError::io(path, e))
}
