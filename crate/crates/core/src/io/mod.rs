//! File ingestion and report rendering.
//!
//! Machine formats are line-delimited JSON (one record per line) so that
//! multi-gigabyte proposal dumps stream without buffering the whole file:
//!
//! * proposal files — one [`crate::model::QueryCase`] per line with
//!   per-proposal parallel arrays `centers` / `widths` / `attention` plus
//!   `recon_loss`,
//! * prediction files — one [`PredictionRecord`] per line, sorted by
//!   `query_id`,
//! * ground-truth files — one [`GroundTruthAnnotation`] per line.
//!
//! Dataset-specific annotation formats (the Charades-style tab/`##` text
//! lines and the ActivityNet-style per-video JSON map) are converted into
//! the same [`GroundTruthAnnotation`] shape at the edge; everything past
//! ingestion speaks one annotation type. Repairable oddities (swapped or
//! out-of-range endpoints) are fixed and reported as warnings; structural
//! problems (malformed lines, non-positive durations, bad attention sums)
//! are hard errors carrying the line number or video id.
//!
//! Reports render as CSV (stable header, `.` decimal separator, four
//! fractional digits) or markdown (grid layout: boundary groups with
//! selector sub-rows).

mod datasets;
mod records;
mod reports;

pub use datasets::{read_activitynet_annotations, read_charades_annotations, read_durations};
pub use records::{
    read_ground_truth, read_predictions, read_proposals, write_ground_truth, write_predictions,
    write_proposals, GroundTruthAnnotation, PredictionRecord,
};
pub use reports::{
    render_ablation_csv, render_ablation_markdown, render_eval_csv, render_eval_markdown,
    write_ablation_report, write_eval_report, ParseReportFormatError, ReportFormat,
};

use std::path::PathBuf;
use thiserror::Error;

/// Errors raised while reading or writing toolkit files.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Line {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: video {video_id}: {message}")]
    Video {
        path: PathBuf,
        video_id: String,
        message: String,
    },
}

impl DataError {
    fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn line(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        DataError::Line {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    fn video(
        path: &std::path::Path,
        video_id: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        DataError::Video {
            path: path.to_path_buf(),
            video_id: video_id.into(),
            message: message.into(),
        }
    }
}

/// Successfully ingested records plus human-readable repair warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested<T> {
    pub records: Vec<T>,
    pub warnings: Vec<String>,
}
