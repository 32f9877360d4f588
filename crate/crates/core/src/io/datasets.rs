//! Ingestion for the two public annotation layouts the toolkit understands.
//!
//! The Charades-style layout is one plain-text line per query,
//!
//! ```text
//! <video_id> <start_sec> <end_sec>##<sentence>
//! ```
//!
//! paired with a separate whitespace-delimited duration table
//! (`<video_id> <duration_sec>` per line), since the annotation lines do
//! not carry video lengths. The ActivityNet-style layout is a single JSON
//! object keyed by video id, each entry holding `duration`, `timestamps`
//! (list of `[start, end]` pairs), and `sentences` (parallel list).
//!
//! Both readers emit [`GroundTruthAnnotation`] records with synthesized
//! query ids `<video_id>#<k>`, where `k` counts that video's queries in
//! source order (file order for Charades, timestamp order for
//! ActivityNet). ActivityNet videos are visited in sorted id order so
//! output is deterministic regardless of JSON key order.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::records::repair_span;
use super::{DataError, Ingested};
use crate::io::GroundTruthAnnotation;

/// Reads a `<video_id> <duration_sec>` table. Blank lines and `#` comment
/// lines are skipped; duplicate video ids are rejected.
pub fn read_durations(path: &Path) -> Result<HashMap<String, f64>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut durations = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DataError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(DataError::line(
                path,
                line_no,
                format!(
                    "expected `<video_id> <duration_sec>`, got {} fields",
                    fields.len()
                ),
            ));
        }
        let duration: f64 = fields[1].parse().map_err(|_| {
            DataError::line(
                path,
                line_no,
                format!("unparseable duration `{}`", fields[1]),
            )
        })?;
        if !(duration.is_finite() && duration > 0.0) {
            return Err(DataError::line(
                path,
                line_no,
                format!("non-positive duration {duration} for video `{}`", fields[0]),
            ));
        }
        if durations.insert(fields[0].to_string(), duration).is_some() {
            return Err(DataError::line(
                path,
                line_no,
                format!("duplicate video_id `{}`", fields[0]),
            ));
        }
    }
    Ok(durations)
}

/// Reads Charades-style annotation lines against a duration table.
///
/// Inverted spans are swapped and out-of-range spans clamped (with
/// warnings); blank lines are skipped with a warning. A missing `##`
/// separator, a malformed prefix, or a video absent from the duration
/// table is a hard error naming the line.
pub fn read_charades_annotations(
    path: &Path,
    durations: &HashMap<String, f64>,
) -> Result<Ingested<GroundTruthAnnotation>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut per_video: HashMap<String, usize> = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            warnings.push(format!("line {line_no}: blank line skipped"));
            continue;
        }
        let (prefix, sentence) = line
            .split_once("##")
            .ok_or_else(|| DataError::line(path, line_no, "missing `##` sentence separator"))?;
        let fields: Vec<&str> = prefix.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(DataError::line(
                path,
                line_no,
                format!(
                    "expected `<video_id> <start> <end>` before `##`, got {} fields",
                    fields.len()
                ),
            ));
        }
        let video_id = fields[0].to_string();
        let parse = |s: &str| -> Result<f64, DataError> {
            s.parse::<f64>()
                .map_err(|_| DataError::line(path, line_no, format!("unparseable timestamp `{s}`")))
        };
        let start = parse(fields[1])?;
        let end = parse(fields[2])?;
        if !(start.is_finite() && end.is_finite()) {
            return Err(DataError::line(path, line_no, "non-finite timestamp"));
        }
        let duration = *durations.get(&video_id).ok_or_else(|| {
            DataError::line(
                path,
                line_no,
                format!("video `{video_id}` missing from duration table"),
            )
        })?;
        let span_sec = repair_span(start, end, duration, &mut warnings, || {
            format!("line {line_no} (video `{video_id}`)")
        });
        let k = per_video.entry(video_id.clone()).or_insert(0);
        let query_id = format!("{video_id}#{k}");
        *k += 1;
        records.push(GroundTruthAnnotation {
            query_id,
            video_id,
            duration_sec: duration,
            span_sec,
            sentence: sentence.trim().to_string(),
        });
    }
    Ok(Ingested { records, warnings })
}

/// Reads an ActivityNet-style JSON annotation map.
///
/// Each video contributes one annotation per timestamp; timestamps are
/// clamped into `[0, duration]` (with a warning) and inverted pairs are
/// swapped. A timestamp/sentence length mismatch, a malformed timestamp
/// pair, or a non-positive duration rejects the file with the video named.
pub fn read_activitynet_annotations(
    path: &Path,
) -> Result<Ingested<GroundTruthAnnotation>, DataError> {
    #[derive(Deserialize)]
    struct Entry {
        duration: f64,
        timestamps: Vec<Vec<f64>>,
        sentences: Vec<String>,
    }

    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    // BTreeMap: videos come out sorted by id no matter the JSON key order.
    let entries: BTreeMap<String, Entry> = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| DataError::line(path, e.line().max(1), format!("malformed JSON: {e}")))?;

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (video_id, entry) in entries {
        if !(entry.duration.is_finite() && entry.duration > 0.0) {
            return Err(DataError::video(
                path,
                video_id,
                format!("non-positive duration {}", entry.duration),
            ));
        }
        if entry.timestamps.len() != entry.sentences.len() {
            return Err(DataError::video(
                path,
                video_id,
                format!(
                    "{} timestamps but {} sentences",
                    entry.timestamps.len(),
                    entry.sentences.len()
                ),
            ));
        }
        for (k, (pair, sentence)) in entry.timestamps.iter().zip(&entry.sentences).enumerate() {
            let [start, end] = pair.as_slice() else {
                return Err(DataError::video(
                    path,
                    video_id,
                    format!("timestamp {k} has {} entries, expected 2", pair.len()),
                ));
            };
            if !(start.is_finite() && end.is_finite()) {
                return Err(DataError::video(
                    path,
                    video_id,
                    format!("timestamp {k} non-finite"),
                ));
            }
            let span_sec = repair_span(*start, *end, entry.duration, &mut warnings, || {
                format!("video `{video_id}` timestamp {k}")
            });
            records.push(GroundTruthAnnotation {
                query_id: format!("{video_id}#{k}"),
                video_id: video_id.clone(),
                duration_sec: entry.duration,
                span_sec,
                sentence: sentence.trim().to_string(),
            });
        }
    }
    Ok(Ingested { records, warnings })
}
