//! Line-delimited JSON readers and writers for the toolkit's own formats:
//! proposal dumps, prediction files, and native ground-truth files.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryStrategy;
use crate::model::{
    GaussianMask, MixtureProposal, QueryCase, SpanUnit, TemporalSpan, ATTENTION_SUM_TOL,
};
use crate::selection::SelectionStrategy;

use super::{DataError, Ingested};

/// Attention sums within this distance of 1 are renormalized at ingestion;
/// anything further off is rejected. Wider than the constructor tolerance
/// ([`ATTENTION_SUM_TOL`]) on purpose: exporters round their weights.
pub const ATTENTION_RENORM_TOL: f64 = 1e-4;

/// Ground truth for one query, always in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthAnnotation {
    pub query_id: String,
    pub video_id: String,
    pub duration_sec: f64,
    pub span_sec: TemporalSpan,
    pub sentence: String,
}

/// One query's top-1 prediction as published to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub query_id: String,
    pub span_sec: TemporalSpan,
    pub boundary_strategy: BoundaryStrategy,
    pub selector: SelectionStrategy,
    /// One-based winner index (file convention; in-memory indices are
    /// zero-based).
    pub winner_index: usize,
    pub score: f64,
}

/// Wire shape of one proposal: parallel arrays instead of mask structs.
#[derive(Debug, Serialize, Deserialize)]
struct ProposalRecord {
    centers: Vec<f64>,
    widths: Vec<f64>,
    attention: Vec<f64>,
    recon_loss: f64,
}

/// Wire shape of one query line in a proposals file.
#[derive(Debug, Serialize, Deserialize)]
struct QueryCaseRecord {
    query_id: String,
    video_id: String,
    duration_sec: f64,
    num_segments: usize,
    proposals: Vec<ProposalRecord>,
}

fn open_lines(
    path: &Path,
) -> Result<impl Iterator<Item = (usize, std::io::Result<String>)>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l)))
}

fn write_lines<T: Serialize>(
    path: &Path,
    records: impl Iterator<Item = T>,
) -> Result<(), DataError> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, &record)
            .map_err(|e| DataError::io(path, std::io::Error::other(e)))?;
        out.push(b'\n');
    }
    let mut file = File::create(path).map_err(|e| DataError::io(path, e))?;
    file.write_all(&out).map_err(|e| DataError::io(path, e))
}

/// Reads a line-delimited proposals file into validated query cases.
///
/// Enforces per-line JSON validity, parallel-array lengths, mask and
/// duration invariants, `query_id` uniqueness across the file, and the
/// attention-sum rule: sums within [`ATTENTION_RENORM_TOL`] of 1 are
/// silently renormalized, anything further off rejects the line.
pub fn read_proposals(path: &Path) -> Result<Vec<QueryCase>, DataError> {
    let mut cases = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: QueryCaseRecord = serde_json::from_str(&line)
            .map_err(|e| DataError::line(path, line_no, format!("malformed record: {e}")))?;
        if !seen.insert(record.query_id.clone()) {
            return Err(DataError::line(
                path,
                line_no,
                format!("duplicate query_id `{}`", record.query_id),
            ));
        }
        cases.push(case_from_record(record, path, line_no)?);
    }
    Ok(cases)
}

fn case_from_record(
    record: QueryCaseRecord,
    path: &Path,
    line_no: usize,
) -> Result<QueryCase, DataError> {
    let fail = |message: String| DataError::line(path, line_no, message);
    let qid = &record.query_id;
    let mut proposals = Vec::with_capacity(record.proposals.len());
    for (p_idx, p) in record.proposals.into_iter().enumerate() {
        let context = format!("query `{qid}` proposal {p_idx}");
        if p.centers.len() != p.widths.len() || p.centers.len() != p.attention.len() {
            return Err(fail(format!(
                "{context}: centers/widths/attention lengths differ ({}/{}/{})",
                p.centers.len(),
                p.widths.len(),
                p.attention.len()
            )));
        }
        let sum: f64 = p.attention.iter().sum();
        if (sum - 1.0).abs() > ATTENTION_RENORM_TOL {
            return Err(fail(format!(
                "{context}: attention sums to {sum}, outside 1 +/- {ATTENTION_RENORM_TOL}"
            )));
        }
        let attention: Vec<f64> = if (sum - 1.0).abs() <= ATTENTION_SUM_TOL {
            p.attention
        } else {
            p.attention.iter().map(|a| a / sum).collect()
        };
        let masks = p
            .centers
            .iter()
            .zip(&p.widths)
            .map(|(&c, &w)| GaussianMask::new(c, w))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| fail(format!("{context}: {e}")))?;
        let proposal = MixtureProposal::new(masks, attention, p.recon_loss)
            .map_err(|e| fail(format!("{context}: {e}")))?;
        proposals.push(proposal);
    }
    QueryCase::new(
        record.query_id.clone(),
        record.video_id,
        record.duration_sec,
        record.num_segments,
        proposals,
    )
    .map_err(|e| fail(format!("query `{qid}`: {e}")))
}

/// Writes query cases as a line-delimited proposals file (one per line, in
/// input order).
pub fn write_proposals(cases: &[QueryCase], path: &Path) -> Result<(), DataError> {
    write_lines(
        path,
        cases.iter().map(|case| QueryCaseRecord {
            query_id: case.query_id.clone(),
            video_id: case.video_id.clone(),
            duration_sec: case.duration_sec,
            num_segments: case.num_segments,
            proposals: case
                .proposals
                .iter()
                .map(|p| ProposalRecord {
                    centers: p.masks.iter().map(|m| m.center).collect(),
                    widths: p.masks.iter().map(|m| m.width).collect(),
                    attention: p.attention.clone(),
                    recon_loss: p.recon_loss,
                })
                .collect(),
        }),
    )
}

/// Reads a native line-delimited ground-truth file.
///
/// Spans must be in seconds. Inverted endpoints are swapped and endpoints
/// outside `[0, duration_sec]` are clamped, both with a warning; a
/// non-positive duration is a hard error.
pub fn read_ground_truth(path: &Path) -> Result<Ingested<GroundTruthAnnotation>, DataError> {
    #[derive(Deserialize)]
    struct RawSpan {
        start: f64,
        end: f64,
        unit: SpanUnit,
    }
    #[derive(Deserialize)]
    struct RawAnnotation {
        query_id: String,
        video_id: String,
        duration_sec: f64,
        span_sec: RawSpan,
        sentence: String,
    }

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawAnnotation = serde_json::from_str(&line)
            .map_err(|e| DataError::line(path, line_no, format!("malformed record: {e}")))?;
        if raw.span_sec.unit != SpanUnit::Seconds {
            return Err(DataError::line(
                path,
                line_no,
                format!(
                    "query `{}`: ground-truth span must be in seconds",
                    raw.query_id
                ),
            ));
        }
        if !seen.insert(raw.query_id.clone()) {
            return Err(DataError::line(
                path,
                line_no,
                format!("duplicate query_id `{}`", raw.query_id),
            ));
        }
        if !(raw.duration_sec.is_finite() && raw.duration_sec > 0.0) {
            return Err(DataError::line(
                path,
                line_no,
                format!(
                    "query `{}`: non-positive duration {}",
                    raw.query_id, raw.duration_sec
                ),
            ));
        }
        if !(raw.span_sec.start.is_finite() && raw.span_sec.end.is_finite()) {
            return Err(DataError::line(
                path,
                line_no,
                format!("query `{}`: non-finite span endpoints", raw.query_id),
            ));
        }
        let span_sec = repair_span(
            raw.span_sec.start,
            raw.span_sec.end,
            raw.duration_sec,
            &mut warnings,
            || format!("line {line_no} (query `{}`)", raw.query_id),
        );
        records.push(GroundTruthAnnotation {
            query_id: raw.query_id,
            video_id: raw.video_id,
            duration_sec: raw.duration_sec,
            span_sec,
            sentence: raw.sentence,
        });
    }
    Ok(Ingested { records, warnings })
}

/// Swaps inverted endpoints and clamps to `[0, duration]`, recording one
/// warning per repair. Shared by every annotation reader.
pub(super) fn repair_span(
    mut start: f64,
    mut end: f64,
    duration: f64,
    warnings: &mut Vec<String>,
    context: impl Fn() -> String,
) -> TemporalSpan {
    if start > end {
        warnings.push(format!("{}: start {start} > end {end}, swapped", context()));
        std::mem::swap(&mut start, &mut end);
    }
    if start < 0.0 || end > duration {
        let (s, e) = (start, end);
        start = start.clamp(0.0, duration);
        end = end.clamp(0.0, duration);
        warnings.push(format!(
            "{}: span [{s}, {e}] clamped to [0, {duration}]",
            context()
        ));
    }
    TemporalSpan {
        start,
        end,
        unit: SpanUnit::Seconds,
    }
}

/// Writes ground-truth annotations as line-delimited JSON, in input order.
pub fn write_ground_truth(
    annotations: &[GroundTruthAnnotation],
    path: &Path,
) -> Result<(), DataError> {
    write_lines(path, annotations.iter())
}

/// Writes prediction records as line-delimited JSON, sorted by `query_id`.
/// An empty prediction list produces an empty file.
pub fn write_predictions(records: &[PredictionRecord], path: &Path) -> Result<(), DataError> {
    let mut sorted: Vec<&PredictionRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    write_lines(path, sorted.into_iter())
}

/// Reads a prediction file, validating spans (seconds, ordered,
/// non-negative), strategy tokens, scores, and the one-based winner index.
pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, DataError> {
    let mut records: Vec<PredictionRecord> = Vec::new();
    for (line_no, line) in open_lines(path)? {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(&line)
            .map_err(|e| DataError::line(path, line_no, format!("malformed record: {e}")))?;
        let fail = |message: String| DataError::line(path, line_no, message);
        let qid = &record.query_id;
        if record.span_sec.unit != SpanUnit::Seconds {
            return Err(fail(format!(
                "query `{qid}`: prediction span must be in seconds"
            )));
        }
        let s = record.span_sec.start;
        let e = record.span_sec.end;
        if !(s.is_finite() && e.is_finite() && s >= 0.0 && s <= e) {
            return Err(fail(format!("query `{qid}`: invalid span [{s}, {e}]")));
        }
        if record.winner_index < 1 {
            return Err(fail(format!("query `{qid}`: winner_index must be >= 1")));
        }
        if !record.score.is_finite() {
            return Err(fail(format!("query `{qid}`: non-finite score")));
        }
        records.push(record);
    }
    Ok(records)
}
