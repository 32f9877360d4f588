//! Top-1 selection: rank one query's candidate spans and pick a winner.
//!
//! Every strategy reduces to "argmax over a score vector, lowest index on
//! exact ties":
//!
//! * `iou` — each proposal's score is its vote total, the sum of its IoUs
//!   with the other `N - 1` proposals (self-IoU excluded). Rewards the
//!   consensus candidate.
//! * `loss` — picks the lowest reconstruction loss; scores are the negated
//!   sum-normalized losses `-L_n / sum(L)`, which keeps the score vector
//!   invariant under rescaling all losses by a positive constant.
//! * `iou-loss-sum` — vote totals reweighted by `w_n = 1 - L_n / sum(L)`.
//! * `iou-loss-max` — vote totals reweighted by `w_n = 1 - L_n / max(L)`,
//!   which zeroes out the worst proposal entirely.
//!
//! Degenerate loss vectors cannot support the weighted strategies: if the
//! weights' denominator is zero (all losses zero) or every weight collapses
//! to zero (`iou-loss-max` with all losses equal), the strategy falls back
//! to plain IoU voting and reports `tie = false`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{interval_iou, SpanUnit, TemporalSpan};

/// Errors raised by [`pairwise_iou_matrix`] and [`select_top1`].
#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("need at least one span")]
    EmptySpans,
    #[error("{spans} spans but {losses} losses")]
    LengthMismatch { spans: usize, losses: usize },
    #[error("loss at index {index} must be finite and >= 0, got {value}")]
    InvalidLoss { index: usize, value: f64 },
    #[error("spans mix normalized and seconds units")]
    MixedUnits,
}

/// The four top-1 selection strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStrategy {
    Iou,
    Loss,
    IouLossSum,
    IouLossMax,
}

impl SelectionStrategy {
    /// All strategies in their canonical (reporting) order.
    pub const ALL: [SelectionStrategy; 4] = [
        SelectionStrategy::Iou,
        SelectionStrategy::Loss,
        SelectionStrategy::IouLossSum,
        SelectionStrategy::IouLossMax,
    ];

    /// Stable machine-readable token (CLI flags, file fields).
    pub fn token(self) -> &'static str {
        match self {
            SelectionStrategy::Iou => "iou",
            SelectionStrategy::Loss => "loss",
            SelectionStrategy::IouLossSum => "iou-loss-sum",
            SelectionStrategy::IouLossMax => "iou-loss-max",
        }
    }

    /// Human-readable name used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            SelectionStrategy::Iou => "IoU",
            SelectionStrategy::Loss => "Loss",
            SelectionStrategy::IouLossSum => "IoU+LossSum",
            SelectionStrategy::IouLossMax => "IoU+LossMax",
        }
    }
}

#[derive(Debug, Error)]
#[error("unknown selection strategy `{0}` (valid: iou, loss, iou-loss-sum, iou-loss-max)")]
pub struct ParseSelectionError(String);

impl std::str::FromStr for SelectionStrategy {
    type Err = ParseSelectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SelectionStrategy::ALL
            .into_iter()
            .find(|s2| s2.token() == s)
            .ok_or_else(|| ParseSelectionError(s.to_string()))
    }
}

impl std::fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// Outcome of top-1 selection over one query's proposal list.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Zero-based index of the winning proposal. File formats publish this
    /// as a one-based `winner_index`; see [`crate::io`].
    pub winner: usize,
    /// Per-proposal scores under the requested strategy.
    pub scores: Vec<f64>,
    /// True when another proposal scored exactly the winner's score. The
    /// degenerate-loss fallback always reports `false`.
    pub tie: bool,
}

/// Full pairwise IoU matrix over one query's spans.
///
/// The matrix is symmetric with a unit diagonal; each off-diagonal entry is
/// computed once and mirrored. All spans must share one unit.
pub fn pairwise_iou_matrix(spans: &[TemporalSpan]) -> Result<Vec<Vec<f64>>, SelectionError> {
    check_units(spans)?;
    let n = spans.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        matrix[i][i] = 1.0;
        for j in i + 1..n {
            let v = interval_iou(spans[i].start, spans[i].end, spans[j].start, spans[j].end);
            matrix[i][j] = v;
            matrix[j][i] = v;
        }
    }
    Ok(matrix)
}

fn check_units(spans: &[TemporalSpan]) -> Result<SpanUnit, SelectionError> {
    let first = spans.first().ok_or(SelectionError::EmptySpans)?;
    if spans.iter().any(|s| s.unit != first.unit) {
        return Err(SelectionError::MixedUnits);
    }
    Ok(first.unit)
}

fn check_losses(losses: &[f64]) -> Result<(), SelectionError> {
    for (index, &value) in losses.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(SelectionError::InvalidLoss { index, value });
        }
    }
    Ok(())
}

/// Argmax with the lowest index winning ties; also reports whether any
/// other entry matched the winning score exactly.
fn argmax(scores: &[f64]) -> (usize, bool) {
    let mut winner = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[winner] {
            winner = i;
        }
    }
    let tie = scores
        .iter()
        .enumerate()
        .any(|(i, &s)| i != winner && s == scores[winner]);
    (winner, tie)
}

/// Vote totals: row sums of the pairwise IoU matrix minus the unit diagonal.
fn vote_totals(spans: &[TemporalSpan]) -> Result<Vec<f64>, SelectionError> {
    let matrix = pairwise_iou_matrix(spans)?;
    Ok(matrix
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v)
                .sum()
        })
        .collect())
}

/// Picks the top-1 proposal among `spans` under the requested strategy.
///
/// `losses` are the per-proposal reconstruction losses (non-negative,
/// finite, same length as `spans`). With a single candidate every strategy
/// returns it: vote totals are zero, and the weighted strategies fall back
/// through the degenerate-loss path.
pub fn select_top1(
    spans: &[TemporalSpan],
    losses: &[f64],
    strategy: SelectionStrategy,
) -> Result<SelectionResult, SelectionError> {
    if spans.is_empty() {
        return Err(SelectionError::EmptySpans);
    }
    if spans.len() != losses.len() {
        return Err(SelectionError::LengthMismatch {
            spans: spans.len(),
            losses: losses.len(),
        });
    }
    check_losses(losses)?;

    let fallback = |votes: Vec<f64>| {
        let (winner, _) = argmax(&votes);
        SelectionResult {
            winner,
            scores: votes,
            tie: false,
        }
    };

    match strategy {
        SelectionStrategy::Iou => {
            let votes = vote_totals(spans)?;
            let (winner, tie) = argmax(&votes);
            Ok(SelectionResult {
                winner,
                scores: votes,
                tie,
            })
        }
        SelectionStrategy::Loss => {
            check_units(spans)?;
            let total: f64 = losses.iter().sum();
            let scores: Vec<f64> = if total > 0.0 {
                losses.iter().map(|l| -l / total).collect()
            } else {
                vec![0.0; losses.len()]
            };
            let (winner, tie) = argmax(&scores);
            Ok(SelectionResult {
                winner,
                scores,
                tie,
            })
        }
        SelectionStrategy::IouLossSum => {
            let votes = vote_totals(spans)?;
            let total: f64 = losses.iter().sum();
            if total <= 0.0 {
                return Ok(fallback(votes));
            }
            let scores: Vec<f64> = losses
                .iter()
                .zip(&votes)
                .map(|(l, v)| (1.0 - l / total) * v)
                .collect();
            let (winner, tie) = argmax(&scores);
            Ok(SelectionResult {
                winner,
                scores,
                tie,
            })
        }
        SelectionStrategy::IouLossMax => {
            let votes = vote_totals(spans)?;
            let max = losses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if max <= 0.0 {
                return Ok(fallback(votes));
            }
            let weights: Vec<f64> = losses.iter().map(|l| 1.0 - l / max).collect();
            // All losses equal: every weight is zero and the strategy would
            // degenerate to "pick index 0"; vote on IoU instead.
            if weights.iter().all(|&w| w == 0.0) {
                return Ok(fallback(votes));
            }
            let scores: Vec<f64> = weights.iter().zip(&votes).map(|(w, v)| w * v).collect();
            let (winner, tie) = argmax(&scores);
            Ok(SelectionResult {
                winner,
                scores,
                tie,
            })
        }
    }
}
