//! Boundary strategies: collapse one proposal's per-mask endpoints into a
//! single normalized span.
//!
//! With `M` masks, `l_(1) <= ... <= l_(M)` the sorted left endpoints and
//! `r_(1) <= ... <= r_(M)` the sorted right endpoints (sorted independently,
//! so the two vectors generally interleave masks):
//!
//! * `long-tail` — widest read: `[l_(1), r_(M)]`.
//! * `short-tail` — drop one tail mask per side: `[l_(2), r_(M-1)]`
//!   (falls back to `long-tail` when `M = 1`).
//! * `shortest-tail` — median-ish pick `k = floor((M + 1) / 2)` applied to
//!   both sorted vectors: `[l_(k), r_(k)]`.
//! * `average` — component means of the endpoint vectors.
//! * `attention` — attention-weighted endpoint pooling `[a . l, a . r]`
//!   over the *unsorted* per-mask endpoints, so each weight stays paired
//!   with the mask it scores.
//!
//! The combined span is clamped to `[0, 1]` (`s = max(s, 0)`,
//! `e = min(e, 1)`). If an order-statistic pick inverts the endpoints —
//! possible only for `short-tail` with `M = 2` — the endpoints are swapped
//! and the outcome is flagged degenerate rather than rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EndpointVectors, SpanUnit, TemporalSpan};

/// Errors raised by [`predict_boundary`].
#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("endpoint vectors are empty")]
    EmptyEndpoints,
    #[error("{masks} masks but {attention} attention weights")]
    AttentionLengthMismatch { masks: usize, attention: usize },
}

/// The five endpoint-combination strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryStrategy {
    LongTail,
    ShortTail,
    ShortestTail,
    Average,
    Attention,
}

impl BoundaryStrategy {
    /// All strategies in their canonical (reporting) order.
    pub const ALL: [BoundaryStrategy; 5] = [
        BoundaryStrategy::LongTail,
        BoundaryStrategy::ShortTail,
        BoundaryStrategy::ShortestTail,
        BoundaryStrategy::Average,
        BoundaryStrategy::Attention,
    ];

    /// Stable machine-readable token (CLI flags, file fields).
    pub fn token(self) -> &'static str {
        match self {
            BoundaryStrategy::LongTail => "long-tail",
            BoundaryStrategy::ShortTail => "short-tail",
            BoundaryStrategy::ShortestTail => "shortest-tail",
            BoundaryStrategy::Average => "average",
            BoundaryStrategy::Attention => "attention",
        }
    }

    /// Human-readable name used in rendered tables.
    pub fn display_name(self) -> &'static str {
        match self {
            BoundaryStrategy::LongTail => "Long Tail",
            BoundaryStrategy::ShortTail => "Short Tail",
            BoundaryStrategy::ShortestTail => "Shortest Tail",
            BoundaryStrategy::Average => "Average",
            BoundaryStrategy::Attention => "Attention",
        }
    }
}

#[derive(Debug, Error)]
#[error(
    "unknown boundary strategy `{0}` \
     (valid: long-tail, short-tail, shortest-tail, average, attention)"
)]
pub struct ParseBoundaryError(String);

impl std::str::FromStr for BoundaryStrategy {
    type Err = ParseBoundaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BoundaryStrategy::ALL
            .into_iter()
            .find(|b| b.token() == s)
            .ok_or_else(|| ParseBoundaryError(s.to_string()))
    }
}

impl std::fmt::Display for BoundaryStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// A predicted normalized span plus a flag marking repaired inversions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOutcome {
    pub span: TemporalSpan,
    /// True when the raw pick had `s > e` and the endpoints were swapped.
    pub degenerate: bool,
}

/// Applies one boundary strategy to a proposal's endpoint vectors.
///
/// `attention` must match the endpoint count; it is only consulted by
/// [`BoundaryStrategy::Attention`] but is validated for every strategy so
/// that a malformed call site fails loudly rather than conditionally.
pub fn predict_boundary(
    endpoints: &EndpointVectors,
    attention: &[f64],
    strategy: BoundaryStrategy,
) -> Result<BoundaryOutcome, BoundaryError> {
    let m = endpoints.len();
    if m == 0 {
        return Err(BoundaryError::EmptyEndpoints);
    }
    if attention.len() != m {
        return Err(BoundaryError::AttentionLengthMismatch {
            masks: m,
            attention: attention.len(),
        });
    }

    let ls = &endpoints.left_sorted;
    let rs = &endpoints.right_sorted;
    let (raw_s, raw_e) = match strategy {
        BoundaryStrategy::LongTail => (ls[0], rs[m - 1]),
        BoundaryStrategy::ShortTail => {
            if m == 1 {
                (ls[0], rs[0])
            } else {
                (ls[1], rs[m - 2])
            }
        }
        BoundaryStrategy::ShortestTail => {
            // 1-based k = floor((M + 1) / 2): M=1,2 -> 1; M=3,4 -> 2; M=5 -> 3.
            let k = m.div_ceil(2) - 1;
            (ls[k], rs[k])
        }
        BoundaryStrategy::Average => {
            let mean = |v: &[f64]| v.iter().sum::<f64>() / m as f64;
            (mean(ls), mean(rs))
        }
        BoundaryStrategy::Attention => {
            let dot = |v: &[f64]| v.iter().zip(attention).map(|(x, a)| x * a).sum::<f64>();
            (dot(&endpoints.left_raw), dot(&endpoints.right_raw))
        }
    };

    let mut s = raw_s.max(0.0);
    let mut e = raw_e.min(1.0);
    let degenerate = s > e;
    if degenerate {
        std::mem::swap(&mut s, &mut e);
    }
    Ok(BoundaryOutcome {
        span: TemporalSpan {
            start: s,
            end: e,
            unit: SpanUnit::Normalized,
        },
        degenerate,
    })
}
