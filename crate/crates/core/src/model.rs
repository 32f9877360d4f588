//! Core domain types: Gaussian masks, mixture proposals, temporal spans, and
//! the endpoint/curve/rescale primitives everything downstream builds on.
//!
//! Conventions used throughout the crate:
//!
//! * Mask centers live on the normalized timeline `[0, 1]`; widths are
//!   strictly positive.
//! * Attention weights form a simplex (non-negative, summing to 1 within
//!   `1e-6`). File ingestion renormalizes near-misses before construction;
//!   see [`crate::io`].
//! * A proposal's endpoints are `l = c - gamma * w / 2` and
//!   `r = c + gamma * w / 2` per mask, with the tail-shrink factor
//!   `gamma` in `(0, 1]` (1.0 reproduces the plain half-width endpoints).
//!   Endpoints are *not* clamped here; boundary strategies clamp after
//!   combining them so that tail information is preserved.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Attention weights must sum to 1 within this tolerance at construction.
pub const ATTENTION_SUM_TOL: f64 = 1e-6;

/// Errors raised by domain-type constructors and the model primitives.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("mask center must lie in [0, 1], got {0}")]
    CenterOutOfRange(f64),
    #[error("mask width must be finite and > 0, got {0}")]
    NonPositiveWidth(f64),
    #[error("a proposal needs at least one mask")]
    EmptyMasks,
    #[error("proposal has {masks} masks but {attention} attention weights")]
    AttentionLengthMismatch { masks: usize, attention: usize },
    #[error("attention weights must be non-negative, got {0}")]
    NegativeAttention(f64),
    #[error("attention weights must sum to 1 within {ATTENTION_SUM_TOL}, got sum {0}")]
    AttentionNotNormalized(f64),
    #[error("reconstruction loss must be finite and >= 0, got {0}")]
    InvalidReconLoss(f64),
    #[error("query_id must be non-empty")]
    EmptyQueryId,
    #[error("query needs at least one proposal")]
    NoProposals,
    #[error("video duration must be finite and > 0 seconds, got {0}")]
    NonPositiveDuration(f64),
    #[error("num_segments must be >= 2, got {0}")]
    TooFewSegments(usize),
    #[error("span endpoints must be finite with start <= end, got [{start}, {end}]")]
    InvalidSpan { start: f64, end: f64 },
    #[error("normalized span must lie within [0, 1], got [{start}, {end}]")]
    SpanOutOfRange { start: f64, end: f64 },
    #[error("gamma must lie in (0, 1], got {0}")]
    GammaOutOfRange(f64),
    #[error("expected a normalized span, got one in seconds")]
    NotNormalized,
    #[error("cannot compare spans with different units")]
    UnitMismatch,
}

/// Unit of a temporal span: the normalized `[0, 1]` timeline or seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanUnit {
    Normalized,
    Seconds,
}

/// A closed temporal interval with an explicit unit.
///
/// `start <= end` always holds for constructed values; normalized spans
/// additionally satisfy `0 <= start` and `end <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalSpan {
    pub start: f64,
    pub end: f64,
    pub unit: SpanUnit,
}

impl TemporalSpan {
    /// Builds a span on the normalized timeline, validating range and order.
    pub fn normalized(start: f64, end: f64) -> Result<Self, ModelError> {
        if !(start.is_finite() && end.is_finite() && start <= end) {
            return Err(ModelError::InvalidSpan { start, end });
        }
        if start < 0.0 || end > 1.0 {
            return Err(ModelError::SpanOutOfRange { start, end });
        }
        Ok(Self {
            start,
            end,
            unit: SpanUnit::Normalized,
        })
    }

    /// Builds a span measured in seconds, validating order and sign.
    pub fn seconds(start: f64, end: f64) -> Result<Self, ModelError> {
        if !(start.is_finite() && end.is_finite() && start <= end && start >= 0.0) {
            return Err(ModelError::InvalidSpan { start, end });
        }
        Ok(Self {
            start,
            end,
            unit: SpanUnit::Seconds,
        })
    }

    /// Span length in the span's own unit.
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Temporal intersection-over-union against another span.
    ///
    /// Both spans must carry the same unit. Overlap is
    /// `max(0, min(e1, e2) - max(s1, s2))`; the union is the sum of lengths
    /// minus the overlap. Two identical zero-length spans score 1, a
    /// zero-length span against anything else scores 0, so the result always
    /// lies in `[0, 1]`.
    pub fn iou(&self, other: &TemporalSpan) -> Result<f64, ModelError> {
        if self.unit != other.unit {
            return Err(ModelError::UnitMismatch);
        }
        Ok(interval_iou(self.start, self.end, other.start, other.end))
    }
}

/// IoU on raw interval endpoints; shared by span IoU and the vote matrix.
pub(crate) fn interval_iou(s1: f64, e1: f64, s2: f64, e2: f64) -> f64 {
    let inter = (e1.min(e2) - s1.max(s2)).max(0.0);
    let union = (e1 - s1) + (e2 - s2) - inter;
    if union > 0.0 {
        inter / union
    } else if s1 == s2 && e1 == e2 {
        1.0
    } else {
        0.0
    }
}

/// One Gaussian temporal mask: center and width on the normalized timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMask {
    pub center: f64,
    pub width: f64,
}

impl GaussianMask {
    pub fn new(center: f64, width: f64) -> Result<Self, ModelError> {
        if !(center.is_finite() && (0.0..=1.0).contains(&center)) {
            return Err(ModelError::CenterOutOfRange(center));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(ModelError::NonPositiveWidth(width));
        }
        Ok(Self { center, width })
    }
}

/// A candidate moment: `M` Gaussian masks blended by attention weights, plus
/// the reconstruction loss the upstream model assigned to the candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureProposal {
    pub masks: Vec<GaussianMask>,
    pub attention: Vec<f64>,
    pub recon_loss: f64,
}

impl MixtureProposal {
    pub fn new(
        masks: Vec<GaussianMask>,
        attention: Vec<f64>,
        recon_loss: f64,
    ) -> Result<Self, ModelError> {
        if masks.is_empty() {
            return Err(ModelError::EmptyMasks);
        }
        if masks.len() != attention.len() {
            return Err(ModelError::AttentionLengthMismatch {
                masks: masks.len(),
                attention: attention.len(),
            });
        }
        for &a in &attention {
            if !(a.is_finite() && a >= 0.0) {
                return Err(ModelError::NegativeAttention(a));
            }
        }
        let sum: f64 = attention.iter().sum();
        if (sum - 1.0).abs() > ATTENTION_SUM_TOL {
            return Err(ModelError::AttentionNotNormalized(sum));
        }
        if !(recon_loss.is_finite() && recon_loss >= 0.0) {
            return Err(ModelError::InvalidReconLoss(recon_loss));
        }
        Ok(Self {
            masks,
            attention,
            recon_loss,
        })
    }

    /// Number of masks in the mixture.
    pub fn num_masks(&self) -> usize {
        self.masks.len()
    }
}

/// One query: a (video, sentence) pair with its `N` candidate proposals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCase {
    pub query_id: String,
    pub video_id: String,
    pub duration_sec: f64,
    pub num_segments: usize,
    pub proposals: Vec<MixtureProposal>,
}

impl QueryCase {
    pub fn new(
        query_id: String,
        video_id: String,
        duration_sec: f64,
        num_segments: usize,
        proposals: Vec<MixtureProposal>,
    ) -> Result<Self, ModelError> {
        if query_id.is_empty() {
            return Err(ModelError::EmptyQueryId);
        }
        if !(duration_sec.is_finite() && duration_sec > 0.0) {
            return Err(ModelError::NonPositiveDuration(duration_sec));
        }
        if num_segments < 2 {
            return Err(ModelError::TooFewSegments(num_segments));
        }
        if proposals.is_empty() {
            return Err(ModelError::NoProposals);
        }
        Ok(Self {
            query_id,
            video_id,
            duration_sec,
            num_segments,
            proposals,
        })
    }
}

/// Per-mask endpoints of one proposal, in raw (mask) order and sorted
/// ascending. Raw order is what attention pooling consumes; the sorted
/// vectors feed the order-statistic boundary strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointVectors {
    pub left_raw: Vec<f64>,
    pub right_raw: Vec<f64>,
    pub left_sorted: Vec<f64>,
    pub right_sorted: Vec<f64>,
}

impl EndpointVectors {
    /// Number of masks the endpoints were derived from.
    pub fn len(&self) -> usize {
        self.left_raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left_raw.is_empty()
    }
}

/// Computes per-mask span endpoints `c -/+ gamma * w / 2`.
///
/// `gamma` must lie in `(0, 1]`; values below 1 shrink both tails
/// symmetrically around the center. Endpoints may fall outside `[0, 1]`
/// (wide masks near the timeline edges); boundary strategies clamp after
/// combination, not here. Left and right endpoints are sorted
/// independently, so `left_sorted[i]` and `right_sorted[i]` generally come
/// from different masks.
pub fn compute_endpoints(
    proposal: &MixtureProposal,
    gamma: f64,
) -> Result<EndpointVectors, ModelError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(ModelError::GammaOutOfRange(gamma));
    }
    let left_raw: Vec<f64> = proposal
        .masks
        .iter()
        .map(|m| m.center - gamma * m.width / 2.0)
        .collect();
    let right_raw: Vec<f64> = proposal
        .masks
        .iter()
        .map(|m| m.center + gamma * m.width / 2.0)
        .collect();
    let mut left_sorted = left_raw.clone();
    let mut right_sorted = right_raw.clone();
    left_sorted.sort_by(f64::total_cmp);
    right_sorted.sort_by(f64::total_cmp);
    Ok(EndpointVectors {
        left_raw,
        right_raw,
        left_sorted,
        right_sorted,
    })
}

/// Shape of the per-mask curve used by [`render_proposal_curve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskShape {
    /// `exp(-(x - c)^2 / (2 w^2))` — the width doubles as the std-dev.
    Gaussian,
    /// `exp(-|x - c| / w)` — heavier tails than the Gaussian.
    Laplace,
    /// Complement of the blended Gaussian curve, `1 - gaussian(x)`.
    InverseGaussian,
}

impl MaskShape {
    pub const ALL: [MaskShape; 3] = [
        MaskShape::Gaussian,
        MaskShape::Laplace,
        MaskShape::InverseGaussian,
    ];

    pub fn token(self) -> &'static str {
        match self {
            MaskShape::Gaussian => "gaussian",
            MaskShape::Laplace => "laplace",
            MaskShape::InverseGaussian => "inverse-gaussian",
        }
    }
}

#[derive(Debug, Error)]
#[error("unknown mask shape `{0}` (valid: gaussian, laplace, inverse-gaussian)")]
pub struct ParseMaskShapeError(String);

impl std::str::FromStr for MaskShape {
    type Err = ParseMaskShapeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaskShape::ALL
            .into_iter()
            .find(|m| m.token() == s)
            .ok_or_else(|| ParseMaskShapeError(s.to_string()))
    }
}

impl std::fmt::Display for MaskShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// Renders the attention-blended mask curve over `num_segments` uniformly
/// spaced timeline positions `t / (num_segments - 1)`.
///
/// This is a diagnostics aid (curve inspection, plots); boundary prediction
/// never consumes the rendered curve. Values always lie in `[0, 1]`, and the
/// inverse-Gaussian curve is the exact per-segment complement of the
/// Gaussian one.
pub fn render_proposal_curve(
    proposal: &MixtureProposal,
    num_segments: usize,
    shape: MaskShape,
) -> Result<Vec<f64>, ModelError> {
    if num_segments < 2 {
        return Err(ModelError::TooFewSegments(num_segments));
    }
    let blend = |x: f64, per_mask: fn(f64, &GaussianMask) -> f64| -> f64 {
        proposal
            .masks
            .iter()
            .zip(&proposal.attention)
            .map(|(m, &a)| a * per_mask(x, m))
            .sum()
    };
    let gaussian = |x: f64, m: &GaussianMask| {
        let d = x - m.center;
        (-d * d / (2.0 * m.width * m.width)).exp()
    };
    let laplace = |x: f64, m: &GaussianMask| (-(x - m.center).abs() / m.width).exp();
    let denom = (num_segments - 1) as f64;
    Ok((0..num_segments)
        .map(|t| {
            let x = t as f64 / denom;
            match shape {
                MaskShape::Gaussian => blend(x, gaussian),
                MaskShape::Laplace => blend(x, laplace),
                MaskShape::InverseGaussian => 1.0 - blend(x, gaussian),
            }
        })
        .collect())
}

/// Maps a normalized span to seconds by scaling both endpoints by the video
/// duration. The input must be normalized and the duration positive.
pub fn rescale_span(span: &TemporalSpan, duration_sec: f64) -> Result<TemporalSpan, ModelError> {
    if span.unit != SpanUnit::Normalized {
        return Err(ModelError::NotNormalized);
    }
    if !(duration_sec.is_finite() && duration_sec > 0.0) {
        return Err(ModelError::NonPositiveDuration(duration_sec));
    }
    TemporalSpan::seconds(span.start * duration_sec, span.end * duration_sec)
}
