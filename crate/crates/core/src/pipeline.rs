//! Per-query inference: endpoints → boundary strategy → top-1 selection →
//! rescale to seconds.
//!
//! [`infer_case`] is the single composition both the CLI `infer` command and
//! the ablation grid call, so a grid cell is by construction the same
//! computation as running inference with that strategy pair directly.

use thiserror::Error;

use crate::boundary::{predict_boundary, BoundaryError, BoundaryStrategy};
use crate::model::{compute_endpoints, rescale_span, ModelError, QueryCase, TemporalSpan};
use crate::selection::{select_top1, SelectionError, SelectionStrategy};

/// A pipeline failure wrapped with the query it occurred in.
#[derive(Debug, Error)]
#[error("query {query_id}: {source}")]
pub struct PipelineError {
    pub query_id: String,
    pub source: StageError,
}

/// The underlying stage failure.
#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
}

/// Top-1 prediction for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct CasePrediction {
    pub query_id: String,
    pub video_id: String,
    /// Winning span rescaled to the video timeline.
    pub span_sec: TemporalSpan,
    /// Zero-based index of the winning proposal.
    pub winner: usize,
    /// The winner's score under the selection strategy.
    pub score: f64,
    /// True when selection broke an exact score tie by index.
    pub tie: bool,
    /// True when the winning boundary needed an endpoint swap.
    pub degenerate: bool,
}

/// Runs the full per-query pipeline for one strategy pairing.
pub fn infer_case(
    case: &QueryCase,
    boundary: BoundaryStrategy,
    selector: SelectionStrategy,
    gamma: f64,
) -> Result<CasePrediction, PipelineError> {
    let wrap = |source: StageError| PipelineError {
        query_id: case.query_id.clone(),
        source,
    };

    let mut spans = Vec::with_capacity(case.proposals.len());
    let mut degenerate = Vec::with_capacity(case.proposals.len());
    let mut losses = Vec::with_capacity(case.proposals.len());
    for proposal in &case.proposals {
        let endpoints = compute_endpoints(proposal, gamma).map_err(|e| wrap(e.into()))?;
        let outcome = predict_boundary(&endpoints, &proposal.attention, boundary)
            .map_err(|e| wrap(e.into()))?;
        spans.push(outcome.span);
        degenerate.push(outcome.degenerate);
        losses.push(proposal.recon_loss);
    }

    let picked = select_top1(&spans, &losses, selector).map_err(|e| wrap(e.into()))?;
    let span_sec =
        rescale_span(&spans[picked.winner], case.duration_sec).map_err(|e| wrap(e.into()))?;
    Ok(CasePrediction {
        query_id: case.query_id.clone(),
        video_id: case.video_id.clone(),
        span_sec,
        winner: picked.winner,
        score: picked.scores[picked.winner],
        tie: picked.tie,
        degenerate: degenerate[picked.winner],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GaussianMask, MixtureProposal, SpanUnit};

    fn case() -> QueryCase {
        // Proposal 0: one mask spanning [0.2, 0.6], low loss.
        // Proposal 1: one mask spanning [0.5, 0.9], high loss.
        let p0 = MixtureProposal::new(vec![GaussianMask::new(0.4, 0.4).unwrap()], vec![1.0], 0.2)
            .unwrap();
        let p1 = MixtureProposal::new(vec![GaussianMask::new(0.7, 0.4).unwrap()], vec![1.0], 0.8)
            .unwrap();
        QueryCase::new("q".into(), "v".into(), 50.0, 100, vec![p0, p1]).unwrap()
    }

    #[test]
    fn loss_selector_picks_low_loss_proposal() {
        let p = infer_case(
            &case(),
            BoundaryStrategy::LongTail,
            SelectionStrategy::Loss,
            1.0,
        )
        .unwrap();
        assert_eq!(p.winner, 0);
        assert_eq!(p.span_sec.unit, SpanUnit::Seconds);
        assert!((p.span_sec.start - 10.0).abs() <= 1e-9);
        assert!((p.span_sec.end - 30.0).abs() <= 1e-9);
        assert!(!p.tie);
        assert!(!p.degenerate);
    }

    #[test]
    fn score_is_winner_entry() {
        let p = infer_case(
            &case(),
            BoundaryStrategy::LongTail,
            SelectionStrategy::Iou,
            1.0,
        )
        .unwrap();
        // Two proposals vote for each other symmetrically; the tie breaks
        // to index 0 and the score equals the mutual IoU (0.1 / 0.7).
        assert_eq!(p.winner, 0);
        assert!(p.tie);
        assert!((p.score - 1.0 / 7.0).abs() <= 1e-12);
    }

    #[test]
    fn gamma_error_carries_query_id() {
        let err = infer_case(
            &case(),
            BoundaryStrategy::LongTail,
            SelectionStrategy::Iou,
            0.0,
        )
        .unwrap_err();
        assert_eq!(err.query_id, "q");
        assert!(err.to_string().contains("gamma"));
    }
}
