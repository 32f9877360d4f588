//! Inference and evaluation toolkit for weakly supervised temporal grounding.
//!
//! A grounding model emits, for each (video, sentence) query, a small set of
//! candidate moments. Each candidate is a mixture of Gaussian temporal masks:
//! per-mask centers and widths on the normalized timeline `[0, 1]`, a simplex
//! of attention weights over the masks, and a reconstruction loss measuring
//! how well the masked video explains the sentence. This crate turns those
//! raw mixtures into ranked temporal spans and scores the result:
//!
//! 1. [`model`] — domain types plus endpoint/curve/rescale primitives,
//! 2. [`boundary`] — five strategies that collapse a mixture into one span,
//! 3. [`selection`] — four strategies that pick the top-1 span per query,
//! 4. [`metrics`] — recall@IoU and mean-IoU evaluation and the full
//!    boundary × selector ablation grid,
//! 5. [`pipeline`] — the per-query composition used by both single-cell
//!    inference and the grid,
//! 6. [`io`] — line-delimited proposal/prediction/annotation files, dataset
//!    annotation ingestion, and report rendering,
//! 7. [`synth`] — a seeded synthetic-case generator and a deliberately
//!    naive reference implementation of proposal voting for differential
//!    testing.
//!
//! Every type is an immutable value after construction and every operation is
//! a pure function, so callers may fan out over queries or grid cells freely;
//! results are deterministic for a given input regardless of thread count.

pub mod boundary;
pub mod io;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod selection;
pub mod synth;

pub use boundary::{predict_boundary, BoundaryOutcome, BoundaryStrategy};
pub use metrics::{
    ablation_grid, evaluate, AblationCell, AblationReport, EvalConfig, EvalReport, ThresholdMode,
};
pub use model::{
    compute_endpoints, render_proposal_curve, rescale_span, EndpointVectors, GaussianMask,
    MaskShape, MixtureProposal, ModelError, QueryCase, SpanUnit, TemporalSpan,
};
pub use pipeline::{infer_case, CasePrediction};
pub use selection::{pairwise_iou_matrix, select_top1, SelectionResult, SelectionStrategy};
pub use synth::{generate, oracle_vote, LossModel, SynthConfig};
