//! Evaluation: recall@IoU and mean IoU over a query set, plus the
//! boundary × selector ablation grid.
//!
//! All scoring happens in seconds: predictions are compared against
//! ground-truth spans after rescaling to the video timeline. `recall_at[m]`
//! is the fraction of queries whose top-1 IoU exceeds the threshold `m`
//! (strictly, by default; a greater-or-equal mode is available for
//! comparison against tools that count exact hits). `mean_iou` averages the
//! per-query IoUs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::BoundaryStrategy;
use crate::io::GroundTruthAnnotation;
use crate::model::{SpanUnit, TemporalSpan};
use crate::pipeline::{infer_case, PipelineError};
use crate::selection::SelectionStrategy;
use crate::QueryCase;

/// How a per-query IoU is compared against a recall threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// Count a query when `iou > m` (the default).
    StrictGreater,
    /// Count a query when `iou >= m`.
    GreaterEqual,
}

impl ThresholdMode {
    pub const ALL: [ThresholdMode; 2] = [ThresholdMode::StrictGreater, ThresholdMode::GreaterEqual];

    pub fn token(self) -> &'static str {
        match self {
            ThresholdMode::StrictGreater => "strict-greater",
            ThresholdMode::GreaterEqual => "greater-equal",
        }
    }

    fn counts(self, iou: f64, threshold: f64) -> bool {
        match self {
            ThresholdMode::StrictGreater => iou > threshold,
            ThresholdMode::GreaterEqual => iou >= threshold,
        }
    }
}

#[derive(Debug, Error)]
#[error("unknown threshold mode `{0}` (valid: strict-greater, greater-equal)")]
pub struct ParseThresholdModeError(String);

impl std::str::FromStr for ThresholdMode {
    type Err = ParseThresholdModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ThresholdMode::ALL
            .into_iter()
            .find(|m| m.token() == s)
            .ok_or_else(|| ParseThresholdModeError(s.to_string()))
    }
}

impl std::fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// Errors raised by [`evaluate`] and [`ablation_grid`].
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("thresholds must be strictly ascending within (0, 1): {0:?}")]
    BadThresholds(Vec<f64>),
    #[error("no queries to evaluate")]
    NoQueries,
    #[error("duplicate query_ids in {side}: {}", format_ids(.ids))]
    DuplicateQueryIds {
        side: &'static str,
        ids: Vec<String>,
    },
    #[error(
        "predictions and ground truth do not match: \
         {} without ground truth: {}; {} without predictions: {}",
        .missing_ground_truth.len(),
        format_ids(.missing_ground_truth),
        .missing_predictions.len(),
        format_ids(.missing_predictions)
    )]
    Unmatched {
        missing_ground_truth: Vec<String>,
        missing_predictions: Vec<String>,
    },
    #[error("query {query_id}: prediction span must be in seconds")]
    PredictionNotSeconds { query_id: String },
    #[error("boundary and selector lists must be non-empty")]
    EmptyStrategyList,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Renders at most ten offender ids, with a count for the remainder.
fn format_ids(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    if ids.is_empty() {
        return "none".to_string();
    }
    let shown: Vec<&str> = ids.iter().take(SHOWN).map(String::as_str).collect();
    if ids.len() > SHOWN {
        format!("{} (+{} more)", shown.join(", "), ids.len() - SHOWN)
    } else {
        shown.join(", ")
    }
}

/// Thresholds and comparison mode for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
    pub mode: ThresholdMode,
}

impl EvalConfig {
    /// Validates that thresholds are strictly ascending and inside (0, 1).
    pub fn new(thresholds: Vec<f64>, mode: ThresholdMode) -> Result<Self, EvalError> {
        let ascending = thresholds.windows(2).all(|w| w[0] < w[1]);
        let in_range = thresholds
            .iter()
            .all(|&t| t.is_finite() && t > 0.0 && t < 1.0);
        if !(ascending && in_range) {
            return Err(EvalError::BadThresholds(thresholds));
        }
        Ok(Self { thresholds, mode })
    }
}

impl Default for EvalConfig {
    /// The conventional reporting setup: recall at 0.3 / 0.5 / 0.7, strict.
    fn default() -> Self {
        Self {
            thresholds: vec![0.3, 0.5, 0.7],
            mode: ThresholdMode::StrictGreater,
        }
    }
}

/// Evaluation summary over one query set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `(threshold, recall)` pairs in threshold order; recalls are in [0, 1].
    pub recall_at: Vec<(f64, f64)>,
    pub mean_iou: f64,
    pub num_queries: usize,
    /// Per-query IoU, sorted by `query_id` for deterministic output.
    pub per_query_iou: Vec<(String, f64)>,
}

impl EvalReport {
    /// Recall at one of the configured thresholds, if present.
    pub fn recall_at(&self, threshold: f64) -> Option<f64> {
        self.recall_at
            .iter()
            .find(|(t, _)| *t == threshold)
            .map(|(_, r)| *r)
    }
}

/// Scores predicted spans (in seconds) against ground truth.
///
/// Predictions and annotations are matched by `query_id`; the match must be
/// a bijection, and duplicates on either side are rejected. Input order is
/// irrelevant: the report is sorted by `query_id`.
pub fn evaluate(
    predictions: &[(String, TemporalSpan)],
    ground_truth: &[GroundTruthAnnotation],
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    if predictions.is_empty() && ground_truth.is_empty() {
        return Err(EvalError::NoQueries);
    }
    check_unique(predictions.iter().map(|(id, _)| id), "predictions")?;
    check_unique(ground_truth.iter().map(|g| &g.query_id), "ground truth")?;

    let gt_by_id: std::collections::HashMap<&str, &GroundTruthAnnotation> = ground_truth
        .iter()
        .map(|g| (g.query_id.as_str(), g))
        .collect();
    let predicted_ids: std::collections::HashSet<&str> =
        predictions.iter().map(|(id, _)| id.as_str()).collect();

    let mut missing_ground_truth: Vec<String> = predictions
        .iter()
        .map(|(id, _)| id)
        .filter(|id| !gt_by_id.contains_key(id.as_str()))
        .cloned()
        .collect();
    let mut missing_predictions: Vec<String> = ground_truth
        .iter()
        .map(|g| &g.query_id)
        .filter(|id| !predicted_ids.contains(id.as_str()))
        .cloned()
        .collect();
    if !missing_ground_truth.is_empty() || !missing_predictions.is_empty() {
        missing_ground_truth.sort();
        missing_predictions.sort();
        return Err(EvalError::Unmatched {
            missing_ground_truth,
            missing_predictions,
        });
    }

    let mut per_query_iou = Vec::with_capacity(predictions.len());
    for (query_id, span) in predictions {
        if span.unit != SpanUnit::Seconds {
            return Err(EvalError::PredictionNotSeconds {
                query_id: query_id.clone(),
            });
        }
        let gt = gt_by_id[query_id.as_str()];
        // Units were just checked on both sides, so IoU cannot fail.
        let iou = span.iou(&gt.span_sec).expect("both spans are in seconds");
        per_query_iou.push((query_id.clone(), iou));
    }
    per_query_iou.sort_by(|a, b| a.0.cmp(&b.0));

    let n = per_query_iou.len() as f64;
    let recall_at = config
        .thresholds
        .iter()
        .map(|&t| {
            let hits = per_query_iou
                .iter()
                .filter(|(_, iou)| config.mode.counts(*iou, t))
                .count();
            (t, hits as f64 / n)
        })
        .collect();
    let mean_iou = per_query_iou.iter().map(|(_, iou)| iou).sum::<f64>() / n;

    Ok(EvalReport {
        recall_at,
        mean_iou,
        num_queries: per_query_iou.len(),
        per_query_iou,
    })
}

fn check_unique<'a>(
    ids: impl Iterator<Item = &'a String>,
    side: &'static str,
) -> Result<(), EvalError> {
    let mut seen = std::collections::HashSet::new();
    let mut dups = std::collections::BTreeSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            dups.insert(id.clone());
        }
    }
    if dups.is_empty() {
        Ok(())
    } else {
        Err(EvalError::DuplicateQueryIds {
            side,
            ids: dups.into_iter().collect(),
        })
    }
}

/// One cell of the ablation grid: a boundary/selector pairing and its
/// metrics over the shared query set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub boundary: BoundaryStrategy,
    pub selector: SelectionStrategy,
    pub recall_at: Vec<(f64, f64)>,
    pub mean_iou: f64,
}

/// The full strategy-grid report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub thresholds: Vec<f64>,
    pub mode: ThresholdMode,
    pub gamma: f64,
    pub num_queries: usize,
    /// Cells in cross-product order: boundaries outer, selectors inner.
    pub cells: Vec<AblationCell>,
}

impl AblationReport {
    /// Looks up one cell by strategy pair.
    pub fn cell(
        &self,
        boundary: BoundaryStrategy,
        selector: SelectionStrategy,
    ) -> Option<&AblationCell> {
        self.cells
            .iter()
            .find(|c| c.boundary == boundary && c.selector == selector)
    }
}

/// Runs every boundary × selector pairing over the query set and scores
/// each against the shared ground truth.
///
/// Each cell is exactly the composition "infer with (boundary, selector),
/// then evaluate": cells are independent and are computed in parallel, with
/// results assembled in declared cross-product order so the report is
/// deterministic regardless of thread count.
pub fn ablation_grid(
    cases: &[QueryCase],
    ground_truth: &[GroundTruthAnnotation],
    boundaries: &[BoundaryStrategy],
    selectors: &[SelectionStrategy],
    gamma: f64,
    config: &EvalConfig,
) -> Result<AblationReport, EvalError> {
    if boundaries.is_empty() || selectors.is_empty() {
        return Err(EvalError::EmptyStrategyList);
    }
    let pairs: Vec<(BoundaryStrategy, SelectionStrategy)> = boundaries
        .iter()
        .flat_map(|&b| selectors.iter().map(move |&s| (b, s)))
        .collect();
    let cells = pairs
        .into_par_iter()
        .map(|(boundary, selector)| {
            let predictions = cases
                .iter()
                .map(|case| {
                    infer_case(case, boundary, selector, gamma).map(|p| (p.query_id, p.span_sec))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let report = evaluate(&predictions, ground_truth, config)?;
            Ok(AblationCell {
                boundary,
                selector,
                recall_at: report.recall_at,
                mean_iou: report.mean_iou,
            })
        })
        .collect::<Result<Vec<AblationCell>, EvalError>>()?;
    Ok(AblationReport {
        thresholds: config.thresholds.clone(),
        mode: config.mode,
        gamma,
        num_queries: cases.len(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GaussianMask, MixtureProposal};
    use proptest::prelude::*;

    fn gt(query_id: &str, start: f64, end: f64, duration: f64) -> GroundTruthAnnotation {
        GroundTruthAnnotation {
            query_id: query_id.to_string(),
            video_id: format!("video-{query_id}"),
            duration_sec: duration,
            span_sec: TemporalSpan::seconds(start, end).unwrap(),
            sentence: format!("sentence for {query_id}"),
        }
    }

    fn prediction(query_id: &str, start: f64, end: f64) -> (String, TemporalSpan) {
        (
            query_id.to_string(),
            TemporalSpan::seconds(start, end).unwrap(),
        )
    }

    /// Three queries with per-query IoUs 0.75, 0.4, 0.55.
    fn fixture() -> (Vec<(String, TemporalSpan)>, Vec<GroundTruthAnnotation>) {
        let predictions = vec![
            prediction("q0", 0.0, 6.0),
            prediction("q1", 0.0, 4.0),
            prediction("q2", 0.0, 5.5),
        ];
        let truth = vec![
            gt("q0", 0.0, 8.0, 20.0),
            gt("q1", 0.0, 10.0, 20.0),
            gt("q2", 0.0, 10.0, 20.0),
        ];
        (predictions, truth)
    }

    #[test]
    fn recall_and_mean_iou_fixture() {
        let (predictions, truth) = fixture();
        let report = evaluate(&predictions, &truth, &EvalConfig::default()).unwrap();
        assert_eq!(report.num_queries, 3);
        assert!((report.recall_at(0.3).unwrap() - 1.0).abs() <= 1e-4);
        assert!((report.recall_at(0.5).unwrap() - 0.6667).abs() <= 1e-4);
        assert!((report.recall_at(0.7).unwrap() - 0.3333).abs() <= 1e-4);
        assert!((report.mean_iou - 0.5667).abs() <= 1e-4);
        let ious: Vec<f64> = report.per_query_iou.iter().map(|(_, i)| *i).collect();
        assert!((ious[0] - 0.75).abs() <= 1e-12);
        assert!((ious[1] - 0.4).abs() <= 1e-12);
        assert!((ious[2] - 0.55).abs() <= 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let truth = vec![gt("a", 2.0, 9.0, 30.0), gt("b", 1.0, 4.0, 10.0)];
        let predictions = vec![prediction("a", 2.0, 9.0), prediction("b", 1.0, 4.0)];
        let report = evaluate(&predictions, &truth, &EvalConfig::default()).unwrap();
        assert_eq!(report.mean_iou, 1.0);
        for (_, r) in &report.recall_at {
            assert_eq!(*r, 1.0);
        }
    }

    #[test]
    fn disjoint_predictions_score_zero() {
        let truth = vec![gt("a", 0.0, 2.0, 30.0)];
        let predictions = vec![prediction("a", 10.0, 12.0)];
        let report = evaluate(&predictions, &truth, &EvalConfig::default()).unwrap();
        assert_eq!(report.mean_iou, 0.0);
        for (_, r) in &report.recall_at {
            assert_eq!(*r, 0.0);
        }
    }

    #[test]
    fn threshold_mode_at_exact_boundary() {
        // IoU is exactly 0.5: counted only under greater-equal.
        let truth = vec![gt("a", 0.0, 2.0, 10.0)];
        let predictions = vec![prediction("a", 0.0, 1.0)];
        let strict = EvalConfig::new(vec![0.5], ThresholdMode::StrictGreater).unwrap();
        let ge = EvalConfig::new(vec![0.5], ThresholdMode::GreaterEqual).unwrap();
        let r1 = evaluate(&predictions, &truth, &strict).unwrap();
        let r2 = evaluate(&predictions, &truth, &ge).unwrap();
        assert_eq!(r1.recall_at(0.5).unwrap(), 0.0);
        assert_eq!(r2.recall_at(0.5).unwrap(), 1.0);
    }

    #[test]
    fn unmatched_ids_are_listed() {
        let truth = vec![gt("a", 0.0, 2.0, 10.0), gt("b", 0.0, 2.0, 10.0)];
        let predictions = vec![prediction("a", 0.0, 1.0), prediction("c", 0.0, 1.0)];
        let err = evaluate(&predictions, &truth, &EvalConfig::default()).unwrap_err();
        match &err {
            EvalError::Unmatched {
                missing_ground_truth,
                missing_predictions,
            } => {
                assert_eq!(missing_ground_truth, &vec!["c".to_string()]);
                assert_eq!(missing_predictions, &vec!["b".to_string()]);
            }
            other => panic!("unexpected error {other:?}"),
        }
        let msg = err.to_string();
        assert!(msg.contains('b') && msg.contains('c'), "{msg}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let truth = vec![gt("a", 0.0, 2.0, 10.0)];
        let predictions = vec![prediction("a", 0.0, 1.0), prediction("a", 0.5, 1.5)];
        let err = evaluate(&predictions, &truth, &EvalConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            EvalError::DuplicateQueryIds {
                side: "predictions",
                ..
            }
        ));
    }

    #[test]
    fn empty_inputs_rejected() {
        let err = evaluate(&[], &[], &EvalConfig::default()).unwrap_err();
        assert!(matches!(err, EvalError::NoQueries));
    }

    #[test]
    fn normalized_predictions_rejected() {
        let truth = vec![gt("a", 0.0, 2.0, 10.0)];
        let predictions = vec![("a".to_string(), TemporalSpan::normalized(0.0, 0.2).unwrap())];
        let err = evaluate(&predictions, &truth, &EvalConfig::default()).unwrap_err();
        assert!(matches!(err, EvalError::PredictionNotSeconds { .. }));
    }

    #[test]
    fn config_validation() {
        assert!(EvalConfig::new(vec![0.3, 0.5, 0.7], ThresholdMode::StrictGreater).is_ok());
        assert!(EvalConfig::new(vec![0.5, 0.3], ThresholdMode::StrictGreater).is_err());
        assert!(EvalConfig::new(vec![0.3, 0.3], ThresholdMode::StrictGreater).is_err());
        assert!(EvalConfig::new(vec![0.0, 0.5], ThresholdMode::StrictGreater).is_err());
        assert!(EvalConfig::new(vec![0.5, 1.0], ThresholdMode::StrictGreater).is_err());
    }

    #[test]
    fn evaluate_is_order_invariant() {
        let (mut predictions, mut truth) = fixture();
        let a = evaluate(&predictions, &truth, &EvalConfig::default()).unwrap();
        predictions.reverse();
        truth.reverse();
        let b = evaluate(&predictions, &truth, &EvalConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    fn tiny_case(query_id: &str, center: f64, duration: f64) -> QueryCase {
        let masks = vec![
            GaussianMask::new(center, 0.2).unwrap(),
            GaussianMask::new((center + 0.2).min(1.0), 0.3).unwrap(),
        ];
        let p1 = MixtureProposal::new(masks, vec![0.6, 0.4], 0.4).unwrap();
        let p2 = MixtureProposal::new(
            vec![GaussianMask::new((center + 0.1).min(1.0), 0.25).unwrap()],
            vec![1.0],
            0.9,
        )
        .unwrap();
        QueryCase::new(
            query_id.to_string(),
            format!("v-{query_id}"),
            duration,
            64,
            vec![p1, p2],
        )
        .unwrap()
    }

    fn tiny_grid_inputs() -> (Vec<QueryCase>, Vec<GroundTruthAnnotation>) {
        let cases = vec![
            tiny_case("q0", 0.3, 40.0),
            tiny_case("q1", 0.5, 60.0),
            tiny_case("q2", 0.7, 25.0),
        ];
        let truth = vec![
            gt("q0", 8.0, 20.0, 40.0),
            gt("q1", 24.0, 42.0, 60.0),
            gt("q2", 15.0, 22.0, 25.0),
        ];
        (cases, truth)
    }

    #[test]
    fn grid_covers_cross_product_in_order() {
        let (cases, truth) = tiny_grid_inputs();
        let report = ablation_grid(
            &cases,
            &truth,
            &BoundaryStrategy::ALL,
            &SelectionStrategy::ALL,
            1.0,
            &EvalConfig::default(),
        )
        .unwrap();
        assert_eq!(report.cells.len(), 20);
        assert_eq!(report.num_queries, 3);
        let mut iter = report.cells.iter();
        for b in BoundaryStrategy::ALL {
            for s in SelectionStrategy::ALL {
                let cell = iter.next().unwrap();
                assert_eq!((cell.boundary, cell.selector), (b, s));
            }
        }
    }

    #[test]
    fn grid_cell_matches_direct_composition() {
        let (cases, truth) = tiny_grid_inputs();
        let config = EvalConfig::default();
        let report = ablation_grid(
            &cases,
            &truth,
            &[BoundaryStrategy::Attention],
            &[SelectionStrategy::IouLossSum],
            0.9,
            &config,
        )
        .unwrap();
        let predictions: Vec<(String, TemporalSpan)> = cases
            .iter()
            .map(|c| {
                let p = infer_case(
                    c,
                    BoundaryStrategy::Attention,
                    SelectionStrategy::IouLossSum,
                    0.9,
                )
                .unwrap();
                (p.query_id, p.span_sec)
            })
            .collect();
        let direct = evaluate(&predictions, &truth, &config).unwrap();
        let cell = &report.cells[0];
        assert_eq!(cell.mean_iou, direct.mean_iou);
        assert_eq!(cell.recall_at, direct.recall_at);
    }

    #[test]
    fn grid_is_deterministic_across_runs() {
        let (cases, truth) = tiny_grid_inputs();
        let run = || {
            ablation_grid(
                &cases,
                &truth,
                &BoundaryStrategy::ALL,
                &SelectionStrategy::ALL,
                1.0,
                &EvalConfig::default(),
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn grid_rejects_empty_strategy_lists() {
        let (cases, truth) = tiny_grid_inputs();
        let err = ablation_grid(
            &cases,
            &truth,
            &[],
            &SelectionStrategy::ALL,
            1.0,
            &EvalConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, EvalError::EmptyStrategyList));
    }

    proptest! {
        #[test]
        fn recall_is_monotone_in_threshold(
            ious in prop::collection::vec(0.0f64..=1.0, 1..40),
        ) {
            // Arbitrary per-query IoUs realized as nested spans over a
            // duration-10 ground truth starting at 0.
            let truth: Vec<GroundTruthAnnotation> = (0..ious.len())
                .map(|i| gt(&format!("q{i:03}"), 0.0, 10.0, 20.0))
                .collect();
            let predictions: Vec<(String, TemporalSpan)> = ious
                .iter()
                .enumerate()
                .map(|(i, &iou)| prediction(&format!("q{i:03}"), 0.0, 10.0 * iou))
                .collect();
            for mode in ThresholdMode::ALL {
                let config = EvalConfig::new(vec![0.1, 0.3, 0.5, 0.7, 0.9], mode).unwrap();
                let report = evaluate(&predictions, &truth, &config).unwrap();
                for w in report.recall_at.windows(2) {
                    prop_assert!(w[1].1 <= w[0].1);
                }
                prop_assert!((0.0..=1.0).contains(&report.mean_iou));
            }
        }

        #[test]
        fn greater_equal_dominates_strict(
            ious in prop::collection::vec(0.0f64..=1.0, 1..30),
        ) {
            let truth: Vec<GroundTruthAnnotation> = (0..ious.len())
                .map(|i| gt(&format!("q{i:03}"), 0.0, 10.0, 20.0))
                .collect();
            let predictions: Vec<(String, TemporalSpan)> = ious
                .iter()
                .enumerate()
                .map(|(i, &iou)| prediction(&format!("q{i:03}"), 0.0, 10.0 * iou))
                .collect();
            let strict = evaluate(
                &predictions,
                &truth,
                &EvalConfig::new(vec![0.3, 0.5, 0.7], ThresholdMode::StrictGreater).unwrap(),
            ).unwrap();
            let ge = evaluate(
                &predictions,
                &truth,
                &EvalConfig::new(vec![0.3, 0.5, 0.7], ThresholdMode::GreaterEqual).unwrap(),
            ).unwrap();
            for (s, g) in strict.recall_at.iter().zip(&ge.recall_at) {
                prop_assert!(g.1 >= s.1);
            }
        }
    }
}
