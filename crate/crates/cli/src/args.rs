//! Command-line surface: subcommands, flags, and flag-level parsing.
//!
//! Enum-valued flags (strategies, formats, shapes, modes) parse through the
//! core types' `FromStr` impls, so a bad token exits 2 with a message that
//! lists the valid tokens. Structural validation that needs more context
//! (threshold ordering, strategy lists, cross-file consistency) happens in
//! the command implementations and also exits 2.

use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

use grounding_core::io::ReportFormat;
use grounding_core::model::MaskShape;
use grounding_core::synth::LossModel;
use grounding_core::{BoundaryStrategy, SelectionStrategy, ThresholdMode};

/// Flag-level range check for `--gamma`.
fn parse_gamma(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("gamma must lie in (0, 1], got {v}"))
    }
}

/// Temporal grounding toolkit: turns Gaussian-mixture proposals into
/// top-1 spans and sweeps boundary/selector pairings into report tables.
#[derive(Debug, Parser)]
#[command(name = "grounding", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic proposal file plus aligned ground truth.
    Synth(SynthArgs),
    /// Run one boundary/selector pairing over a proposals file.
    Infer(InferArgs),
    /// Score a predictions file against ground truth.
    Evaluate(EvaluateArgs),
    /// Sweep boundary x selector pairings and emit the grid report.
    Ablate(AblateArgs),
    /// Dump one query's proposal curves as CSV (diagnostics).
    Render(RenderArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of synthetic queries.
    #[arg(long, default_value_t = 200)]
    pub queries: usize,
    /// Proposals per query.
    #[arg(long, default_value_t = 5)]
    pub proposals: usize,
    /// Masks per proposal.
    #[arg(long, default_value_t = 3)]
    pub masks: usize,
    /// Std-dev of the noise applied to anchor mask centers.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub center_noise: f64,
    /// Std-dev of the noise applied to anchor mask widths.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub width_noise: f64,
    /// Loss assignment: one-minus-iou, uniform-random, or constant.
    #[arg(long, default_value = "one-minus-iou")]
    pub loss_model: LossModel,
    /// RNG seed; identical flags reproduce byte-identical files.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output proposals file (line-delimited JSON).
    #[arg(long, value_name = "PATH")]
    pub out_proposals: PathBuf,
    /// Output ground-truth file (line-delimited JSON).
    #[arg(long, value_name = "PATH")]
    pub out_ground_truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Input proposals file (line-delimited JSON).
    #[arg(long, value_name = "PATH")]
    pub proposals: PathBuf,
    /// Boundary strategy: long-tail, short-tail, shortest-tail, average,
    /// or attention.
    #[arg(long)]
    pub boundary: BoundaryStrategy,
    /// Selection strategy: iou, loss, iou-loss-sum, or iou-loss-max.
    #[arg(long)]
    pub selector: SelectionStrategy,
    /// Tail-shrink factor in (0, 1].
    #[arg(long, default_value = "1.0", value_parser = parse_gamma)]
    pub gamma: f64,
    /// Output predictions file (line-delimited JSON, sorted by query_id).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

/// Ground-truth source flags: exactly one of `--ground-truth`,
/// `--charades`, or `--activitynet`, where `--charades` additionally
/// needs `--durations`.
#[derive(Debug, Args)]
#[command(group = ArgGroup::new("truth").required(true).multiple(false))]
pub struct TruthArgs {
    /// Native line-delimited ground-truth file.
    #[arg(long, value_name = "PATH", group = "truth")]
    pub ground_truth: Option<PathBuf>,
    /// Annotation lines shaped `<video_id> <start> <end>##<sentence>`.
    #[arg(long, value_name = "PATH", group = "truth", requires = "durations")]
    pub charades: Option<PathBuf>,
    /// `<video_id> <duration_sec>` table accompanying --charades.
    #[arg(long, value_name = "PATH", requires = "charades")]
    pub durations: Option<PathBuf>,
    /// JSON annotation map keyed by video id.
    #[arg(long, value_name = "PATH", group = "truth")]
    pub activitynet: Option<PathBuf>,
}

/// A resolved ground-truth source (one loader, its file paths).
#[derive(Debug, Clone)]
pub enum TruthSource {
    Native(PathBuf),
    Charades {
        annotations: PathBuf,
        durations: PathBuf,
    },
    ActivityNet(PathBuf),
}

impl TruthSource {
    /// Input paths, in loader order, for provenance manifests.
    pub fn paths(&self) -> Vec<PathBuf> {
        match self {
            TruthSource::Native(p) | TruthSource::ActivityNet(p) => vec![p.clone()],
            TruthSource::Charades {
                annotations,
                durations,
            } => {
                vec![annotations.clone(), durations.clone()]
            }
        }
    }
}

impl TruthArgs {
    /// Collapses the flag group into one source. Relies on clap having
    /// enforced the group (exactly one source, --charades with
    /// --durations).
    pub fn source(&self) -> TruthSource {
        if let Some(p) = &self.ground_truth {
            TruthSource::Native(p.clone())
        } else if let Some(p) = &self.charades {
            TruthSource::Charades {
                annotations: p.clone(),
                durations: self
                    .durations
                    .clone()
                    .expect("--charades implies --durations"),
            }
        } else {
            let p = self
                .activitynet
                .clone()
                .expect("one truth source is required");
            TruthSource::ActivityNet(p)
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Input predictions file (line-delimited JSON).
    #[arg(long, value_name = "PATH")]
    pub predictions: PathBuf,
    #[command(flatten)]
    pub truth: TruthArgs,
    /// Comma-separated recall thresholds, each in (0, 1), ascending.
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7")]
    pub thresholds: Vec<f64>,
    /// Recall comparison: strict-greater or greater-equal.
    #[arg(long, default_value = "strict-greater")]
    pub threshold_mode: ThresholdMode,
    /// Report format: csv or markdown.
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
    /// Output report file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Input proposals file (line-delimited JSON).
    #[arg(long, value_name = "PATH")]
    pub proposals: PathBuf,
    #[command(flatten)]
    pub truth: TruthArgs,
    /// `all` or a comma-separated boundary token list (table row order).
    #[arg(long, default_value = "all")]
    pub boundaries: String,
    /// `all` or a comma-separated selector token list (sub-row order).
    #[arg(long, default_value = "all")]
    pub selectors: String,
    /// Tail-shrink factor in (0, 1].
    #[arg(long, default_value = "1.0", value_parser = parse_gamma)]
    pub gamma: f64,
    /// Comma-separated recall thresholds, each in (0, 1), ascending.
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7")]
    pub thresholds: Vec<f64>,
    /// Recall comparison: strict-greater or greater-equal.
    #[arg(long, default_value = "strict-greater")]
    pub threshold_mode: ThresholdMode,
    /// Report format: csv or markdown.
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
    /// Output report file.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Input proposals file (line-delimited JSON).
    #[arg(long, value_name = "PATH")]
    pub proposals: PathBuf,
    /// Query to render (must exist in the proposals file).
    #[arg(long)]
    pub query_id: String,
    /// Curve shape: gaussian, laplace, or inverse-gaussian.
    #[arg(long, default_value = "gaussian")]
    pub shape: MaskShape,
    /// Output CSV file (one row per segment).
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}
