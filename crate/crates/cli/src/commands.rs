//! Implementations of the five subcommands.
//!
//! Shared conventions: stdout carries a short human summary, files carry
//! the machine output, repair warnings go to stderr. Outputs are staged so
//! that a failure removes everything already written (no partial result
//! sets), and every output gets a sibling provenance manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde_json::json;

use grounding_core::io::{
    read_activitynet_annotations, read_charades_annotations, read_durations, read_ground_truth,
    read_predictions, read_proposals, render_ablation_csv, render_ablation_markdown,
    render_eval_csv, render_eval_markdown, write_ground_truth, write_predictions, write_proposals,
    DataError, GroundTruthAnnotation, Ingested, PredictionRecord, ReportFormat,
};
use grounding_core::model::{render_proposal_curve, TemporalSpan};
use grounding_core::synth::SynthConfig;
use grounding_core::{
    ablation_grid, evaluate, infer_case, BoundaryStrategy, EvalConfig, SelectionStrategy,
};

use crate::args::{AblateArgs, EvaluateArgs, InferArgs, RenderArgs, SynthArgs, TruthSource};
use crate::manifest;

/// A command failure carrying its process exit code: 1 for I/O problems,
/// 2 for input validation.
#[derive(Debug)]
pub enum CliError {
    Io(anyhow::Error),
    Validation(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
        }
    }

    pub fn message(&self) -> &anyhow::Error {
        match self {
            CliError::Io(e) | CliError::Validation(e) => e,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { .. } => CliError::Io(anyhow!(e)),
            _ => CliError::Validation(anyhow!(e)),
        }
    }
}

fn validation(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Validation(e.into())
}

/// Tracks written files so a mid-command failure leaves no partial output
/// set behind.
struct OutputStage {
    written: Vec<PathBuf>,
}

impl OutputStage {
    fn new() -> Self {
        Self {
            written: Vec::new(),
        }
    }

    /// Runs one write step and records the path on success; on failure,
    /// removes the (possibly partial) target plus everything written so
    /// far.
    fn stage(
        &mut self,
        path: &Path,
        write: impl FnOnce(&Path) -> Result<(), DataError>,
    ) -> Result<(), CliError> {
        match write(path) {
            Ok(()) => {
                self.written.push(path.to_path_buf());
                Ok(())
            }
            Err(e) => {
                let _ = std::fs::remove_file(path);
                self.discard();
                Err(e.into())
            }
        }
    }

    fn stage_bytes(&mut self, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        self.stage(path, |p| {
            std::fs::write(p, bytes).map_err(|e| DataError::Io {
                path: p.to_path_buf(),
                source: e,
            })
        })
    }

    fn discard(&mut self) {
        for path in self.written.drain(..) {
            let _ = std::fs::remove_file(&path);
        }
    }

    /// Writes one provenance manifest next to every staged output.
    fn finish(
        mut self,
        command: &str,
        config: serde_json::Value,
        inputs: &[PathBuf],
    ) -> Result<(), CliError> {
        let outputs = self.written.clone();
        for output in &outputs {
            let manifest_path = manifest::path_for(output);
            let result = manifest::build(command, config.clone(), inputs, &outputs).and_then(|m| {
                let mut text = serde_json::to_string_pretty(&m)?;
                text.push('\n');
                std::fs::write(&manifest_path, text).map_err(std::io::Error::other)
            });
            if let Err(e) = result {
                let _ = std::fs::remove_file(&manifest_path);
                self.discard();
                return Err(CliError::Io(
                    anyhow!(e).context(format!("writing manifest {}", manifest_path.display())),
                ));
            }
            self.written.push(manifest_path);
        }
        Ok(())
    }
}

fn print_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn load_truth(
    source: &TruthSource,
) -> Result<(Vec<GroundTruthAnnotation>, &'static str), CliError> {
    let Ingested { records, warnings } = match source {
        TruthSource::Native(path) => read_ground_truth(path)?,
        TruthSource::Charades {
            annotations,
            durations,
        } => {
            let table = read_durations(durations)?;
            read_charades_annotations(annotations, &table)?
        }
        TruthSource::ActivityNet(path) => read_activitynet_annotations(path)?,
    };
    print_warnings(&warnings);
    let kind = match source {
        TruthSource::Native(_) => "native",
        TruthSource::Charades { .. } => "charades",
        TruthSource::ActivityNet(_) => "activitynet",
    };
    Ok((records, kind))
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let config = SynthConfig {
        num_queries: args.queries,
        num_proposals: args.proposals,
        masks_per_proposal: args.masks,
        center_noise_sd: args.center_noise,
        width_noise_sd: args.width_noise,
        loss_model: args.loss_model,
        seed: args.seed,
    };
    let (cases, truth) = grounding_core::generate(&config).map_err(validation)?;

    let mut stage = OutputStage::new();
    stage.stage(&args.out_proposals, |p| write_proposals(&cases, p))?;
    stage.stage(&args.out_ground_truth, |p| write_ground_truth(&truth, p))?;
    stage.finish(
        "synth",
        json!({
            "queries": args.queries,
            "proposals": args.proposals,
            "masks": args.masks,
            "center_noise_sd": args.center_noise,
            "width_noise_sd": args.width_noise,
            "loss_model": args.loss_model.token(),
            "seed": args.seed,
        }),
        &[],
    )?;
    println!(
        "generated {} queries ({} proposals x {} masks, seed {}) -> {}, {}",
        args.queries,
        args.proposals,
        args.masks,
        args.seed,
        args.out_proposals.display(),
        args.out_ground_truth.display(),
    );
    Ok(())
}

pub fn cmd_infer(args: &InferArgs) -> Result<(), CliError> {
    let cases = read_proposals(&args.proposals)?;
    let mut records = Vec::with_capacity(cases.len());
    let mut ties = 0usize;
    let mut degenerate = 0usize;
    for case in &cases {
        let p = infer_case(case, args.boundary, args.selector, args.gamma).map_err(validation)?;
        ties += p.tie as usize;
        degenerate += p.degenerate as usize;
        records.push(PredictionRecord {
            query_id: p.query_id,
            span_sec: p.span_sec,
            boundary_strategy: args.boundary,
            selector: args.selector,
            winner_index: p.winner + 1,
            score: p.score,
        });
    }

    let mut stage = OutputStage::new();
    stage.stage(&args.out, |p| write_predictions(&records, p))?;
    stage.finish(
        "infer",
        json!({
            "boundary": args.boundary.token(),
            "selector": args.selector.token(),
            "gamma": args.gamma,
        }),
        std::slice::from_ref(&args.proposals),
    )?;
    println!(
        "inferred {} predictions (boundary {}, selector {}, gamma {}) -> {}",
        records.len(),
        args.boundary.token(),
        args.selector.token(),
        args.gamma,
        args.out.display(),
    );
    if ties + degenerate > 0 {
        println!("  {ties} tie-broken, {degenerate} degenerate boundaries repaired");
    }
    Ok(())
}

fn eval_config(
    thresholds: &[f64],
    mode: grounding_core::ThresholdMode,
) -> Result<EvalConfig, CliError> {
    EvalConfig::new(thresholds.to_vec(), mode).map_err(validation)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let truth_source = args.truth.source();
    let predictions = read_predictions(&args.predictions)?;
    let (truth, truth_kind) = load_truth(&truth_source)?;
    let config = eval_config(&args.thresholds, args.threshold_mode)?;
    let pairs: Vec<(String, TemporalSpan)> = predictions
        .iter()
        .map(|r| (r.query_id.clone(), r.span_sec))
        .collect();
    let report = evaluate(&pairs, &truth, &config).map_err(validation)?;

    let rendered = match args.format {
        ReportFormat::Csv => render_eval_csv(&report),
        ReportFormat::Markdown => render_eval_markdown(&report),
    };
    let mut stage = OutputStage::new();
    stage.stage_bytes(&args.out, rendered.as_bytes())?;
    let mut inputs = vec![args.predictions.clone()];
    inputs.extend(truth_source.paths());
    stage.finish(
        "evaluate",
        json!({
            "thresholds": args.thresholds,
            "threshold_mode": args.threshold_mode.token(),
            "format": args.format.token(),
            "ground_truth_kind": truth_kind,
        }),
        &inputs,
    )?;

    let mut summary = format!("evaluated {} queries:", report.num_queries);
    for &(t, r) in &report.recall_at {
        let _ = write!(summary, " iou@{t} {r:.4}");
    }
    let _ = write!(summary, " miou {:.4}", report.mean_iou);
    println!("{summary}");
    println!("report -> {}", args.out.display());
    Ok(())
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<(), CliError> {
    let truth_source = args.truth.source();
    let boundaries = parse_boundary_list(&args.boundaries).map_err(|e| validation(anyhow!(e)))?;
    let selectors = parse_selector_list(&args.selectors).map_err(|e| validation(anyhow!(e)))?;
    let cases = read_proposals(&args.proposals)?;
    let (truth, truth_kind) = load_truth(&truth_source)?;
    let config = eval_config(&args.thresholds, args.threshold_mode)?;
    let report = ablation_grid(&cases, &truth, &boundaries, &selectors, args.gamma, &config)
        .map_err(validation)?;

    let rendered = match args.format {
        ReportFormat::Csv => render_ablation_csv(&report),
        ReportFormat::Markdown => render_ablation_markdown(&report),
    };
    let mut stage = OutputStage::new();
    stage.stage_bytes(&args.out, rendered.as_bytes())?;
    let mut inputs = vec![args.proposals.clone()];
    inputs.extend(truth_source.paths());
    stage.finish(
        "ablate",
        json!({
            "boundaries": boundaries.iter().map(|b| b.token()).collect::<Vec<_>>(),
            "selectors": selectors.iter().map(|s| s.token()).collect::<Vec<_>>(),
            "gamma": args.gamma,
            "thresholds": args.thresholds,
            "threshold_mode": args.threshold_mode.token(),
            "format": args.format.token(),
            "ground_truth_kind": truth_kind,
        }),
        &inputs,
    )?;

    let best = report
        .cells
        .iter()
        .max_by(|a, b| a.mean_iou.total_cmp(&b.mean_iou))
        .expect("grid has at least one cell");
    println!(
        "ablated {} boundary x {} selector cells over {} queries -> {}",
        boundaries.len(),
        selectors.len(),
        report.num_queries,
        args.out.display(),
    );
    println!(
        "best miou {:.4} at ({}, {})",
        best.mean_iou,
        best.boundary.token(),
        best.selector.token(),
    );
    Ok(())
}

pub fn cmd_render(args: &RenderArgs) -> Result<(), CliError> {
    let cases = read_proposals(&args.proposals)?;
    let case = cases
        .iter()
        .find(|c| c.query_id == args.query_id)
        .ok_or_else(|| {
            validation(anyhow!(
                "unknown query_id `{}` ({} queries in {})",
                args.query_id,
                cases.len(),
                args.proposals.display()
            ))
        })?;

    let curves: Vec<Vec<f64>> = case
        .proposals
        .iter()
        .map(|p| render_proposal_curve(p, case.num_segments, args.shape))
        .collect::<Result<_, _>>()
        .map_err(validation)?;

    let mut csv = String::from("segment,position");
    for i in 1..=curves.len() {
        let _ = write!(csv, ",proposal_{i}");
    }
    csv.push('\n');
    let denom = (case.num_segments - 1) as f64;
    for t in 0..case.num_segments {
        let _ = write!(csv, "{t},{:.6}", t as f64 / denom);
        for curve in &curves {
            let _ = write!(csv, ",{:.6}", curve[t]);
        }
        csv.push('\n');
    }

    let mut stage = OutputStage::new();
    stage.stage_bytes(&args.out, csv.as_bytes())?;
    stage.finish(
        "render",
        json!({ "query_id": args.query_id, "shape": args.shape.token() }),
        std::slice::from_ref(&args.proposals),
    )?;
    println!(
        "rendered {} proposal curve(s) x {} segments ({}) for query {} -> {}",
        curves.len(),
        case.num_segments,
        args.shape.token(),
        args.query_id,
        args.out.display(),
    );
    Ok(())
}

/// Expands `all` or parses a comma-separated token list via `FromStr`.
fn parse_strategy_list<T>(s: &str, all: &[T]) -> Result<Vec<T>, String>
where
    T: std::str::FromStr + Copy,
    T::Err: std::fmt::Display,
{
    if s.trim() == "all" {
        return Ok(all.to_vec());
    }
    s.split(',')
        .map(|part| part.trim().parse::<T>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_boundary_list(s: &str) -> Result<Vec<BoundaryStrategy>, String> {
    parse_strategy_list(s, &BoundaryStrategy::ALL)
}

fn parse_selector_list(s: &str) -> Result<Vec<SelectionStrategy>, String> {
    parse_strategy_list(s, &SelectionStrategy::ALL)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_list_all_expands_in_canonical_order() {
        let boundaries = parse_boundary_list("all").unwrap();
        assert_eq!(boundaries, BoundaryStrategy::ALL.to_vec());
        let selectors = parse_selector_list("all").unwrap();
        assert_eq!(selectors, SelectionStrategy::ALL.to_vec());
    }

    #[test]
    fn strategy_list_accepts_explicit_tokens_in_given_order() {
        let got = parse_boundary_list("attention, long-tail").unwrap();
        assert_eq!(
            got,
            vec![BoundaryStrategy::Attention, BoundaryStrategy::LongTail]
        );
    }

    #[test]
    fn strategy_list_rejects_unknown_token_and_lists_valid_ones() {
        let err = parse_boundary_list("longest-tail").unwrap_err();
        assert!(err.contains("longest-tail"), "{err}");
        assert!(err.contains("long-tail"), "{err}");
        assert!(err.contains("attention"), "{err}");
    }

    #[test]
    fn exit_codes_follow_the_error_kind() {
        assert_eq!(CliError::Io(anyhow!("disk")).exit_code(), 1);
        assert_eq!(CliError::Validation(anyhow!("bad flag")).exit_code(), 2);
    }

    #[test]
    fn data_errors_map_io_to_io_and_the_rest_to_validation() {
        let io_err = read_proposals(Path::new("/definitely/not/here.jsonl")).unwrap_err();
        assert_eq!(CliError::from(io_err).exit_code(), 1);
    }

    #[test]
    fn failed_stage_removes_previously_written_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("first.txt");
        let mut stage = OutputStage::new();
        stage.stage_bytes(&first, b"ok").unwrap();
        assert!(first.exists());

        let missing_parent = dir.path().join("no-such-dir").join("second.txt");
        let err = stage.stage_bytes(&missing_parent, b"boom").unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(
            !first.exists(),
            "staged outputs must be cleaned up on failure"
        );
    }

    #[test]
    fn finish_writes_a_manifest_per_output() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let mut stage = OutputStage::new();
        stage.stage_bytes(&a, b"x").unwrap();
        stage.stage_bytes(&b, b"y").unwrap();
        stage.finish("testcmd", json!({"k": 1}), &[]).unwrap();
        assert!(dir.path().join("a.csv.manifest.json").exists());
        assert!(dir.path().join("b.csv.manifest.json").exists());
    }
}
