//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage/validation/load error, 2 gradcheck above
//! tolerance. Every JSON output embeds the resolved run configuration under
//! `config`; the thread count is left out so outputs do not depend on it.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::clip::{ActionClip, PredictionSet};
use crate::error::{Error, Result};
use crate::io::{self, RasterFormat, WeightEntry};
use crate::labeling::{build_pseudo_labels, BBoxMode, FrameAgg, LabelingConfig, MatchMode};
use crate::loss::{clip_loss, gradcheck, ClipLoss, LossConfig};
use crate::metrics::{compute_report, EvalLabels};
use crate::postprocess::{apply_threshold, DecisionSource, PostprocessConfig};
use crate::prompts::{build_prompt, PromptStyle};
use crate::synth::{self, PredictionMode, SynthParams};
use crate::vocab::vocab_stats;
use crate::weighting::{weight_cases, weight_histogram, weight_map, WeightCase, WeightConfig};

const TOOL: &str = env!("CARGO_PKG_NAME");
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "actionvos", version, about = "Action-aware pseudo-labels, weighted focal loss and pos/neg segmentation metrics")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "ACTIONVOS_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Report written files on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic clips, truth and reference predictions.
    Synth(SynthArgs),
    /// Build action-aware pseudo-labels.
    Label(LabelArgs),
    /// Write action-guided weight rasters.
    Weights(WeightsArgs),
    /// Evaluate the weighted focal loss of predictions.
    Loss(LossArgs),
    /// Check the analytic loss gradient against finite differences.
    Gradcheck(GradcheckArgs),
    /// Gate predictions on their action score.
    Postprocess(PostprocessArgs),
    /// Score predictions with p/n-mIoU, p/n-cIoU, gIoU and Acc.
    Eval(EvalArgs),
    /// Build referring prompts.
    Prompt(PromptArgs),
    /// Vocabulary statistics of two splits.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BBoxModeArg {
    PerComponent,
    Global,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FrameAggArg {
    Any,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatchModeArg {
    AllTokens,
    Substring,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StyleArg {
    NoAction,
    CommaAction,
    SentenceAction,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DecisionArg {
    Score,
    MaskNonempty,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Pmap,
    Pgm,
}

#[derive(Debug, Args)]
struct LabelingArgs {
    #[arg(long, default_value_t = 0.5)]
    contact_threshold: f64,
    #[arg(long, value_enum, default_value = "per-component")]
    bbox_mode: BBoxModeArg,
    #[arg(long, value_enum, default_value = "any")]
    frame_agg: FrameAggArg,
    #[arg(long, value_enum, default_value = "all-tokens")]
    match_mode: MatchModeArg,
}

impl LabelingArgs {
    fn config(&self) -> Result<LabelingConfig> {
        let cfg = LabelingConfig {
            contact_threshold: self.contact_threshold,
            bbox_mode: match self.bbox_mode {
                BBoxModeArg::PerComponent => BBoxMode::PerComponent,
                BBoxModeArg::Global => BBoxMode::Global,
            },
            frame_agg: match self.frame_agg {
                FrameAggArg::Any => FrameAgg::Any,
                FrameAggArg::All => FrameAgg::All,
            },
            match_mode: match self.match_mode {
                MatchModeArg::AllTokens => MatchMode::AllTokens,
                MatchModeArg::Substring => MatchMode::Substring,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct LambdaArgs {
    #[arg(long, default_value_t = 5.0)]
    lambda_pos: f32,
    #[arg(long, default_value_t = 2.0)]
    lambda_nar: f32,
    #[arg(long, default_value_t = 2.0)]
    lambda_hobj: f32,
    #[arg(long, default_value_t = 5.0)]
    lambda_neg: f32,
}

#[derive(Debug, Args)]
struct LossParamArgs {
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-7)]
    eps: f64,
}

impl LossParamArgs {
    fn config(&self) -> Result<LossConfig> {
        let cfg = LossConfig {
            alpha: self.alpha,
            gamma: self.gamma,
            eps: self.eps,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct GateArgs {
    #[arg(long, default_value_t = 0.75)]
    theta: f64,
    #[arg(long, value_enum, default_value = "score")]
    decision: DecisionArg,
    #[arg(long, default_value_t = 0.5)]
    binarize_at: f64,
}

impl GateArgs {
    fn config(&self) -> Result<PostprocessConfig> {
        let cfg = PostprocessConfig {
            theta: self.theta,
            decision_source: match self.decision {
                DecisionArg::Score => DecisionSource::Score,
                DecisionArg::MaskNonempty => DecisionSource::MaskNonempty,
            },
            binarize_at: self.binarize_at,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    clips: usize,
    #[arg(long, default_value_t = 3)]
    frames: usize,
    /// Grid size as HxW.
    #[arg(long, default_value = "64x64", value_parser = parse_size)]
    size: (usize, usize),
    #[arg(long, default_value_t = 3)]
    min_objects: usize,
    #[arg(long, default_value_t = 6)]
    max_objects: usize,
    /// Also write predictions_noisy.json with this flip probability.
    #[arg(long)]
    noisy: Option<f64>,
    #[command(flatten)]
    labeling: LabelingArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LabelArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    labeling: LabelingArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct WeightsArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    lambdas: LambdaArgs,
    #[command(flatten)]
    labeling: LabelingArgs,
    /// Also write gray-level case maps and a legend.
    #[arg(long)]
    viz: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LossArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    pseudo: PathBuf,
    #[arg(long)]
    weights: PathBuf,
    /// Include gradient norms per frame.
    #[arg(long)]
    grad: bool,
    #[command(flatten)]
    params: LossParamArgs,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[command(flatten)]
    params: LossParamArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PostprocessArgs {
    #[arg(long)]
    pred: PathBuf,
    /// Conform predictions to these clips before gating.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    gate: GateArgs,
    #[arg(long, value_enum, default_value = "pmap")]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Positivity bits: a pseudo-label file, a synth truth file or a
    /// human annotation in the same schema.
    #[arg(long)]
    labels: PathBuf,
    #[command(flatten)]
    gate: GateArgs,
    /// Report path; a CSV twin is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PromptArgs {
    #[arg(long, conflicts_with = "manifest", requires = "narration")]
    object: Option<String>,
    #[arg(long, conflicts_with = "manifest")]
    narration: Option<String>,
    /// Batch mode: one line per (clip, object).
    #[arg(long, required_unless_present = "object")]
    manifest: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "sentence-action")]
    style: StyleArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    val: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got '{s}'"))?;
    let h = h.trim().parse().map_err(|_| format!("bad height in '{s}'"))?;
    let w = w.trim().parse().map_err(|_| format!("bad width in '{s}'"))?;
    Ok((h, w))
}

fn path_str(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

#[derive(Serialize)]
struct RunConfig<'a> {
    tool: &'a str,
    version: &'a str,
    subcommand: &'a str,
    #[serde(flatten)]
    settings: Value,
}

fn echo(subcommand: &str, settings: Value) -> Value {
    serde_json::to_value(RunConfig {
        tool: TOOL,
        version: VERSION,
        subcommand,
        settings,
    })
    .expect("config echo serializes")
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config serializes")
}

struct Ctx {
    verbose: bool,
}

impl Ctx {
    fn wrote(&self, p: &Path) {
        if self.verbose {
            eprintln!("wrote {}", p.display());
        }
    }
}

fn emit_json<T: Serialize>(ctx: &Ctx, out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(p) => {
            io::write_json(p, value)?;
            ctx.wrote(p);
        }
        None => {
            let s = serde_json::to_string_pretty(value).expect("report serializes");
            to_stdout(&(s + "\n"));
        }
    }
    Ok(())
}

/// Writes to stdout; a closed reader (`| head`) ends output quietly.
fn to_stdout(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} worker threads: {e}", cli.jobs);
            return 1;
        }
    };
    let ctx = Ctx { verbose: cli.verbose };
    match pool.install(|| dispatch(&ctx, &cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(ctx: &Ctx, cmd: &Command) -> Result<i32> {
    match cmd {
        Command::Synth(a) => cmd_synth(ctx, a),
        Command::Label(a) => cmd_label(ctx, a),
        Command::Weights(a) => cmd_weights(ctx, a),
        Command::Loss(a) => cmd_loss(ctx, a),
        Command::Gradcheck(a) => cmd_gradcheck(ctx, a),
        Command::Postprocess(a) => cmd_postprocess(ctx, a),
        Command::Eval(a) => cmd_eval(ctx, a),
        Command::Prompt(a) => cmd_prompt(ctx, a),
        Command::Stats(a) => cmd_stats(ctx, a),
    }
}

#[derive(Serialize)]
struct TruthDoc<'a> {
    config: Value,
    #[serde(flatten)]
    truth: &'a synth::SynthTruth,
}

fn cmd_synth(ctx: &Ctx, a: &SynthArgs) -> Result<i32> {
    let params = SynthParams {
        seed: a.seed,
        clips: a.clips,
        frames_per_clip: a.frames,
        height: a.size.0,
        width: a.size.1,
        objects_min: a.min_objects,
        objects_max: a.max_objects,
        labeling: a.labeling.config()?,
        ..Default::default()
    };
    params.validate()?;
    if let Some(s) = a.noisy {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Config(format!("--noisy must lie in [0, 1], got {s}")));
        }
    }
    let config = echo(
        "synth",
        json!({ "synth": to_value(&params), "noisy": a.noisy, "out": path_str(&a.out) }),
    );
    let (clips, truth) = synth::generate(&params)?;
    let manifest = io::write_manifest(&a.out, &clips)?;
    ctx.wrote(&manifest);
    let truth_path = a.out.join("truth.json");
    io::write_json(&truth_path, &TruthDoc { config: config.clone(), truth: &truth })?;
    ctx.wrote(&truth_path);

    let mut modes = vec![PredictionMode::Perfect, PredictionMode::Empty, PredictionMode::Leaky];
    if let Some(sigma) = a.noisy {
        modes.push(PredictionMode::Noisy { sigma, seed: a.seed });
    }
    for mode in modes {
        let preds = synth::generate_predictions(&clips, &truth, mode)?;
        let name = match mode {
            PredictionMode::Noisy { .. } => "noisy".to_string(),
            m => m.name(),
        };
        let path = a.out.join(format!("predictions_{name}.json"));
        let mut cfg = config.clone();
        cfg["prediction_mode"] = to_value(&mode);
        io::write_predictions(&path, &preds, RasterFormat::Pmap, Some(cfg))?;
        ctx.wrote(&path);
    }
    Ok(0)
}

fn cmd_label(ctx: &Ctx, a: &LabelArgs) -> Result<i32> {
    let cfg = a.labeling.config()?;
    let clips = io::load_manifest(&a.manifest)?;
    let labels = clips
        .par_iter()
        .map(|c| build_pseudo_labels(c, &cfg))
        .collect::<Result<Vec<_>>>()?;
    let config = echo(
        "label",
        json!({ "labeling": to_value(&cfg), "manifest": path_str(&a.manifest), "out": path_str(&a.out) }),
    );
    let path = io::write_pseudo_labels(&a.out, &labels, &clips, Some(config))?;
    ctx.wrote(&path);
    Ok(0)
}

/// Gray level per weight case in `--viz` maps.
fn viz_level(case: WeightCase) -> u8 {
    match case {
        WeightCase::Outside | WeightCase::Otherwise => 0,
        WeightCase::Narrated | WeightCase::HandObject => 96,
        WeightCase::Positive => 176,
        WeightCase::Negative => 255,
    }
}

fn cmd_weights(ctx: &Ctx, a: &WeightsArgs) -> Result<i32> {
    let labeling = a.labeling.config()?;
    let weights = WeightConfig {
        lambda_pos: a.lambdas.lambda_pos,
        lambda_nar: a.lambdas.lambda_nar,
        lambda_hobj: a.lambdas.lambda_hobj,
        lambda_neg: a.lambdas.lambda_neg,
    };
    weights.validate()?;
    let clips = io::load_manifest(&a.manifest)?;
    let per_clip: Vec<Vec<(WeightEntry, Option<Vec<u8>>)>> = clips
        .par_iter()
        .map(|clip| {
            let mut out = Vec::new();
            for o in &clip.objects {
                for f in &clip.frames {
                    let raster = weight_map(clip, o.id, f.t, &labeling, &weights)?;
                    let viz = if a.viz {
                        Some(weight_cases(clip, o.id, f.t, &labeling)?.into_iter().map(viz_level).collect())
                    } else {
                        None
                    };
                    out.push((
                        WeightEntry {
                            clip_id: clip.clip_id.clone(),
                            object_id: o.id,
                            t: f.t,
                            raster,
                        },
                        viz,
                    ));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let (entries, vizzes): (Vec<WeightEntry>, Vec<Option<Vec<u8>>>) = per_clip.into_iter().flatten().unzip();

    let mut hist = crate::weighting::WeightHistogram::default();
    for e in &entries {
        hist.merge(&weight_histogram(&e.raster));
    }
    let config = echo(
        "weights",
        json!({
            "labeling": to_value(&labeling),
            "weights": to_value(&weights),
            "viz": a.viz,
            "manifest": path_str(&a.manifest),
            "out": path_str(&a.out),
        }),
    );
    let path = io::write_weights(&a.out, &entries, Some(config))?;
    ctx.wrote(&path);
    if ctx.verbose {
        eprintln!("weight histogram: {:?}", hist.entries());
    }

    if a.viz {
        let mut names = io::DirNames::default();
        let mut dirs: BTreeMap<&str, String> = BTreeMap::new();
        for (e, levels) in entries.iter().zip(&vizzes) {
            let levels = levels.as_ref().expect("viz computed");
            let sub = dirs.entry(e.clip_id.as_str()).or_insert_with(|| names.name(&e.clip_id)).clone();
            let (h, w) = e.raster.dims();
            let p = a.out.join("viz").join(sub).join(format!("obj{:03}_t{:05}.pgm", e.object_id, e.t));
            io::write_bytes(&p, &io::pgm::encode(h, w, levels))?;
        }
        let legend = json!({
            "levels": [
                { "gray": 0, "cases": ["outside", "otherwise"], "weight": 1.0 },
                { "gray": 96, "cases": ["narrated", "hand-object"], "weight": [weights.lambda_nar, weights.lambda_hobj] },
                { "gray": 176, "cases": ["positive"], "weight": weights.lambda_pos },
                { "gray": 255, "cases": ["negative"], "weight": weights.lambda_neg },
            ]
        });
        let lp = a.out.join("viz").join("legend.json");
        io::write_json(&lp, &legend)?;
        ctx.wrote(&lp);
    }
    Ok(0)
}

#[derive(Serialize)]
struct LossReport {
    config: Value,
    clips: Vec<ClipLoss>,
    /// Mean over every (clip, object, frame) term.
    aggregate: f64,
}

fn conform_all(preds: Vec<PredictionSet>, clips: &[ActionClip]) -> Result<BTreeMap<String, PredictionSet>> {
    let mut by_id: BTreeMap<String, PredictionSet> = preds.into_iter().map(|p| (p.clip_id.clone(), p)).collect();
    for c in clips {
        by_id
            .entry(c.clip_id.clone())
            .or_insert_with(|| PredictionSet::zeros_for(c))
            .conform_to(c)?;
    }
    Ok(by_id)
}

fn cmd_loss(ctx: &Ctx, a: &LossArgs) -> Result<i32> {
    let cfg = a.params.config()?;
    let clips = io::load_manifest(&a.manifest)?;
    let preds = conform_all(io::load_predictions(&a.pred, &clips)?, &clips)?;
    let pseudo: BTreeMap<String, _> = io::load_pseudo_labels(&a.pseudo)?
        .into_iter()
        .map(|p| (p.clip_id.clone(), p))
        .collect();
    let weights = io::load_weights(&a.weights)?;
    let reports = clips
        .par_iter()
        .map(|c| {
            let p = pseudo
                .get(&c.clip_id)
                .ok_or_else(|| Error::clip(&c.clip_id, "no pseudo-labels for clip"))?;
            let w = weights
                .get(&c.clip_id)
                .ok_or_else(|| Error::clip(&c.clip_id, "no weight rasters for clip"))?;
            clip_loss(&preds[&c.clip_id], p, w, &cfg, a.grad)
        })
        .collect::<Result<Vec<_>>>()?;
    let (sum, n) = reports
        .iter()
        .flat_map(|r| r.frames.iter())
        .fold((0.0, 0usize), |(s, n), f| (s + f.value, n + 1));
    let config = echo(
        "loss",
        json!({
            "loss": to_value(&cfg),
            "grad": a.grad,
            "manifest": path_str(&a.manifest),
            "pred": path_str(&a.pred),
            "pseudo": path_str(&a.pseudo),
            "weights": path_str(&a.weights),
        }),
    );
    let report = LossReport {
        config,
        clips: reports,
        aggregate: if n == 0 { 0.0 } else { sum / n as f64 },
    };
    emit_json(ctx, a.out.as_deref(), &report)?;
    Ok(0)
}

fn cmd_gradcheck(ctx: &Ctx, a: &GradcheckArgs) -> Result<i32> {
    let cfg = a.params.config()?;
    if a.trials == 0 {
        return Err(Error::Config("--trials must be >= 1".into()));
    }
    if !(a.tolerance > 0.0) {
        return Err(Error::Config(format!("--tolerance must be > 0, got {}", a.tolerance)));
    }
    let report = gradcheck(a.trials, a.seed, a.tolerance, &cfg)?;
    let config = echo("gradcheck", json!({ "loss": to_value(&cfg), "trials": a.trials, "seed": a.seed, "tolerance": a.tolerance }));
    emit_json(ctx, a.out.as_deref(), &json!({ "config": config, "report": to_value(&report) }))?;
    if report.passed {
        Ok(0)
    } else {
        eprintln!(
            "gradcheck failed: max relative error {:e} >= tolerance {:e}",
            report.max_rel_error, report.tolerance
        );
        Ok(2)
    }
}

fn cmd_postprocess(ctx: &Ctx, a: &PostprocessArgs) -> Result<i32> {
    let cfg = a.gate.config()?;
    let preds = match &a.manifest {
        Some(m) => {
            let clips = io::load_manifest(m)?;
            io::load_predictions(&a.pred, &clips)?
        }
        None => io::load_predictions_unchecked(&a.pred)?,
    };
    let gated: Vec<PredictionSet> = preds.par_iter().map(|p| apply_threshold(p, &cfg)).collect();
    let config = echo(
        "postprocess",
        json!({
            "postprocess": to_value(&cfg),
            "pred": path_str(&a.pred),
            "manifest": a.manifest.as_deref().map(path_str),
            "out": path_str(&a.out),
        }),
    );
    let format = match a.format {
        FormatArg::Pmap => RasterFormat::Pmap,
        FormatArg::Pgm => RasterFormat::Pgm,
    };
    io::write_predictions(&a.out, &gated, format, Some(config))?;
    ctx.wrote(&a.out);
    Ok(0)
}

fn cmd_eval(ctx: &Ctx, a: &EvalArgs) -> Result<i32> {
    let cfg = a.gate.config()?;
    let clips = io::load_manifest(&a.manifest)?;
    let preds = io::load_predictions(&a.pred, &clips)?;
    let bits = io::load_positivity(&a.labels)?;
    let labels_config = io::read_json::<Value>(&a.labels)?.get("config").cloned();
    let labels = clips
        .iter()
        .map(|c| {
            let b = bits
                .get(&c.clip_id)
                .ok_or_else(|| Error::clip(&c.clip_id, format!("no labels in {}", a.labels.display())))?;
            EvalLabels::from_clip(c, b)
        })
        .collect::<Result<Vec<_>>>()?;
    let gated: Vec<PredictionSet> = preds.iter().map(|p| apply_threshold(p, &cfg)).collect();
    let report = compute_report(&gated, &labels, &cfg)?;
    let config = echo(
        "eval",
        json!({
            "postprocess": to_value(&cfg),
            "labels_config": labels_config,
            "manifest": path_str(&a.manifest),
            "pred": path_str(&a.pred),
            "labels": path_str(&a.labels),
            "out": path_str(&a.out),
        }),
    );
    io::write_json(&a.out, &json!({ "config": config, "metrics": to_value(&report) }))?;
    ctx.wrote(&a.out);
    let csv = a.out.with_extension("csv");
    io::write_bytes(&csv, report.to_csv().as_bytes())?;
    ctx.wrote(&csv);
    to_stdout(&format!(
        "p-mIoU {:.4}  n-mIoU {:.4}  p-cIoU {:.4}  n-cIoU {:.4}  gIoU {:.4}  Acc {:.4}\n",
        report.p_miou, report.n_miou, report.p_ciou, report.n_ciou, report.giou, report.acc
    ));
    Ok(0)
}

fn cmd_prompt(ctx: &Ctx, a: &PromptArgs) -> Result<i32> {
    let style = match a.style {
        StyleArg::NoAction => PromptStyle::NoAction,
        StyleArg::CommaAction => PromptStyle::CommaAction,
        StyleArg::SentenceAction => PromptStyle::SentenceAction,
    };
    let mut text = String::new();
    match (&a.manifest, &a.object, &a.narration) {
        (Some(m), _, _) => {
            for clip in io::load_manifest(m)? {
                for o in &clip.objects {
                    let p = build_prompt(&o.name, &clip.narration, style)?;
                    text.push_str(&format!("{}\t{}\t{p}\n", clip.clip_id, o.id));
                }
            }
        }
        (None, Some(object), Some(narration)) => {
            text = build_prompt(object, narration, style)? + "\n";
        }
        _ => return Err(Error::Config("give --object and --narration, or --manifest".into())),
    }
    match &a.out {
        Some(p) => {
            io::write_bytes(p, text.as_bytes())?;
            ctx.wrote(p);
        }
        None => to_stdout(&text),
    }
    Ok(0)
}

fn cmd_stats(ctx: &Ctx, a: &StatsArgs) -> Result<i32> {
    let train = io::load_manifest(&a.train)?;
    let val = io::load_manifest(&a.val)?;
    let stats = vocab_stats(&train, &val);
    let config = echo("stats", json!({ "train": path_str(&a.train), "val": path_str(&a.val) }));
    emit_json(ctx, a.out.as_deref(), &json!({ "config": config, "stats": to_value(&stats) }))?;
    Ok(0)
}
