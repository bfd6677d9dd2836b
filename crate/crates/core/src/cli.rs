//! Command-line surface. Every command reads a dataset manifest (or writes
//! one) and writes its results into an output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::align::{align_labels, AlignConfig, AlignError, AlignMode};
use crate::assign::AssignError;
use crate::bench::{
    average_precision, default_thresholds, evaluate_dataset, label_agreement, mf_ods, BenchConfig,
    BenchError, BenchMode, LabelAgreement,
};
use crate::grid::{GridError, Mapping, MultiLabelMap};
use crate::io::container::{read_labels, read_prob, write_container, ContainerError, Grid};
use crate::io::manifest::{base_dir, resolve, DatasetManifest, ImageEntry, ManifestError};
use crate::io::synth::{write_dataset, SynthError, SynthSpec};
use crate::io::viz::{plot_pr, visualize, visualize_labels, VizError};
use crate::oracle::{assign_step_suite, lemma_suite, theorem1_suite, SuiteReport};
use crate::train::{
    train, FeatureImage, PredictorAdapter, SealConfig, ToyPredictor, TrainError, TrainSample,
    TrainSchedule,
};

/// Failure of a command, classified by exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed files.
    Input(String),
    /// Some class could not be aligned inside its search windows.
    Infeasible(String),
    /// A check that should never fail did.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<AlignError> for CliError {
    fn from(e: AlignError) -> Self {
        match e {
            AlignError::Infeasible { .. } | AlignError::Assign(AssignError::Infeasible { .. }) => {
                CliError::Infeasible(e.to_string())
            }
            AlignError::InvalidConfig(_)
            | AlignError::Domain(_)
            | AlignError::Grid(_)
            | AlignError::MappingMismatch(_) => CliError::Input(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Align(a) => a.into(),
            TrainError::Grid(g) => CliError::Input(g.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::InvalidConfig(_) | BenchError::Grid(_) => CliError::Input(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

macro_rules! input_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}

input_errors!(
    ContainerError,
    ManifestError,
    SynthError,
    VizError,
    GridError
);

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

#[derive(Debug, Parser)]
#[command(
    name = "seal",
    version,
    about = "Align noisy edge labels, train against them and benchmark edge maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Align annotated labels against predicted probabilities; writes
    /// mappings and aligned labels per image.
    Align(AlignArgs),
    /// Refine the labels of a dataset; writes aligned labels and a manifest
    /// that records them as refined ground truth.
    Refine(AlignArgs),
    /// Train the built-in predictor with alternating alignment.
    Train(TrainArgs),
    /// Precision-recall benchmark of predicted probabilities.
    Eval(EvalArgs),
    /// Render probabilities or labels as colour images.
    Viz(VizArgs),
    /// Generate a synthetic dataset with clean and perturbed labels.
    Synth(SynthArgs),
    /// Run the brute-force reference checks on random small instances.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Iso,
    BgMrf,
}

impl From<ModeArg> for AlignMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Iso => AlignMode::Isotropic,
            ModeArg::BgMrf => AlignMode::BiasedMrf,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AlignOpts {
    #[arg(long, value_enum, default_value = "bg-mrf")]
    pub mode: ModeArg,
    /// Isotropic bandwidth.
    #[arg(long, default_value_t = 4.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_x: f64,
    #[arg(long, default_value_t = 4.0)]
    pub sigma_y: f64,
    #[arg(long, default_value_t = 0.02)]
    pub lambda: f64,
    /// Search window radius; defaults to three bandwidths.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub assign_steps: usize,
    #[arg(long, default_value_t = 2)]
    pub geodesic_radius: usize,
}

impl AlignOpts {
    pub fn config(&self) -> AlignConfig {
        let mode = AlignMode::from(self.mode);
        let widest = match mode {
            AlignMode::Isotropic => self.sigma,
            AlignMode::BiasedMrf => self.sigma_x.max(self.sigma_y),
        };
        AlignConfig {
            sigma: self.sigma,
            sigma_x: self.sigma_x,
            sigma_y: self.sigma_y,
            lambda: self.lambda,
            window_radius: self
                .window
                .unwrap_or_else(|| crate::align::default_window(widest)),
            assign_steps: self.assign_steps,
            geodesic_radius: self.geodesic_radius,
            ..AlignConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub align: AlignOpts,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.5)]
    pub step_size: f64,
    /// Leading steps trained on the annotation as given.
    #[arg(long, default_value_t = 50)]
    pub warmup: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Train on the annotation without realignment.
    #[arg(long)]
    pub no_align: bool,
    #[command(flatten)]
    pub align: AlignOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GtField {
    Labels,
    Refined,
    Truth,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "thin")]
    pub mode: EvalMode,
    /// Matching tolerance as a fraction of the image diagonal.
    #[arg(long, default_value_t = crate::bench::TOLERANCE_STANDARD)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 5)]
    pub border_ignore: usize,
    /// Number of evenly spaced thresholds.
    #[arg(long, default_value_t = 99)]
    pub thresholds: usize,
    #[arg(long, default_value_t = 1)]
    pub raw_gt_dilation: usize,
    /// Which label file of each image is the ground truth.
    #[arg(long, value_enum, default_value = "labels")]
    pub gt: GtField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvalMode {
    Thin,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VizField {
    Prob,
    Labels,
    Refined,
    Truth,
}

#[derive(Debug, Clone, Args)]
pub struct VizArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "prob")]
    pub field: VizField,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub images: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 2)]
    pub grid_rows: usize,
    #[arg(long, default_value_t = 2)]
    pub grid_cols: usize,
    #[arg(long, default_value_t = 3.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sharpness: f64,
    #[arg(long, default_value_t = 0.02)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instances per prior for the exact-alignment check.
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    #[arg(long, default_value_t = 200)]
    pub assign_count: usize,
    #[arg(long, default_value_t = 200)]
    pub lemma_count: usize,
    /// Also write the report as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command, returning what it prints on success.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Align(a) => cmd_align(&a, false),
        Command::Refine(a) => cmd_align(&a, true),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Viz(a) => cmd_viz(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Oracle(a) => cmd_oracle(&a),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Input(e.to_string()))?;
    run(cli)
}

struct Dataset {
    manifest: DatasetManifest,
    base: PathBuf,
}

impl Dataset {
    fn load(path: &Path) -> Result<Self, CliError> {
        let manifest = DatasetManifest::load(path)?;
        let base = base_dir(path);
        manifest.validate(&base)?;
        Ok(Self { manifest, base })
    }

    fn k(&self) -> usize {
        self.manifest.num_classes()
    }

    fn path(&self, rel: &str) -> PathBuf {
        resolve(&self.base, rel)
    }

    /// Absolute form of a manifest path, for manifests written elsewhere.
    fn absolute(&self, rel: &str) -> Result<String, CliError> {
        let p = self.path(rel);
        fs::canonicalize(&p)
            .map(|p| p.display().to_string())
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
    }

    fn labels(&self, e: &ImageEntry, field: GtField) -> Result<MultiLabelMap, CliError> {
        let rel = match field {
            GtField::Labels => Some(&e.labels),
            GtField::Refined => e.refined.as_ref(),
            GtField::Truth => e.truth.as_ref(),
        }
        .ok_or_else(|| CliError::Input(format!("image {} has no {field:?} labels", e.id)))?;
        Ok(read_labels(&self.path(rel), self.k())?)
    }

    /// Copy of an entry with every path made absolute.
    fn relocated(&self, e: &ImageEntry) -> Result<ImageEntry, CliError> {
        let opt = |o: &Option<String>| o.as_deref().map(|r| self.absolute(r)).transpose();
        Ok(ImageEntry {
            id: e.id.clone(),
            height: e.height,
            width: e.width,
            prob: self.absolute(&e.prob)?,
            labels: self.absolute(&e.labels)?,
            refined: opt(&e.refined)?,
            image: opt(&e.image)?,
            truth: opt(&e.truth)?,
        })
    }
}

#[derive(Serialize)]
struct ClassMapping {
    class: usize,
    /// `[source_row, source_col, target_row, target_col]` per edge pixel.
    pairs: Vec<[usize; 4]>,
}

fn mapping_json(mappings: &[Mapping]) -> Vec<ClassMapping> {
    mappings
        .iter()
        .enumerate()
        .map(|(class, m)| ClassMapping {
            class,
            pairs: m
                .pairs()
                .iter()
                .map(|(s, t)| [s.row, s.col, t.row, t.col])
                .collect(),
        })
        .collect()
}

#[derive(Serialize)]
struct AlignSummary {
    id: String,
    edge_pixels: usize,
    moved: usize,
    mean_displacement: f64,
}

fn cmd_align(a: &AlignArgs, refine: bool) -> Result<String, CliError> {
    let data = Dataset::load(&a.manifest)?;
    let cfg = a.align.config();
    let mode = AlignMode::from(a.align.mode);
    cfg.validate(mode)?;
    create_dir(&a.out)?;
    let results = data
        .manifest
        .images
        .par_iter()
        .map(|e| {
            let prob = read_prob(&data.path(&e.prob))?;
            let labels = data.labels(e, GtField::Labels)?;
            let aligned = align_labels(&labels, &prob, &cfg, mode)?;
            let file = format!("{}_refined.sebg", e.id);
            write_container(&Grid::Labels(aligned.labels.clone()), &a.out.join(&file))?;
            if !refine {
                write_json(
                    &a.out.join(format!("{}_mapping.json", e.id)),
                    &mapping_json(&aligned.mappings),
                )?;
            }
            let (mut n, mut moved, mut dist) = (0, 0, 0.0);
            for m in &aligned.mappings {
                for (_, (dx, dy)) in m.vectors() {
                    n += 1;
                    if dx != 0.0 || dy != 0.0 {
                        moved += 1;
                    }
                    dist += (dx * dx + dy * dy).sqrt();
                }
            }
            let summary = AlignSummary {
                id: e.id.clone(),
                edge_pixels: n,
                moved,
                mean_displacement: if n == 0 { 0.0 } else { dist / n as f64 },
            };
            Ok((file, summary))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut text = String::new();
    for (_, s) in &results {
        writeln!(
            text,
            "{}: {} edge pixels, {} moved, mean displacement {:.4}",
            s.id, s.edge_pixels, s.moved, s.mean_displacement
        )
        .unwrap();
    }
    if refine {
        let images = data
            .manifest
            .images
            .iter()
            .zip(&results)
            .map(|(e, (file, _))| {
                let mut r = data.relocated(e)?;
                r.refined = Some(file.clone());
                Ok(r)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let out = DatasetManifest {
            classes: data.manifest.classes.clone(),
            images,
        };
        out.save(&a.out.join("manifest.json"))?;
        writeln!(
            text,
            "refined manifest: {}",
            a.out.join("manifest.json").display()
        )
        .unwrap();
    } else {
        let summaries: Vec<&AlignSummary> = results.iter().map(|(_, s)| s).collect();
        write_json(&a.out.join("summary.json"), &summaries)?;
    }
    Ok(text)
}

#[derive(Serialize)]
struct TrainSummary {
    steps: usize,
    step_size: f64,
    warmup: usize,
    seed: u64,
    align: bool,
    initial_loss: f64,
    final_loss: f64,
    /// Mean distance from latent labels to clean labels, when the manifest
    /// has them, before and after training.
    initial_truth_distance: Option<f64>,
    final_truth_distance: Option<f64>,
}

/// Matching radius for comparing latent labels with clean ones.
pub const TRUTH_MATCH_RADIUS: f64 = 6.0;

fn truth_distance(pairs: &[(MultiLabelMap, MultiLabelMap)]) -> Result<Option<f64>, CliError> {
    let mut acc = LabelAgreement::default();
    for (labels, truth) in pairs {
        acc.add(&label_agreement(labels, truth, TRUTH_MATCH_RADIUS)?);
    }
    Ok(acc.mean_distance())
}

fn cmd_train(a: &TrainArgs) -> Result<String, CliError> {
    let data = Dataset::load(&a.manifest)?;
    let mode = AlignMode::from(a.align.mode);
    let seal = SealConfig {
        align: a.align.config(),
        mode,
        align_enabled: !a.no_align,
    };
    seal.align.validate(mode)?;
    if !(a.step_size.is_finite() && a.step_size >= 0.0) {
        return Err(CliError::Input(format!(
            "step size must be non-negative, got {}",
            a.step_size
        )));
    }
    create_dir(&a.out)?;
    let mut samples = Vec::new();
    let mut truths = Vec::new();
    for e in &data.manifest.images {
        let rel = e
            .image
            .as_ref()
            .ok_or_else(|| CliError::Input(format!("image {} has no input image", e.id)))?;
        let input = FeatureImage::from_plane(&read_prob(&data.path(rel))?)?;
        let noisy = data.labels(e, GtField::Labels)?;
        if e.truth.is_some() {
            truths.push(data.labels(e, GtField::Truth)?);
        }
        samples.push(TrainSample::new(input, noisy));
    }
    let have_truth = truths.len() == samples.len();
    let pair_up = |s: &[TrainSample<FeatureImage>]| -> Vec<(MultiLabelMap, MultiLabelMap)> {
        s.iter()
            .map(|s| s.latent.clone())
            .zip(truths.iter().cloned())
            .collect()
    };
    let initial_truth_distance = if have_truth {
        truth_distance(&pair_up(&samples))?
    } else {
        None
    };

    let mut predictor = ToyPredictor::new(data.k(), a.seed);
    let schedule = TrainSchedule {
        steps: a.steps,
        step_size: a.step_size,
        warmup: a.warmup,
    };
    let losses = train(&mut predictor, &mut samples, &seal, &schedule, |_, _| {})?;
    let final_truth_distance = if have_truth {
        truth_distance(&pair_up(&samples))?
    } else {
        None
    };

    let mut csv = String::from("step,loss\n");
    for (t, l) in losses.iter().enumerate() {
        writeln!(csv, "{t},{l}").unwrap();
    }
    write_text(&a.out.join("losses.csv"), &csv)?;
    write_json(&a.out.join("model.json"), &predictor)?;

    let images = data
        .manifest
        .images
        .par_iter()
        .zip(samples.par_iter())
        .map(|(e, s)| {
            let pred = format!("{}_pred.sebg", e.id);
            let latent = format!("{}_latent.sebg", e.id);
            write_container(&Grid::Prob(predictor.forward(&s.input)), &a.out.join(&pred))?;
            write_container(&Grid::Labels(s.latent.clone()), &a.out.join(&latent))?;
            let mut r = data.relocated(e)?;
            r.prob = pred;
            r.refined = Some(latent);
            Ok(r)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    DatasetManifest {
        classes: data.manifest.classes.clone(),
        images,
    }
    .save(&a.out.join("manifest.json"))?;

    let summary = TrainSummary {
        steps: a.steps,
        step_size: a.step_size,
        warmup: a.warmup,
        seed: a.seed,
        align: !a.no_align,
        initial_loss: losses.first().copied().unwrap_or(0.0),
        final_loss: losses.last().copied().unwrap_or(0.0),
        initial_truth_distance,
        final_truth_distance,
    };
    write_json(&a.out.join("summary.json"), &summary)?;
    let mut text = format!(
        "trained {} steps: loss {:.6} -> {:.6}\n",
        a.steps, summary.initial_loss, summary.final_loss
    );
    if let (Some(i), Some(f)) = (initial_truth_distance, final_truth_distance) {
        writeln!(text, "latent-to-truth distance {i:.4} -> {f:.4}").unwrap();
    }
    Ok(text)
}

#[derive(Serialize)]
struct EvalClass {
    class: String,
    has_ground_truth: bool,
    mf: f64,
    threshold: f64,
    precision: f64,
    recall: f64,
    ap: Option<f64>,
}

#[derive(Serialize)]
struct EvalSummary {
    mode: BenchMode,
    tolerance: f64,
    border_ignore: usize,
    classes: Vec<EvalClass>,
    mean_mf: f64,
    mean_ap: Option<f64>,
}

fn cmd_eval(a: &EvalArgs) -> Result<String, CliError> {
    let data = Dataset::load(&a.manifest)?;
    if a.thresholds == 0 {
        return Err(CliError::Input("need at least one threshold".into()));
    }
    let cfg = BenchConfig {
        tolerance: a.tolerance,
        mode: match a.mode {
            EvalMode::Thin => BenchMode::Thin,
            EvalMode::Raw => BenchMode::Raw,
        },
        thresholds: default_thresholds(a.thresholds),
        border_ignore: a.border_ignore,
        raw_gt_dilation: a.raw_gt_dilation,
    };
    cfg.validate()?;
    create_dir(&a.out)?;
    let items = data
        .manifest
        .images
        .iter()
        .map(|e| Ok((read_prob(&data.path(&e.prob))?, data.labels(e, a.gt)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let acc = evaluate_dataset(&items, data.k(), &cfg)?;
    let report = mf_ods(&acc);

    let mut csv = String::from("class,threshold,precision,recall\n");
    let mut classes = Vec::new();
    let mut aps = Vec::new();
    for (k, info) in data.manifest.classes.iter().enumerate() {
        let curve = acc.curve(k);
        for ((t, p), r) in curve
            .thresholds
            .iter()
            .zip(&curve.precision)
            .zip(&curve.recall)
        {
            writeln!(csv, "{},{t},{p},{r}", info.name).unwrap();
        }
        let ap = match cfg.mode {
            BenchMode::Raw => Some(average_precision(&curve)?),
            BenchMode::Thin => None,
        };
        let score = &report.per_class[k];
        if score.has_ground_truth {
            aps.extend(ap);
        }
        classes.push(EvalClass {
            class: info.name.clone(),
            has_ground_truth: score.has_ground_truth,
            mf: score.mf,
            threshold: score.threshold,
            precision: score.precision,
            recall: score.recall,
            ap,
        });
        if score.has_ground_truth {
            let plot = plot_pr(
                &[(curve.recall.clone(), curve.precision.clone(), info.color)],
                400,
            );
            plot.save_png(&a.out.join(format!("pr_{k:02}.png")))?;
        }
    }
    write_text(&a.out.join("pr.csv"), &csv)?;
    let summary = EvalSummary {
        mode: cfg.mode,
        tolerance: cfg.tolerance,
        border_ignore: cfg.border_ignore,
        classes,
        mean_mf: report.mean,
        mean_ap: (!aps.is_empty()).then(|| aps.iter().sum::<f64>() / aps.len() as f64),
    };
    write_json(&a.out.join("summary.json"), &summary)?;

    let mut text = String::new();
    for c in &summary.classes {
        let ap = c.ap.map(|v| format!(" AP {:.4}", v)).unwrap_or_default();
        let gt = if c.has_ground_truth {
            ""
        } else {
            " (no ground truth)"
        };
        writeln!(
            text,
            "{:<14} MF {:.4} at {:.2}{ap}{gt}",
            c.class, c.mf, c.threshold
        )
        .unwrap();
    }
    writeln!(text, "mean MF {:.4}", summary.mean_mf).unwrap();
    if let Some(ap) = summary.mean_ap {
        writeln!(text, "mean AP {ap:.4}").unwrap();
    }
    Ok(text)
}

fn cmd_viz(a: &VizArgs) -> Result<String, CliError> {
    let data = Dataset::load(&a.manifest)?;
    let colors = data.manifest.colors();
    create_dir(&a.out)?;
    let names = data
        .manifest
        .images
        .par_iter()
        .map(|e| {
            let img = match a.field {
                VizField::Prob => visualize(&read_prob(&data.path(&e.prob))?, &colors)?,
                VizField::Labels => visualize_labels(&data.labels(e, GtField::Labels)?, &colors)?,
                VizField::Refined => visualize_labels(&data.labels(e, GtField::Refined)?, &colors)?,
                VizField::Truth => visualize_labels(&data.labels(e, GtField::Truth)?, &colors)?,
            };
            let name = format!("{}.png", e.id);
            img.save_png(&a.out.join(&name))?;
            Ok(name)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(format!(
        "wrote {} images to {}\n",
        names.len(),
        a.out.display()
    ))
}

fn cmd_synth(a: &SynthArgs) -> Result<String, CliError> {
    let spec = SynthSpec {
        num_images: a.images,
        height: a.height,
        width: a.width,
        num_classes: a.classes,
        grid_rows: a.grid_rows,
        grid_cols: a.grid_cols,
        jitter: a.jitter,
        sharpness: a.sharpness,
        noise: a.noise,
        seed: a.seed,
        ..SynthSpec::default()
    };
    let path = write_dataset(&spec, &a.out)?;
    Ok(format!(
        "wrote {} images; manifest {}\n",
        spec.num_images,
        path.display()
    ))
}

fn cmd_oracle(a: &OracleArgs) -> Result<String, CliError> {
    let mut reports: Vec<SuiteReport> = theorem1_suite(a.seed, a.count);
    reports.push(assign_step_suite(a.seed, a.assign_count));
    reports.extend(lemma_suite(a.seed, a.lemma_count));
    if let Some(out) = &a.out {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            create_dir(dir)?;
        }
        write_json(out, &reports)?;
    }
    let mut text = String::new();
    for r in &reports {
        writeln!(text, "{:<20} {}/{} passed", r.name, r.passed, r.instances).unwrap();
    }
    let failed: Vec<String> = reports
        .iter()
        .filter(|r| !r.ok())
        .map(|r| format!("{} failed on instances {:?}", r.name, r.failures))
        .collect();
    if failed.is_empty() {
        Ok(text)
    } else {
        Err(CliError::Internal(format!("{text}{}", failed.join("; "))))
    }
}
