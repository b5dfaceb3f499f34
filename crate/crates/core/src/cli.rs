//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
//! Every stage seed is derived from the single `--seed` via [`crate::seed`].

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::classify::{
    load_model, save_model, EnsembleModel, KnnModel, Model, PipelineInfo, RfModel, SavedModel,
};
use crate::config::PipelineConfig;
use crate::dataset::{self, SyntheticSpec, MANIFEST_FILE};
use crate::eval::{self, Averaging};
use crate::features::{self, FeatureVariant, FeatureVector, Standardizer};
use crate::glcm::Aggregation;
use crate::imaging;
use crate::lbp::LbpMode;
use crate::seed;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(msg: impl std::fmt::Display) -> CliError {
    CliError::Runtime(msg.to_string())
}

type CliResult = Result<Outcome, CliError>;

/// Completed command; `partial` means some items failed and the exit code is 1.
struct Outcome {
    partial: bool,
}

const OK: Outcome = Outcome { partial: false };

#[derive(Parser, Debug)]
#[command(name = "texclass", version, about = "GLCM + LBP texture classification with KNN, random forest and a soft-voting ensemble")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the synthetic three-class texture dataset with rotated copies.
    Generate(GenerateArgs),
    /// Extract feature vectors from a dataset directory into CSV.
    Extract(ExtractArgs),
    /// Train classifiers from a feature CSV.
    Train(TrainArgs),
    /// Run the seven-cell evaluation grid and write reports.
    Evaluate(EvaluateArgs),
    /// Predict labels for images with a trained model.
    Predict(PredictArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Glcm,
    Lbp,
    Combined,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Knn,
    Rf,
    Ensemble,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AggregationArg {
    Average,
    Concatenate,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum LbpModeArg {
    Raw,
    Ri,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AveragingArg {
    Weighted,
    Macro,
}

/// Pipeline settings; unset flags fall back to `--config`, then to defaults.
#[derive(Args, Debug, Default)]
struct PipelineArgs {
    /// Key-value config file (`key = value` per line); flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Working resolution WxH [default: 128x128]
    #[arg(long, value_name = "WxH")]
    resize: Option<String>,
    /// Gray levels for GLCM quantization, 2..=256 [default: 8]
    #[arg(long)]
    levels: Option<usize>,
    /// GLCM pixel distance [default: 1]
    #[arg(long)]
    distance: Option<usize>,
    /// How the four GLCM angles are combined [default: average]
    #[arg(long, value_enum)]
    aggregation: Option<AggregationArg>,
    /// LBP histogram mode [default: ri]
    #[arg(long = "lbp-mode", value_enum)]
    lbp_mode: Option<LbpModeArg>,
    /// KNN neighbour count, odd [default: 5]
    #[arg(long)]
    k: Option<usize>,
    /// Random forest size [default: 100]
    #[arg(long)]
    trees: Option<usize>,
    /// Features tried per split [default: round(sqrt(dim))]
    #[arg(long = "max-features")]
    max_features: Option<usize>,
    /// Training share of each class [default: 0.9]
    #[arg(long = "train-fraction")]
    train_fraction: Option<f64>,
    /// Split without stratifying by class
    #[arg(long = "no-stratify")]
    no_stratify: bool,
    /// Skip z-score standardization
    #[arg(long = "no-standardize")]
    no_standardize: bool,
    /// Master seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,
}

impl PipelineArgs {
    fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            cfg.apply_text(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        }
        if let Some(r) = &self.resize {
            cfg.set("resize", r).map_err(|e| usage(e.to_string()))?;
        }
        if let Some(v) = self.levels {
            cfg.levels = v;
        }
        if let Some(v) = self.distance {
            cfg.distance = v;
        }
        if let Some(v) = self.aggregation {
            cfg.aggregation = match v {
                AggregationArg::Average => Aggregation::Average,
                AggregationArg::Concatenate => Aggregation::Concatenate,
            };
        }
        if let Some(v) = self.lbp_mode {
            cfg.lbp_mode = match v {
                LbpModeArg::Raw => LbpMode::Raw,
                LbpModeArg::Ri => LbpMode::RotationInvariant,
            };
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.trees {
            cfg.trees = v;
        }
        if self.max_features.is_some() {
            cfg.max_features = self.max_features;
        }
        if let Some(v) = self.train_fraction {
            cfg.train_fraction = v;
        }
        if self.no_stratify {
            cfg.stratify = false;
        }
        if self.no_standardize {
            cfg.standardize = false;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Output dataset directory
    #[arg(long)]
    out: PathBuf,
    /// Master seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Base images per class
    #[arg(long = "per-class", default_value_t = 20)]
    per_class: usize,
    /// Image edge length in pixels
    #[arg(long, default_value_t = 128)]
    size: usize,
    /// Rotation increment in degrees
    #[arg(long = "rotation-step", default_value_t = 5.0)]
    rotation_step: f64,
    /// Rotated copies per base image
    #[arg(long, default_value_t = 9)]
    rotations: usize,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Dataset directory (`<class>/<image>` layout, optional manifest.csv)
    #[arg(long)]
    dataset: PathBuf,
    /// Output CSV file, or a directory when `--variant all`
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Combined)]
    variant: VariantArg,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Feature CSV produced by `extract`
    #[arg(long)]
    features: PathBuf,
    /// Output directory for model and standardizer files
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::All)]
    model: ModelArg,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Dataset directory to extract features from
    #[arg(long, required_unless_present = "features", conflicts_with = "features")]
    dataset: Option<PathBuf>,
    /// Precomputed combined-variant feature CSV
    #[arg(long)]
    features: Option<PathBuf>,
    /// Report directory
    #[arg(long)]
    out: PathBuf,
    /// Averaging for precision, recall and F1
    #[arg(long, value_enum, default_value_t = AveragingArg::Weighted)]
    averaging: AveragingArg,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Model JSON written by `train`
    #[arg(long)]
    model: PathBuf,
    /// Image files or dataset directories
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Predict(a) => cmd_predict(a),
    };
    match result {
        Ok(Outcome { partial: false }) => ExitCode::SUCCESS,
        Ok(Outcome { partial: true }) => ExitCode::from(1),
        Err(e) => {
            let (CliError::Usage(msg) | CliError::Runtime(msg)) = &e;
            eprintln!("error: {msg}");
            ExitCode::from(e.code())
        }
    }
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| runtime(format!("cannot create {}: {e}", path.display())))
}

fn cmd_generate(a: GenerateArgs) -> CliResult {
    let spec = SyntheticSpec {
        per_class: a.per_class,
        size: a.size,
        seed: seed::derive(a.seed, seed::STREAM_GENERATE),
        ..SyntheticSpec::default()
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    if !(a.rotation_step.is_finite() && a.rotation_step > 0.0)
        || a.rotation_step * a.rotations as f64 >= 360.0
    {
        return Err(usage(format!(
            "--rotation-step {} x --rotations {} must be positive and below 360 degrees",
            a.rotation_step, a.rotations
        )));
    }
    create_dir(&a.out)?;
    let base = dataset::generate_synthetic(&spec, &a.out).map_err(runtime)?;
    let manifest = if a.rotations > 0 {
        dataset::augment_rotations(&base, &a.out, a.rotation_step, a.rotations, &a.out)
            .map_err(runtime)?
    } else {
        base
    };
    manifest.save(&a.out.join(MANIFEST_FILE)).map_err(runtime)?;
    println!("wrote {} images to {}", manifest.entries.len(), a.out.display());
    for (class, n) in manifest.class_counts() {
        println!("  {class}: {n}");
    }
    Ok(OK)
}

/// `(source, label, image)` in manifest order.
type Loaded = Vec<(String, String, imaging::GrayImage)>;

/// Opens a dataset and decodes all images; failures are logged and counted.
fn load_dataset(root: &Path) -> Result<(Loaded, usize), CliError> {
    if !root.is_dir() {
        return Err(usage(format!("dataset directory {} does not exist", root.display())));
    }
    let ingested = dataset::open(root).map_err(runtime)?;
    let mut failed = ingested.skipped.len();
    let images = ingested.manifest.load_images(root);
    let mut out = Vec::with_capacity(images.len());
    for (entry, img) in ingested.manifest.entries.iter().zip(images) {
        match img {
            Ok(img) => out.push((entry.path.clone(), entry.label.clone(), img)),
            Err(e) => {
                log::error!("{}: {e}", entry.path);
                eprintln!("failed to read {}: {e}", entry.path);
                failed += 1;
            }
        }
    }
    Ok((out, failed))
}

fn extract_all(
    images: &Loaded,
    variant: FeatureVariant,
    cfg: &PipelineConfig,
) -> (Vec<FeatureVector>, usize) {
    let ecfg = cfg.extract_config();
    let results: Vec<_> = images
        .par_iter()
        .map(|(src, label, img)| features::extract(img, variant, &ecfg, label.as_str(), src.as_str()))
        .collect();
    let mut failed = 0;
    let mut set = Vec::with_capacity(results.len());
    for ((src, _, _), r) in images.iter().zip(results) {
        match r {
            Ok(v) => set.push(v),
            Err(e) => {
                eprintln!("failed to extract {src}: {e}");
                failed += 1;
            }
        }
    }
    (set, failed)
}

fn cmd_extract(a: ExtractArgs) -> CliResult {
    let cfg = a.pipeline.resolve()?;
    let (images, mut failed) = load_dataset(&a.dataset)?;
    let variants: Vec<FeatureVariant> = match a.variant {
        VariantArg::Glcm => vec![FeatureVariant::Glcm],
        VariantArg::Lbp => vec![FeatureVariant::Lbp],
        VariantArg::Combined => vec![FeatureVariant::Combined],
        VariantArg::All => FeatureVariant::ALL.to_vec(),
    };
    if a.variant == VariantArg::All {
        create_dir(&a.out)?;
    } else if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    for variant in variants {
        let (set, bad) = extract_all(&images, variant, &cfg);
        failed += bad;
        let path = if a.variant == VariantArg::All {
            a.out.join(format!("{variant}.csv"))
        } else {
            a.out.clone()
        };
        features::save_features(&set, &path).map_err(runtime)?;
        println!(
            "{variant}: {} vectors x {} features -> {}",
            set.len(),
            cfg.extract_config().len(variant),
            path.display()
        );
    }
    if failed > 0 {
        eprintln!("{failed} image(s) failed");
    }
    Ok(Outcome { partial: failed > 0 })
}

/// Reconciles the configured layout with the one implied by the file's width.
fn adopt_layout(cfg: &mut PipelineConfig, set: &[FeatureVector]) -> Result<FeatureVariant, CliError> {
    let first = set.first().ok_or_else(|| runtime("feature file has no rows"))?;
    let layout = FeatureVariant::infer(first.values.len())
        .ok_or_else(|| runtime("feature width matches no known layout"))?;
    match layout.variant {
        FeatureVariant::Glcm => cfg.aggregation = layout.aggregation,
        FeatureVariant::Lbp => cfg.lbp_mode = layout.lbp_mode,
        FeatureVariant::Combined => {
            cfg.aggregation = layout.aggregation;
            cfg.lbp_mode = layout.lbp_mode;
        }
    }
    Ok(layout.variant)
}

fn cmd_train(a: TrainArgs) -> CliResult {
    let mut cfg = a.pipeline.resolve()?;
    if !a.features.is_file() {
        return Err(usage(format!("feature file {} does not exist", a.features.display())));
    }
    let set = features::load_features(&a.features).map_err(runtime)?;
    let variant = adopt_layout(&mut cfg, &set)?;
    if cfg.k > set.len() {
        return Err(usage(format!(
            "--k {} exceeds the {} training vectors (k must be <= training size)",
            cfg.k,
            set.len()
        )));
    }
    let dim = set[0].values.len();
    if let Some(m) = cfg.max_features.filter(|&m| m > dim) {
        return Err(usage(format!("--max-features {m} exceeds the feature dimension {dim}")));
    }
    let mut classes: Vec<String> = set.iter().map(|v| v.label.clone()).collect();
    classes.sort_unstable();
    classes.dedup();
    let labels: Vec<usize> = set
        .iter()
        .map(|v| classes.binary_search(&v.label).expect("label collected above"))
        .collect();
    let standardizer = if cfg.standardize {
        Some(Standardizer::fit_vectors(&set).map_err(runtime)?)
    } else {
        None
    };
    let rows: Vec<Vec<f64>> = match &standardizer {
        Some(s) => set
            .iter()
            .map(|v| s.transform(&v.values))
            .collect::<Result<_, _>>()
            .map_err(runtime)?,
        None => set.iter().map(|v| v.values.clone()).collect(),
    };
    create_dir(&a.out)?;
    let pipeline = PipelineInfo {
        variant,
        extract: cfg.extract_config(),
        standardizer: standardizer.clone(),
    };
    let want = |m: ModelArg| a.model == m || a.model == ModelArg::All;
    let need_knn = want(ModelArg::Knn) || want(ModelArg::Ensemble);
    let need_rf = want(ModelArg::Rf) || want(ModelArg::Ensemble);
    let knn = if need_knn {
        Some(KnnModel::fit(cfg.k, rows.clone(), labels.clone(), classes.clone()).map_err(runtime)?)
    } else {
        None
    };
    let rf = if need_rf {
        Some(RfModel::train(&rows, &labels, classes.clone(), cfg.rf_config()).map_err(runtime)?)
    } else {
        None
    };
    let write = |name: &str, model: Model| -> Result<(), CliError> {
        let path = a.out.join(format!("{name}.json"));
        save_model(&SavedModel::new(model, Some(pipeline.clone())), &path).map_err(runtime)?;
        println!("wrote {}", path.display());
        Ok(())
    };
    if want(ModelArg::Knn) {
        write("knn", Model::Knn(knn.clone().expect("trained")))?;
    }
    if want(ModelArg::Rf) {
        write("rf", Model::Rf(rf.clone().expect("trained")))?;
    }
    if want(ModelArg::Ensemble) {
        let e = EnsembleModel::new(knn.expect("trained"), rf.expect("trained")).map_err(runtime)?;
        write("ensemble", Model::Ensemble(e))?;
    }
    if let Some(s) = &standardizer {
        let path = a.out.join("standardizer.json");
        let text = serde_json::to_string_pretty(s).map_err(runtime)?;
        std::fs::write(&path, text + "\n").map_err(runtime)?;
        println!("wrote {}", path.display());
    }
    Ok(OK)
}

fn cmd_evaluate(a: EvaluateArgs) -> CliResult {
    let mut cfg = a.pipeline.resolve()?;
    let (set, failed) = match (&a.dataset, &a.features) {
        (Some(root), _) => {
            let (images, mut failed) = load_dataset(root)?;
            let (set, bad) = extract_all(&images, FeatureVariant::Combined, &cfg);
            failed += bad;
            (set, failed)
        }
        (None, Some(path)) => {
            if !path.is_file() {
                return Err(usage(format!("feature file {} does not exist", path.display())));
            }
            let set = features::load_features(path).map_err(runtime)?;
            if adopt_layout(&mut cfg, &set)? != FeatureVariant::Combined {
                return Err(usage("evaluate needs a combined-variant feature file"));
            }
            (set, 0)
        }
        (None, None) => unreachable!("clap requires --dataset or --features"),
    };
    let averaging = match a.averaging {
        AveragingArg::Weighted => Averaging::Weighted,
        AveragingArg::Macro => Averaging::Macro,
    };
    let report = eval::run_grid(&set, &cfg, averaging).map_err(runtime)?;
    create_dir(&a.out)?;
    let table = report.table();
    let io = |p: &Path, e: std::io::Error| runtime(format!("cannot write {}: {e}", p.display()));
    let table_path = a.out.join("report.txt");
    std::fs::write(&table_path, &table).map_err(|e| io(&table_path, e))?;
    let json_path = a.out.join("report.json");
    std::fs::write(&json_path, report.to_json() + "\n").map_err(|e| io(&json_path, e))?;
    for row in &report.rows {
        if let Some(cm) = &row.confusion {
            let p = a.out.join(format!("confusion_{}.csv", row.slug()));
            let f = std::fs::File::create(&p).map_err(|e| io(&p, e))?;
            cm.write_csv(std::io::BufWriter::new(f)).map_err(|e| io(&p, e))?;
        }
    }
    print!("{table}");
    println!(
        "train {} / test {} ({}), seed {}",
        report.train_size,
        report.test_size,
        if cfg.stratify { "stratified" } else { "unstratified" },
        cfg.seed
    );
    Ok(Outcome {
        partial: report.any_failed() || failed > 0,
    })
}

fn predict_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let ingested = dataset::open(input).map_err(runtime)?;
            paths.extend(ingested.manifest.entries.iter().map(|e| input.join(&e.path)));
        } else {
            paths.push(input.clone());
        }
    }
    Ok(paths)
}

fn cmd_predict(a: PredictArgs) -> CliResult {
    let saved = load_model(&a.model)
        .map_err(|e| runtime(format!("cannot load model {}: {e}", a.model.display())))?;
    let pipeline = saved
        .pipeline
        .as_ref()
        .ok_or_else(|| runtime("model file has no extraction pipeline"))?;
    let produced = pipeline.extract.len(pipeline.variant);
    let expected = saved.model.dim();
    if produced != expected {
        return Err(runtime(format!(
            "feature length mismatch: model expects {expected} dimensions, {} extraction produces {produced}",
            pipeline.variant
        )));
    }
    let paths = predict_inputs(&a.inputs)?;
    eprintln!("# classes: {}", saved.model.classes().join(","));
    let lines: Vec<Result<String, String>> = paths
        .par_iter()
        .map(|path| {
            let img = imaging::read_image(path).map_err(|e| e.to_string())?;
            let values = features::extract_values(&img, pipeline.variant, &pipeline.extract)
                .map_err(|e| e.to_string())?;
            let values = match &pipeline.standardizer {
                Some(s) => s.transform(&values).map_err(|e| e.to_string())?,
                None => values,
            };
            let (label, scores) = saved.model.predict(&values).map_err(|e| e.to_string())?;
            let mut line = format!("{},{}", path.display(), saved.model.classes()[label]);
            for s in scores.as_slice() {
                line.push_str(&format!(",{s}"));
            }
            Ok(line)
        })
        .collect();
    let mut failed = 0;
    for (path, line) in paths.iter().zip(lines) {
        match line {
            Ok(l) => println!("{l}"),
            Err(e) => {
                failed += 1;
                println!("{},error,{}", path.display(), e.replace([',', '\n'], ";"));
            }
        }
    }
    Ok(Outcome { partial: failed > 0 })
}
