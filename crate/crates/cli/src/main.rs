//! `locboost`: synthetic data, training, grid search, final test evaluation,
//! detection and evaluation of detection files.

mod detections;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use locboost_core::boost::{
    expand_filter_families, StrongClassifier, TrainConfig, TrainingLog, FILTER_RADII, REGION_SIZES,
};
use locboost_core::detect::DetectorSpec;
use locboost_core::eval::{aroc, build_roc, roc_csv, roc_svg, Criterion, GroundTruth, RocCurve, DEFAULT_U};
use locboost_core::grammar::GrammarVariant;
use locboost_core::pipeline::{
    run_grid_search, run_test, run_training, synth_generate, train_grid_models, Dataset, ExperimentReport,
    GridSearchConfig, NamedModel, SynthSpec,
};
use locboost_core::raster::{load_image, load_mask};

#[derive(Parser)]
#[command(
    name = "locboost",
    version,
    about = "Boosted pixel classifiers and object detectors for overhead imagery"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic dataset with images, masks and a manifest.
    Synth(SynthArgs),
    /// Train one pixel classifier on the train split.
    Train(TrainArgs),
    /// Train the grid's models and score every cell on the validation split.
    Gridsearch(GridArgs),
    /// Apply the selected configurations to the test split.
    Test(TestArgs),
    /// Run a model and detector over images and write detections.
    Detect(DetectArgs),
    /// Score a detection file against ground-truth masks.
    Eval(EvalArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    validation: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    /// Cars per image.
    #[arg(long)]
    objects: Option<usize>,
    #[arg(long)]
    buildings: Option<usize>,
    /// Parking rows per image.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    row_length: Option<usize>,
    #[arg(long)]
    occlusion: Option<f64>,
    /// Standard deviation of additive noise.
    #[arg(long)]
    noise: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    #[arg(long, default_value_t = 100)]
    pool_size: usize,
    /// full, haar, no-morph or no-haar.
    #[arg(long, default_value = "full")]
    variant: String,
    /// Post-filter families, e.g. N, R, ED, EDM, REDM.
    #[arg(long, default_value = "N")]
    filters: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep at most this many background pixels per image.
    #[arg(long)]
    background_cap: Option<usize>,
    /// Per-round log as CSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for models, report and timing.
    #[arg(long)]
    out: PathBuf,
    /// Flat `key = value` grid file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one grid key, e.g. `--set sigma_cc=1,2,3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the full sigma ranges instead of the coarse default grid.
    #[arg(long)]
    full_grid: bool,
    /// Add a ground-truth detector to check the evaluation harness.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory written by `gridsearch`.
    #[arg(long)]
    dir: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    model: PathBuf,
    /// Detector, e.g. `cc:2`, `llm:1.5:0`, `kde:1:2:0`.
    #[arg(long)]
    detector: String,
    /// Use only the first T rounds.
    #[arg(long)]
    iterations: Option<usize>,
    /// Detection CSV to write (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(required = true)]
    images: Vec<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// CSV with `image_id,x,y,confidence` rows.
    #[arg(long)]
    detections: PathBuf,
    /// Ground-truth masks; the file stem is the image id.
    #[arg(long, required = true, num_args = 1..)]
    masks: Vec<PathBuf>,
    /// cueing, tracking or counting; repeatable (default: all).
    #[arg(long)]
    metric: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_U)]
    u: f64,
    #[arg(long, default_value_t = locboost_core::eval::DEFAULT_TRACKING_RADIUS)]
    tracking_radius: f64,
    /// Directory for ROC CSV and SVG files.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        // core errors already embed their source in the message
        let mut msg = e.to_string();
        for cause in e.chain().skip(1) {
            let c = cause.to_string();
            if !msg.contains(&c) {
                msg = format!("{msg}: {c}");
            }
        }
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Gridsearch(a) => gridsearch(a),
        Command::Test(a) => test(a),
        Command::Detect(a) => detect(a),
        Command::Eval(a) => eval(a),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn synth(a: SynthArgs) -> Result<()> {
    let d = SynthSpec::default();
    let spec = SynthSpec {
        seed: a.seed.unwrap_or(d.seed),
        width: a.width.unwrap_or(d.width),
        height: a.height.unwrap_or(d.height),
        train: a.train.unwrap_or(d.train),
        validation: a.validation.unwrap_or(d.validation),
        test: a.test.unwrap_or(d.test),
        objects: a.objects.unwrap_or(d.objects),
        buildings: a.buildings.unwrap_or(d.buildings),
        rows: a.rows.unwrap_or(d.rows),
        row_length: a.row_length.unwrap_or(d.row_length),
        occlusion: a.occlusion.unwrap_or(d.occlusion),
        noise: a.noise.unwrap_or(d.noise),
        ..d
    };
    let manifest = synth_generate(&spec, &a.out)?;
    println!("wrote {} images to {}", manifest.entries.len(), a.out.display());
    Ok(())
}

fn round_log_csv(log: &TrainingLog) -> String {
    let mut s = String::from("round,r,alpha,z,loss,train_error\n");
    for (i, r) in log.rounds.iter().enumerate() {
        s += &format!(
            "{},{:?},{:?},{:?},{:?},{:?}\n",
            i + 1,
            r.r,
            r.alpha,
            r.z,
            r.loss,
            r.train_error
        );
    }
    s
}

fn train(a: TrainArgs) -> Result<()> {
    let dataset = Dataset::open(&a.manifest)?;
    let cfg = TrainConfig {
        iterations: a.iterations,
        pool_size: a.pool_size,
        variant: a.variant.parse::<GrammarVariant>()?,
        filters: expand_filter_families(&a.filters, &REGION_SIZES, &FILTER_RADII)?,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let (model, log) = run_training(&dataset, &cfg, a.background_cap)?;
    for (i, r) in log.rounds.iter().enumerate() {
        println!(
            "round {:>3}  r {:.6}  alpha {:.6}  Z {:.6}  error {:.6}",
            i + 1,
            r.r,
            r.alpha,
            r.z,
            r.train_error
        );
    }
    println!("stopped: {:?} after {} rounds", log.stop, model.rounds().len());
    write(&a.out, &model.to_json())?;
    if let Some(p) = &a.log {
        write(p, &round_log_csv(&log))?;
    }
    Ok(())
}

fn gridsearch(a: GridArgs) -> Result<()> {
    let mut grid = match &a.config {
        Some(p) => GridSearchConfig::load(p)?,
        None => GridSearchConfig::default(),
    };
    if a.full_grid {
        grid.set("full_grid", "true")?;
    }
    if let Some(s) = a.seed {
        grid.seed = s;
    }
    for o in &a.overrides {
        let (k, v) = o
            .split_once('=')
            .with_context(|| format!("--set {o}: expected KEY=VALUE"))?;
        grid.set(k.trim(), v.trim())?;
    }
    grid.validate()?;
    let dataset = Dataset::open(&a.manifest)?;
    let t0 = Instant::now();
    let trained = train_grid_models(&dataset, &grid)?;
    let train_seconds = t0.elapsed().as_secs_f64();
    let models_dir = a.out.join("models");
    let mut models = Vec::new();
    let mut files = Vec::new();
    for (m, log) in trained {
        let file = format!("models/{}.json", m.name);
        write(&a.out.join(&file), &m.model.to_json())?;
        write(&models_dir.join(format!("{}.log.csv", m.name)), &round_log_csv(&log))?;
        files.push(file);
        models.push(m);
    }
    let t1 = Instant::now();
    let mut report = run_grid_search(&dataset, &grid, &models, a.oracle)?;
    let grid_seconds = t1.elapsed().as_secs_f64();
    for (s, f) in report.models.iter_mut().zip(files) {
        s.file = Some(f);
    }
    write(&a.out.join("report.json"), &report.to_json())?;
    write(&a.out.join("grid.txt"), &grid.to_text())?;
    let timing = json!({ "train_seconds": train_seconds, "grid_seconds": grid_seconds });
    write(&a.out.join("timing.json"), &format!("{timing:#}\n"))?;
    for b in &report.best {
        println!(
            "best {:<9} {} T={} {} AROC {:.4}",
            b.metric, b.model, b.iterations, b.detector, b.aroc
        );
    }
    Ok(())
}

fn load_models(dir: &Path, report: &ExperimentReport) -> Result<Vec<NamedModel>> {
    report
        .models
        .iter()
        .map(|s| {
            let file = s
                .file
                .as_ref()
                .with_context(|| format!("report lists no file for model {}", s.name))?;
            Ok(NamedModel {
                name: s.name.clone(),
                filter_set: s.filter_set.clone(),
                model: StrongClassifier::load(dir.join(file))?,
            })
        })
        .collect()
}

fn test(a: TestArgs) -> Result<()> {
    let report_path = a.dir.join("report.json");
    let text = fs::read_to_string(&report_path).with_context(|| format!("reading {}", report_path.display()))?;
    let mut report = ExperimentReport::from_json(&text)?;
    let models = load_models(&a.dir, &report)?;
    let dataset = Dataset::open(&a.manifest)?;
    let t0 = Instant::now();
    let curves = run_test(&mut report, &dataset, &models)?;
    let test_seconds = t0.elapsed().as_secs_f64();
    for c in &curves {
        write(&a.dir.join(format!("roc_{}.csv", c.metric.name())), &roc_csv(&c.curve))?;
        println!(
            "test {:<9} {} {} AROC {:.4}",
            c.metric.name(),
            c.cell.model,
            c.cell.detector,
            aroc(&c.curve)
        );
    }
    let labeled: Vec<(&str, &RocCurve)> = curves.iter().map(|c| (c.metric.name(), &c.curve)).collect();
    write(&a.dir.join("roc.svg"), &roc_svg(&labeled))?;
    write(&report_path, &report.to_json())?;
    let timing_path = a.dir.join("timing.json");
    let mut timing: serde_json::Value = fs::read_to_string(&timing_path)
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_else(|| json!({}));
    timing["test_seconds"] = json!(test_seconds);
    write(&timing_path, &format!("{timing:#}\n"))?;
    Ok(())
}

fn detect(a: DetectArgs) -> Result<()> {
    let mut model = StrongClassifier::load(&a.model)?;
    if let Some(t) = a.iterations {
        if t == 0 || t > model.rounds().len() {
            bail!("--iterations must be in 1..={}", model.rounds().len());
        }
        model = model.truncated(t);
    }
    let detector: DetectorSpec = a.detector.parse()?;
    let mut rows = Vec::new();
    for path in &a.images {
        let img = load_image(path)?;
        let id = detections::image_id(path);
        for d in detector.detect(&model.predict(&img)?) {
            rows.push((id.clone(), d));
        }
    }
    let text = detections::to_csv(&rows);
    match &a.out {
        Some(p) => write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn eval(a: EvalArgs) -> Result<()> {
    let text = fs::read_to_string(&a.detections).with_context(|| format!("reading {}", a.detections.display()))?;
    let mut by_image = detections::parse_csv(&text)?;
    let mut gts = Vec::new();
    let mut dets = Vec::new();
    for p in &a.masks {
        gts.push(GroundTruth::new(load_mask(p)?));
        dets.push(by_image.remove(&detections::image_id(p)).unwrap_or_default());
    }
    if let Some(id) = by_image.keys().next() {
        bail!("detections for image {id:?} have no mask");
    }
    let names = if a.metric.is_empty() {
        Criterion::ALL.iter().map(|c| c.name().to_string()).collect()
    } else {
        a.metric.clone()
    };
    let mut curves = Vec::new();
    for name in &names {
        let metric = match name.parse::<Criterion>()? {
            Criterion::Tracking { .. } => Criterion::Tracking {
                radius: a.tracking_radius,
            },
            m => m,
        };
        let curve = build_roc(&dets, &gts, metric, a.u)?;
        println!("{:<9} AROC {:.6}", metric.name(), aroc(&curve));
        curves.push((metric.name(), curve));
    }
    if let Some(out) = &a.out {
        for (name, curve) in &curves {
            write(&out.join(format!("roc_{name}.csv")), &roc_csv(curve))?;
        }
        let labeled: Vec<(&str, &RocCurve)> = curves.iter().map(|(n, c)| (*n, c)).collect();
        write(&out.join("roc.svg"), &roc_svg(&labeled))?;
    }
    Ok(())
}
