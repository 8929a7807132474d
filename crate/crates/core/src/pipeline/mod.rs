//! Training, validation grid search and final test evaluation over a
//! dataset manifest.

mod config;
mod manifest;
mod synth;


use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::{train, StrongClassifier, TrainConfig, TrainingLog, TrainingSet};
use crate::detect::{Detection, DetectorSpec};
use crate::eval::{aroc, build_roc, Criterion, GroundTruth, RocCurve};
use crate::{ConfidenceImage, Error, Label, Result};

pub use config::{GridSearchConfig, FILTER_SETS, ITERATION_CHOICES};
pub use manifest::{Dataset, DatasetManifest, ManifestEntry, Sample, Split};
pub use synth::{render_dataset, render_scene, synth_generate, PlacedCar, Scene, SynthSpec};

pub const REPORT_FORMAT: &str = "locboost-report";
pub const REPORT_VERSION: u32 = 1;
/// Name of the ground-truth detector used to check the evaluation harness.
pub const ORACLE: &str = "oracle";

/// Loads the training split into a training set.
pub fn training_set(dataset: &Dataset, background_cap: Option<usize>, seed: u64) -> Result<TrainingSet> {
    let samples = dataset.load(Split::Train)?;
    if samples.is_empty() {
        return Err(Error::Manifest("the train split is empty".into()));
    }
    let pairs = samples.into_iter().map(|s| (s.image, s.mask)).collect();
    match background_cap {
        Some(cap) => TrainingSet::with_background_cap(pairs, cap, &mut ChaCha8Rng::seed_from_u64(seed)),
        None => TrainingSet::new(pairs),
    }
}

/// Trains one model on the training split.
pub fn run_training(
    dataset: &Dataset,
    cfg: &TrainConfig,
    background_cap: Option<usize>,
) -> Result<(StrongClassifier, TrainingLog)> {
    let ts = training_set(dataset, background_cap, cfg.seed)?;
    train(&ts, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedModel {
    pub name: String,
    pub filter_set: String,
    pub model: StrongClassifier,
}

/// One model per (variant, filter set), trained for the largest `T`.
pub fn train_grid_models(dataset: &Dataset, grid: &GridSearchConfig) -> Result<Vec<(NamedModel, TrainingLog)>> {
    grid.validate()?;
    let ts = training_set(dataset, grid.background_cap, grid.seed)?;
    let mut out = Vec::new();
    for &variant in &grid.variants {
        for set in &grid.filter_sets {
            let cfg = TrainConfig {
                iterations: grid.max_iterations(),
                pool_size: grid.pool_size,
                variant,
                filters: grid.filters_for(set)?,
                max_depth: grid.max_depth,
                max_thresholds: grid.max_thresholds,
                seed: grid.seed,
            };
            let name = format!("{variant}-{set}");
            log::info!("training {name}");
            let (model, log) = train(&ts, &cfg)?;
            out.push((
                NamedModel {
                    name,
                    filter_set: set.clone(),
                    model,
                },
                log,
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub name: String,
    pub variant: String,
    pub filter_set: String,
    pub seed: u64,
    pub pool_size: usize,
    pub rounds: usize,
    /// Model file relative to the report, when saved.
    pub file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub model: String,
    pub iterations: usize,
    pub detector: String,
    pub params: Vec<f64>,
    pub metric: String,
    pub aroc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub metric: String,
    pub model: String,
    pub iterations: usize,
    pub detector: String,
    pub aroc: f64,
    /// `(fp_per_image, tp_rate)` along the sweep.
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    /// Grid configuration in its flat text form.
    pub config: String,
    pub models: Vec<ModelSummary>,
    pub cells: Vec<CellResult>,
    /// Best validation cell per metric.
    pub best: Vec<CellResult>,
    pub test: Vec<TestResult>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: ExperimentReport = serde_json::from_str(text).map_err(|e| Error::Config(format!("report: {e}")))?;
        if r.format != REPORT_FORMAT || r.version != REPORT_VERSION {
            return Err(Error::Config(format!("unsupported report {} v{}", r.format, r.version)));
        }
        Ok(r)
    }

    pub fn grid(&self) -> Result<GridSearchConfig> {
        GridSearchConfig::parse(&self.config)
    }

    pub fn best_for(&self, metric: &str) -> Option<&CellResult> {
        self.best.iter().find(|c| c.metric == metric)
    }
}

/// Emits, for each object, its pixel nearest the object's centroid.
pub fn oracle_detections(gt: &GroundTruth) -> Vec<Detection> {
    let mask = gt.mask();
    let w = mask.width();
    gt.objects()
        .iter()
        .map(|o| {
            let (cx, cy) = o.centroid;
            let mut best = (f64::INFINITY, cx, cy);
            for (p, &l) in mask.labels().iter().enumerate() {
                if l != Label::Object {
                    continue;
                }
                let (x, y) = ((p % w) as f64, (p / w) as f64);
                let d = (x - cx).hypot(y - cy);
                if d < best.0 {
                    best = (d, x, y);
                }
            }
            Detection {
                x: best.1,
                y: best.2,
                confidence: 1.0,
            }
        })
        .collect()
}

fn summarize(models: &[NamedModel]) -> Vec<ModelSummary> {
    models
        .iter()
        .map(|m| ModelSummary {
            name: m.name.clone(),
            variant: m.model.meta().variant.to_string(),
            filter_set: m.filter_set.clone(),
            seed: m.model.meta().seed,
            pool_size: m.model.meta().pool_size,
            rounds: m.model.rounds().len(),
            file: None,
        })
        .collect()
}

fn score(dets: &[Vec<Detection>], gts: &[GroundTruth], metric: Criterion, u: f64) -> Result<(f64, RocCurve)> {
    let curve = build_roc(dets, gts, metric, u)?;
    Ok((aroc(&curve), curve))
}

/// Whether `a` beats `b`: higher AROC, then the smaller parameter vector.
fn better(a: &CellResult, b: &CellResult) -> bool {
    if a.aroc != b.aroc {
        return a.aroc > b.aroc;
    }
    a.params.partial_cmp(&b.params) == Some(std::cmp::Ordering::Less)
}

/// Evaluates every (model, T, detector, metric) cell on the validation split
/// and picks the best cell per metric. With `oracle`, a ground-truth
/// detector competes as an extra model.
pub fn run_grid_search(
    dataset: &Dataset,
    grid: &GridSearchConfig,
    models: &[NamedModel],
    oracle: bool,
) -> Result<ExperimentReport> {
    grid.validate()?;
    let val = dataset.load(Split::Validation)?;
    if val.is_empty() {
        return Err(Error::Manifest("the validation split is empty".into()));
    }
    let gts: Vec<GroundTruth> = val.iter().map(|s| GroundTruth::new(s.mask.clone())).collect();
    let metrics = grid.criteria();
    let detectors = grid.detectors();
    let mut cells = Vec::new();
    for m in models {
        let prefixes: Vec<Vec<ConfidenceImage>> = val
            .par_iter()
            .map(|s| m.model.predict_prefixes(&s.image))
            .collect::<Result<_>>()?;
        let mut seen_rounds = Vec::new();
        for &t in &grid.iterations {
            let rounds = t.min(m.model.rounds().len());
            if seen_rounds.contains(&rounds) {
                // early stopping left fewer rounds; the cells would repeat
                continue;
            }
            seen_rounds.push(rounds);
            let confs: Vec<&ConfidenceImage> = prefixes.iter().map(|p| &p[rounds - 1]).collect();
            let per_detector: Vec<Vec<CellResult>> = detectors
                .par_iter()
                .map(|d| {
                    let dets: Vec<Vec<Detection>> = confs.iter().map(|c| d.detect(c)).collect();
                    metrics
                        .iter()
                        .map(|&metric| {
                            Ok(CellResult {
                                model: m.name.clone(),
                                iterations: rounds,
                                detector: d.to_string(),
                                params: d.params(),
                                metric: metric.name().into(),
                                aroc: score(&dets, &gts, metric, grid.u)?.0,
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?;
            cells.extend(per_detector.into_iter().flatten());
        }
    }
    if oracle {
        let dets: Vec<Vec<Detection>> = gts.iter().map(oracle_detections).collect();
        for &metric in &metrics {
            cells.push(CellResult {
                model: ORACLE.into(),
                iterations: 0,
                detector: ORACLE.into(),
                params: Vec::new(),
                metric: metric.name().into(),
                aroc: score(&dets, &gts, metric, grid.u)?.0,
            });
        }
    }
    let mut best: Vec<CellResult> = Vec::new();
    for metric in &metrics {
        let pick = cells
            .iter()
            .filter(|c| c.metric == metric.name())
            .fold(None::<&CellResult>, |acc, c| match acc {
                Some(b) if !better(c, b) => Some(b),
                _ => Some(c),
            });
        if let Some(c) = pick {
            best.push(c.clone());
        }
    }
    Ok(ExperimentReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        seed: grid.seed,
        config: grid.to_text(),
        models: summarize(models),
        cells,
        best,
        test: Vec::new(),
    })
}

/// Final curves of one metric on the test split.
#[derive(Debug, Clone)]
pub struct TestCurve {
    pub metric: Criterion,
    pub cell: CellResult,
    pub curve: RocCurve,
}

/// Applies each metric's best validated configuration to the test split,
/// which is read here and nowhere else, and records the results.
pub fn run_test(report: &mut ExperimentReport, dataset: &Dataset, models: &[NamedModel]) -> Result<Vec<TestCurve>> {
    dataset.manifest().check_disjoint()?;
    if report.best.is_empty() {
        return Err(Error::Config("report has no selected configuration".into()));
    }
    let grid = report.grid()?;
    dataset.unlock_test();
    let test = dataset.load(Split::Test)?;
    if test.is_empty() {
        return Err(Error::Manifest("the test split is empty".into()));
    }
    let gts: Vec<GroundTruth> = test.iter().map(|s| GroundTruth::new(s.mask.clone())).collect();
    let mut curves = Vec::new();
    for cell in &report.best {
        let metric = grid
            .criteria()
            .into_iter()
            .find(|m| m.name() == cell.metric)
            .ok_or_else(|| Error::Config(format!("metric {} not in the grid", cell.metric)))?;
        let dets: Vec<Vec<Detection>> = if cell.model == ORACLE {
            gts.iter().map(oracle_detections).collect()
        } else {
            let named = models
                .iter()
                .find(|m| m.name == cell.model)
                .ok_or_else(|| Error::Config(format!("model {} was not provided", cell.model)))?;
            let model = named.model.truncated(cell.iterations);
            let detector: DetectorSpec = cell.detector.parse()?;
            test.par_iter()
                .map(|s| Ok(detector.detect(&model.predict(&s.image)?)))
                .collect::<Result<_>>()?
        };
        let (_, curve) = score(&dets, &gts, metric, grid.u)?;
        curves.push(TestCurve {
            metric,
            cell: cell.clone(),
            curve,
        });
    }
    report.test = curves
        .iter()
        .map(|t| TestResult {
            metric: t.cell.metric.clone(),
            model: t.cell.model.clone(),
            iterations: t.cell.iterations,
            detector: t.cell.detector.clone(),
            aroc: aroc(&t.curve),
            points: t.curve.points.iter().map(|p| [p.fp_per_image, p.tp_rate]).collect(),
        })
        .collect();
    Ok(curves)
}

/// Everything produced by a full train, validate and test run.
#[derive(Debug)]
pub struct Experiment {
    pub models: Vec<NamedModel>,
    pub logs: Vec<TrainingLog>,
    pub report: ExperimentReport,
    pub test_curves: Vec<TestCurve>,
}

pub fn run_experiment(dataset: &Dataset, grid: &GridSearchConfig) -> Result<Experiment> {
    let trained = train_grid_models(dataset, grid)?;
    let (models, logs): (Vec<_>, Vec<_>) = trained.into_iter().unzip();
    let mut report = run_grid_search(dataset, grid, &models, false)?;
    let test_curves = run_test(&mut report, dataset, &models)?;
    Ok(Experiment {
        models,
        logs,
        report,
        test_curves,
    })
}
