//! Confidence-rated AdaBoost over pixels.

mod model;
mod postfilter;
mod weak;


use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grammar::{Grammar, GrammarVariant, DEFAULT_MAX_DEPTH};
use crate::{ConfidenceImage, Error, GreyImage, Label, LabelMask, Result};

pub use model::{ModelMeta, Round, StrongClassifier, MODEL_FORMAT, MODEL_VERSION};
pub use postfilter::{apply_post_filter, expand_filter_families, PostFilterSpec, FILTER_RADII, REGION_SIZES};
pub use weak::{
    candidate_thresholds, fit_weak, fit_weak_pool, score_program, CandidateIndex, Polarity, ProgramScores, WeakFit,
    WeakHypothesis, MAX_THRESHOLDS, TIE_TOLERANCE,
};

/// One supervised pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Example {
    pub image: u32,
    pub pixel: u32,
}

/// Training images with their included pixels. Confuser pixels are never
/// included; examples are ordered by image, then raster position.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    images: Vec<GreyImage>,
    examples: Vec<Example>,
    labels: Vec<i8>,
}

impl TrainingSet {
    pub fn new(pairs: Vec<(GreyImage, LabelMask)>) -> Result<Self> {
        Self::build(pairs, None, &mut ChaCha8Rng::seed_from_u64(0))
    }

    /// Keeps at most `cap` uniformly chosen background pixels per image.
    pub fn with_background_cap<R: Rng + ?Sized>(
        pairs: Vec<(GreyImage, LabelMask)>,
        cap: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Self::build(pairs, Some(cap), rng)
    }

    fn build<R: Rng + ?Sized>(pairs: Vec<(GreyImage, LabelMask)>, cap: Option<usize>, rng: &mut R) -> Result<Self> {
        let mut images = Vec::with_capacity(pairs.len());
        let mut examples = Vec::new();
        let mut labels = Vec::new();
        for (ii, (img, mask)) in pairs.into_iter().enumerate() {
            if !mask.matches(&img) {
                return Err(Error::DimensionMismatch(
                    img.width(),
                    img.height(),
                    mask.width(),
                    mask.height(),
                ));
            }
            let background: Vec<u32> = (0..img.len() as u32)
                .filter(|&p| mask.labels()[p as usize] == Label::Background)
                .collect();
            let mut keep_bg = vec![true; background.len()];
            if let Some(cap) = cap.filter(|&c| c < background.len()) {
                keep_bg.iter_mut().for_each(|k| *k = false);
                for i in sample(rng, background.len(), cap) {
                    keep_bg[i] = true;
                }
            }
            let mut bg = 0;
            for (p, &label) in mask.labels().iter().enumerate() {
                let y = match label {
                    Label::Object => 1,
                    Label::Background => {
                        bg += 1;
                        if !keep_bg[bg - 1] {
                            continue;
                        }
                        -1
                    }
                    Label::Confuser => continue,
                };
                examples.push(Example {
                    image: ii as u32,
                    pixel: p as u32,
                });
                labels.push(y);
            }
            images.push(img);
        }
        Ok(TrainingSet {
            images,
            examples,
            labels,
        })
    }

    pub fn images(&self) -> &[GreyImage] {
        &self.images
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    /// `+1` for object pixels, `-1` for background.
    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&y| y > 0).count();
        (pos, self.labels.len() - pos)
    }

    /// Predictions of `h` at every example.
    pub fn predict_examples(&self, h: &WeakHypothesis) -> Result<Vec<i8>> {
        let mut out = Vec::with_capacity(self.len());
        let mut start = 0;
        for (ii, img) in self.images.iter().enumerate() {
            let end = start + self.examples[start..].partition_point(|e| e.image as usize == ii);
            if end > start {
                let pred = h.predict(img)?;
                out.extend(self.examples[start..end].iter().map(|e| pred[e.pixel as usize]));
            }
            start = end;
        }
        Ok(out)
    }
}

/// Boosting distribution over included pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Self {
        WeightVector(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Uniform within each class, half the mass on each class.
pub fn init_weights(ts: &TrainingSet) -> Result<WeightVector> {
    let (pos, neg) = ts.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::EmptyClass);
    }
    let (wp, wn) = (0.5 / pos as f64, 0.5 / neg as f64);
    Ok(WeightVector(
        ts.labels().iter().map(|&y| if y > 0 { wp } else { wn }).collect(),
    ))
}

/// Weighted edge `sum D(i) y_i h_i`.
pub fn edge(h: &[i8], y: &[i8], d: &WeightVector) -> f64 {
    h.iter()
        .zip(y)
        .zip(d.as_slice())
        .map(|((&h, &y), &d)| d * (h * y) as f64)
        .sum()
}

/// `1/2 ln((W+ + eps) / (W- + eps))` with `eps = 1/(2N)`. A result `<= 0`
/// means the hypothesis must be rejected.
pub fn compute_alpha(h: &[i8], y: &[i8], d: &WeightVector) -> f64 {
    let (mut wp, mut wm) = (0.0, 0.0);
    for ((&h, &y), &d) in h.iter().zip(y).zip(d.as_slice()) {
        match h * y {
            1 => wp += d,
            -1 => wm += d,
            _ => {}
        }
    }
    let eps = 1.0 / (2.0 * h.len().max(1) as f64);
    0.5 * ((wp + eps) / (wm + eps)).ln()
}

/// Reweights by `exp(-alpha y h)` and renormalizes. Returns the new weights
/// and the normalizer `Z`.
pub fn update_weights(d: &WeightVector, h: &[i8], y: &[i8], alpha: f64) -> (WeightVector, f64) {
    let raw: Vec<f64> = d
        .as_slice()
        .iter()
        .zip(h.iter().zip(y))
        .map(|(&d, (&h, &y))| d * (-alpha * (h * y) as f64).exp())
        .collect();
    let z: f64 = raw.iter().sum();
    (WeightVector(raw.into_iter().map(|v| v / z).collect()), z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub pool_size: usize,
    pub variant: GrammarVariant,
    pub filters: Vec<PostFilterSpec>,
    pub max_depth: usize,
    pub max_thresholds: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 10,
            pool_size: 100,
            variant: GrammarVariant::Full,
            filters: vec![PostFilterSpec::None],
            max_depth: DEFAULT_MAX_DEPTH,
            max_thresholds: MAX_THRESHOLDS,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.pool_size == 0 {
            return Err(Error::InvalidParameter(
                "iterations and pool size must be positive".into(),
            ));
        }
        if self.filters.is_empty() {
            return Err(Error::InvalidParameter("no post-filters given".into()));
        }
        if !(1..=u16::MAX as usize - 1).contains(&self.max_thresholds) {
            return Err(Error::InvalidParameter(format!(
                "threshold cap {}",
                self.max_thresholds
            )));
        }
        self.filters.iter().try_for_each(|f| f.validate())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    /// No candidate had a positive edge.
    NoPositiveEdge,
    /// The best candidate's smoothed alpha was not positive.
    NonPositiveAlpha,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub r: f64,
    pub alpha: f64,
    pub z: f64,
    /// Product of normalizers so far.
    pub loss: f64,
    /// Fraction of included pixels with `y F <= 0`.
    pub train_error: f64,
    /// Sum of the weights after the update.
    pub weight_sum: f64,
    pub pool_scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub rounds: Vec<RoundRecord>,
    pub stop: StopReason,
}

/// Runs up to `cfg.iterations` boosting rounds.
pub fn train(ts: &TrainingSet, cfg: &TrainConfig) -> Result<(StrongClassifier, TrainingLog)> {
    cfg.validate()?;
    let grammar = Grammar::new(cfg.variant);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut d = init_weights(ts)?;
    let y = ts.labels();
    let mut ensemble = vec![0.0; ts.len()];
    let mut rounds = Vec::new();
    let mut records = Vec::new();
    let mut loss = 1.0;
    let mut stop = StopReason::Completed;
    for t in 0..cfg.iterations {
        let fit = fit_weak(
            ts,
            &d,
            cfg.pool_size,
            &grammar,
            cfg.max_depth,
            &cfg.filters,
            cfg.max_thresholds,
            &mut rng,
        )?;
        let Some(fit) = fit.filter(|f| f.r > 0.0) else {
            stop = StopReason::NoPositiveEdge;
            break;
        };
        let h = ts.predict_examples(&fit.hypothesis)?;
        let r = edge(&h, y, &d);
        if (r - fit.r).abs() > 1e-9 {
            log::warn!("round {t}: direct edge {r} differs from search edge {}", fit.r);
        }
        let alpha = compute_alpha(&h, y, &d);
        if !(alpha > 0.0 && alpha.is_finite()) {
            stop = StopReason::NonPositiveAlpha;
            break;
        }
        let (next, z) = update_weights(&d, &h, y, alpha);
        d = next;
        loss *= z;
        for (f, &hv) in ensemble.iter_mut().zip(&h) {
            *f += alpha * hv as f64;
        }
        let wrong = ensemble.iter().zip(y).filter(|(&f, &y)| f * y as f64 <= 0.0).count();
        let record = RoundRecord {
            r,
            alpha,
            z,
            loss,
            train_error: wrong as f64 / ts.len() as f64,
            weight_sum: d.sum(),
            pool_scores: fit.pool_scores,
        };
        log::info!(
            "round {:>3}: r={:.4} alpha={:.4} Z={:.4} loss={:.4} err={:.4} filter={}",
            t + 1,
            record.r,
            record.alpha,
            record.z,
            record.loss,
            record.train_error,
            fit.hypothesis.filter
        );
        records.push(record);
        rounds.push(Round {
            hypothesis: fit.hypothesis,
            alpha,
        });
    }
    if rounds.is_empty() {
        return Err(Error::NoLearnableStructure);
    }
    let meta = ModelMeta {
        variant: cfg.variant,
        seed: cfg.seed,
        iterations: cfg.iterations,
        pool_size: cfg.pool_size,
        filters: cfg.filters.clone(),
    };
    Ok((
        StrongClassifier::new(rounds, meta)?,
        TrainingLog { rounds: records, stop },
    ))
}

/// `sum_t alpha_t h_t` at every pixel.
pub fn predict_confidence(model: &StrongClassifier, img: &GreyImage) -> Result<ConfidenceImage> {
    model.predict(img)
}
