//! Trained ensembles and their JSON representation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::postfilter::PostFilterSpec;
use super::weak::{Polarity, WeakHypothesis};
use crate::grammar::{parse_program, serialize_program, GrammarVariant};
use crate::{ConfidenceImage, Error, GreyImage, Result};

pub const MODEL_FORMAT: &str = "locboost-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub hypothesis: WeakHypothesis,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub variant: GrammarVariant,
    pub seed: u64,
    /// Requested number of rounds; early stopping may leave fewer.
    pub iterations: usize,
    pub pool_size: usize,
    pub filters: Vec<PostFilterSpec>,
}

/// Immutable boosted pixel classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongClassifier {
    rounds: Vec<Round>,
    meta: ModelMeta,
}

impl StrongClassifier {
    pub fn new(rounds: Vec<Round>, meta: ModelMeta) -> Result<Self> {
        if rounds.is_empty() {
            return Err(Error::Model("model has no rounds".into()));
        }
        for (i, r) in rounds.iter().enumerate() {
            if !(r.alpha.is_finite() && r.alpha > 0.0) {
                return Err(Error::Model(format!(
                    "round {i}: alpha {} must be finite and positive",
                    r.alpha
                )));
            }
            if !r.hypothesis.threshold.is_finite() {
                return Err(Error::Model(format!("round {i}: non-finite threshold")));
            }
            r.hypothesis.filter.validate()?;
            r.hypothesis.program.validate()?;
        }
        Ok(StrongClassifier { rounds, meta })
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn alpha_sum(&self) -> f64 {
        self.rounds.iter().map(|r| r.alpha).sum()
    }

    /// The first `t` rounds, as a model trained for `t` iterations would be.
    pub fn truncated(&self, t: usize) -> StrongClassifier {
        let t = t.clamp(1, self.rounds.len());
        let mut meta = self.meta.clone();
        meta.iterations = meta.iterations.min(t);
        StrongClassifier {
            rounds: self.rounds[..t].to_vec(),
            meta,
        }
    }

    pub fn predict(&self, img: &GreyImage) -> Result<ConfidenceImage> {
        let mut acc = vec![0.0; img.len()];
        for r in &self.rounds {
            let h = r.hypothesis.predict(img)?;
            for (a, &v) in acc.iter_mut().zip(&h) {
                *a += r.alpha * v as f64;
            }
        }
        GreyImage::new(img.width(), img.height(), acc)
    }

    /// Confidence images of every prefix `1..=len`, sharing the per-round work.
    pub fn predict_prefixes(&self, img: &GreyImage) -> Result<Vec<ConfidenceImage>> {
        let mut acc = vec![0.0; img.len()];
        let mut out = Vec::with_capacity(self.rounds.len());
        for r in &self.rounds {
            let h = r.hypothesis.predict(img)?;
            for (a, &v) in acc.iter_mut().zip(&h) {
                *a += r.alpha * v as f64;
            }
            out.push(GreyImage::new(img.width(), img.height(), acc.clone())?);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDoc {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            variant: self.meta.variant.to_string(),
            seed: self.meta.seed,
            iterations: self.meta.iterations,
            pool_size: self.meta.pool_size,
            filters: self.meta.filters.clone(),
            rounds: self
                .rounds
                .iter()
                .map(|r| RoundDoc {
                    program: serialize_program(&r.hypothesis.program),
                    threshold: r.hypothesis.threshold,
                    polarity: r.hypothesis.polarity,
                    filter: r.hypothesis.filter,
                    alpha: r.alpha,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unexpected format {:?}", doc.format)));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::Model(format!("unsupported version {}", doc.version)));
        }
        let variant = doc.variant.parse().map_err(|e: Error| Error::Model(e.to_string()))?;
        let rounds = doc
            .rounds
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let program = parse_program(&r.program).map_err(|e| Error::Model(format!("round {i}: {e}")))?;
                Ok(Round {
                    hypothesis: WeakHypothesis {
                        program,
                        threshold: r.threshold,
                        polarity: r.polarity,
                        filter: r.filter,
                    },
                    alpha: r.alpha,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let meta = ModelMeta {
            variant,
            seed: doc.seed,
            iterations: doc.iterations,
            pool_size: doc.pool_size,
            filters: doc.filters,
        };
        StrongClassifier::new(rounds, meta)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    version: u32,
    variant: String,
    seed: u64,
    iterations: usize,
    pool_size: usize,
    filters: Vec<PostFilterSpec>,
    rounds: Vec<RoundDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoundDoc {
    program: String,
    threshold: f64,
    polarity: Polarity,
    filter: PostFilterSpec,
    alpha: f64,
}
