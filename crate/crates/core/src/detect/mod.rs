//! Confidence image to ranked `(x, y)` detections.

mod kde;


use std::fmt;
use std::str::FromStr;

use crate::components::{label_components, Connectivity};
use crate::ops::{dilate, gaussian_smooth};
use crate::{ConfidenceImage, Error, GreyImage, Result, StructuringElement};

pub use kde::{
    kde_detect, kde_value, mean_shift, MeanShiftTrace, MAX_SHIFT_ITERATIONS, MERGE_DISTANCE, SHIFT_TOLERANCE,
};

/// Upper bound (exclusive) of the CC and LLM smoothing widths.
pub const SIGMA_MAX: f64 = 20.0;
/// Upper bound (exclusive) of the KDE bandwidth.
pub const SIGMA_KDE_MAX: f64 = 10.0;

/// A detected location in pixel coordinates; pixel centers are integers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorSpec {
    Cc {
        sigma: f64,
    },
    Llm {
        sigma: f64,
        threshold: f64,
    },
    Kde {
        sigma_llm: f64,
        sigma_kde: f64,
        threshold: f64,
    },
}

impl DetectorSpec {
    pub fn kind(&self) -> DetectorKind {
        match self {
            DetectorSpec::Cc { .. } => DetectorKind::Cc,
            DetectorSpec::Llm { .. } => DetectorKind::Llm,
            DetectorSpec::Kde { .. } => DetectorKind::Kde,
        }
    }

    /// Parameters in a fixed order, used for tie-breaking.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            DetectorSpec::Cc { sigma } => vec![sigma],
            DetectorSpec::Llm { sigma, threshold } => vec![sigma, threshold],
            DetectorSpec::Kde {
                sigma_llm,
                sigma_kde,
                threshold,
            } => vec![sigma_llm, sigma_kde, threshold],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("{what} out of range in {self}")));
        match *self {
            DetectorSpec::Cc { sigma } if !(sigma > 0.0 && sigma < SIGMA_MAX) => bad("sigma_cc"),
            DetectorSpec::Llm { sigma, threshold }
            | DetectorSpec::Kde {
                sigma_llm: sigma,
                threshold,
                ..
            } if !(0.0..SIGMA_MAX).contains(&sigma) || !threshold.is_finite() => bad("sigma_llm or threshold"),
            DetectorSpec::Kde { sigma_kde, .. } if !(sigma_kde > 0.0 && sigma_kde < SIGMA_KDE_MAX) => bad("sigma_kde"),
            _ => Ok(()),
        }
    }

    pub fn detect(&self, conf: &ConfidenceImage) -> Vec<Detection> {
        match *self {
            DetectorSpec::Cc { sigma } => cc_detect(conf, sigma),
            DetectorSpec::Llm { sigma, threshold } => llm_detect(conf, sigma, threshold),
            DetectorSpec::Kde {
                sigma_llm,
                sigma_kde,
                threshold,
            } => kde_detect(conf, sigma_llm, sigma_kde, threshold),
        }
    }
}

impl fmt::Display for DetectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DetectorSpec::Cc { sigma } => write!(f, "cc:{sigma:?}"),
            DetectorSpec::Llm { sigma, threshold } => write!(f, "llm:{sigma:?}:{threshold:?}"),
            DetectorSpec::Kde {
                sigma_llm,
                sigma_kde,
                threshold,
            } => write!(f, "kde:{sigma_llm:?}:{sigma_kde:?}:{threshold:?}"),
        }
    }
}

impl FromStr for DetectorSpec {
    type Err = Error;

    /// `cc:S`, `llm:S[:T]` or `kde:S_LLM:S_KDE[:T]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad detector spec {s:?}"));
        let mut parts = s.trim().split(':');
        let kind = parts.next().ok_or_else(bad)?;
        let nums: Vec<f64> = parts
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let spec = match (kind.to_ascii_lowercase().as_str(), nums.as_slice()) {
            ("cc", &[sigma]) => DetectorSpec::Cc { sigma },
            ("llm", &[sigma]) => DetectorSpec::Llm { sigma, threshold: 0.0 },
            ("llm", &[sigma, threshold]) => DetectorSpec::Llm { sigma, threshold },
            ("kde", &[sigma_llm, sigma_kde]) => DetectorSpec::Kde {
                sigma_llm,
                sigma_kde,
                threshold: 0.0,
            },
            ("kde", &[sigma_llm, sigma_kde, threshold]) => DetectorSpec::Kde {
                sigma_llm,
                sigma_kde,
                threshold,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    Cc,
    Llm,
    Kde,
}

impl DetectorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::Cc => "cc",
            DetectorKind::Llm => "llm",
            DetectorKind::Kde => "kde",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn sort_by_confidence(dets: &mut [Detection]) {
    dets.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
}

/// Thresholds at zero, dilates with a disk of radius `round(sigma)` and
/// reports each 8-connected component at its centroid, scored by the
/// largest confidence inside it.
pub fn cc_detect(conf: &ConfidenceImage, sigma: f64) -> Vec<Detection> {
    let (w, h) = (conf.width(), conf.height());
    let radius = sigma.round().max(0.0) as usize;
    let binary = conf.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let grown = if radius > 0 {
        dilate(&binary, &StructuringElement::disk(radius))
    } else {
        binary
    };
    let mask: Vec<bool> = grown.data().iter().map(|&v| v > 0.0).collect();
    let comps = label_components(&mask, w, h, Connectivity::Eight);
    let mut sx = vec![0.0; comps.count];
    let mut sy = vec![0.0; comps.count];
    let mut best = vec![f64::NEG_INFINITY; comps.count];
    for (p, &l) in comps.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let c = l as usize - 1;
        sx[c] += (p % w) as f64;
        sy[c] += (p / w) as f64;
        best[c] = best[c].max(conf.data()[p]);
    }
    let mut dets: Vec<Detection> = (0..comps.count)
        .map(|c| {
            let n = comps.sizes[c] as f64;
            Detection {
                x: sx[c] / n,
                y: sy[c] / n,
                confidence: best[c],
            }
        })
        .collect();
    sort_by_confidence(&mut dets);
    dets
}

/// Pixels strictly greater than every in-bounds 8-neighbour.
pub fn strict_local_maxima(img: &GreyImage) -> Vec<(usize, usize)> {
    let (w, h) = (img.width() as isize, img.height() as isize);
    let d = img.data();
    let mut out = Vec::new();
    for y in 0..h {
        'pixel: for x in 0..w {
            let v = d[(y * w + x) as usize];
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if (dx, dy) == (0, 0) || nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    if d[(ny * w + nx) as usize] >= v {
                        continue 'pixel;
                    }
                }
            }
            out.push((x as usize, y as usize));
        }
    }
    out
}

/// Strict local maxima of the confidence image, smoothed first when
/// `sigma > 0`, whose smoothed value exceeds `threshold`.
pub fn llm_detect(conf: &ConfidenceImage, sigma: f64, threshold: f64) -> Vec<Detection> {
    let smoothed;
    let img = if sigma > 0.0 {
        smoothed = gaussian_smooth(conf, sigma);
        &smoothed
    } else {
        conf
    };
    let mut dets: Vec<Detection> = strict_local_maxima(img)
        .into_iter()
        .map(|(x, y)| Detection {
            x: x as f64,
            y: y as f64,
            confidence: img.get(x, y),
        })
        .filter(|d| d.confidence > threshold)
        .collect();
    sort_by_confidence(&mut dets);
    dets
}
