//! Modes of a confidence-weighted Gaussian KDE over local maxima.

use super::{llm_detect, sort_by_confidence, Detection};
use crate::ConfidenceImage;

/// Mean-shift stops once a step moves less than this many pixels.
pub const SHIFT_TOLERANCE: f64 = 1e-3;
pub const MAX_SHIFT_ITERATIONS: usize = 100;
/// Converged points closer than this are one mode.
pub const MERGE_DISTANCE: f64 = 0.5;

/// `sum_i w_i exp(-|x - p_i|^2 / (2 sigma^2))`.
pub fn kde_value(points: &[(f64, f64)], weights: &[f64], x: f64, y: f64, sigma: f64) -> f64 {
    let inv = 1.0 / (2.0 * sigma * sigma);
    points
        .iter()
        .zip(weights)
        .map(|(&(px, py), &w)| w * (-((x - px).powi(2) + (y - py).powi(2)) * inv).exp())
        .sum()
}

/// Every position visited by one mean-shift run, start included.
#[derive(Debug, Clone)]
pub struct MeanShiftTrace {
    pub path: Vec<(f64, f64)>,
}

impl MeanShiftTrace {
    pub fn end(&self) -> (f64, f64) {
        *self.path.last().expect("path starts with the seed")
    }
}

/// Weighted Gaussian mean-shift from `start`.
pub fn mean_shift(points: &[(f64, f64)], weights: &[f64], start: (f64, f64), sigma: f64) -> MeanShiftTrace {
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut path = vec![start];
    let (mut x, mut y) = start;
    for _ in 0..MAX_SHIFT_ITERATIONS {
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        for (&(px, py), &w) in points.iter().zip(weights) {
            let k = w * (-((x - px).powi(2) + (y - py).powi(2)) * inv).exp();
            sx += k * px;
            sy += k * py;
            sw += k;
        }
        if sw <= 0.0 {
            break;
        }
        let (nx, ny) = (sx / sw, sy / sw);
        let step = (nx - x).hypot(ny - y);
        x = nx;
        y = ny;
        path.push((x, y));
        if step < SHIFT_TOLERANCE {
            break;
        }
    }
    MeanShiftTrace { path }
}

/// Mean-shift from every positive LLM maximum; converged points within
/// [`MERGE_DISTANCE`] of an earlier mode join it. A mode's confidence is
/// the KDE value at its location.
pub fn kde_detect(conf: &ConfidenceImage, sigma_llm: f64, sigma_kde: f64, threshold: f64) -> Vec<Detection> {
    let maxima: Vec<Detection> = llm_detect(conf, sigma_llm, threshold)
        .into_iter()
        .filter(|d| d.confidence > 0.0)
        .collect();
    let points: Vec<(f64, f64)> = maxima.iter().map(|d| (d.x, d.y)).collect();
    let weights: Vec<f64> = maxima.iter().map(|d| d.confidence).collect();
    let mut modes: Vec<(f64, f64)> = Vec::new();
    for &p in &points {
        let end = mean_shift(&points, &weights, p, sigma_kde).end();
        if !modes.iter().any(|m| (m.0 - end.0).hypot(m.1 - end.1) < MERGE_DISTANCE) {
            modes.push(end);
        }
    }
    let (w, h) = (conf.width() as f64 - 1.0, conf.height() as f64 - 1.0);
    let mut dets: Vec<Detection> = modes
        .into_iter()
        .map(|(x, y)| Detection {
            x: x.clamp(0.0, w),
            y: y.clamp(0.0, h),
            confidence: kde_value(&points, &weights, x, y, sigma_kde),
        })
        .collect();
    sort_by_confidence(&mut dets);
    dets
}
