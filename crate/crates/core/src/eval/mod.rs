//! Detection matching, ROC curves truncated at `U` false positives per
//! image, and normalized area under them.

mod plot;

#[cfg(test)]
mod tests;

use std::fmt;
use std::str::FromStr;

use crate::components::{label_components, Connectivity};
use crate::detect::Detection;
use crate::{Error, Label, LabelMask, Result};

pub use plot::{roc_csv, roc_svg};

/// Default truncation of the false-positive axis, per image.
pub const DEFAULT_U: f64 = 30.0;
/// Default nearest-neighbour radius of the tracking criterion, in pixels.
pub const DEFAULT_TRACKING_RADIUS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub centroid: (f64, f64),
    pub area: usize,
}

/// Labeled mask with its object instances (8-connected object pixels).
#[derive(Debug, Clone)]
pub struct GroundTruth {
    mask: LabelMask,
    instance_of: Vec<u32>,
    objects: Vec<ObjectInstance>,
}

impl GroundTruth {
    pub fn new(mask: LabelMask) -> Self {
        let (w, h) = (mask.width(), mask.height());
        let object: Vec<bool> = mask.labels().iter().map(|&l| l == Label::Object).collect();
        let comps = label_components(&object, w, h, Connectivity::Eight);
        let mut sums = vec![(0.0, 0.0); comps.count];
        for (p, &l) in comps.labels.iter().enumerate() {
            if l > 0 {
                let s = &mut sums[l as usize - 1];
                s.0 += (p % w) as f64;
                s.1 += (p / w) as f64;
            }
        }
        let objects = sums
            .iter()
            .zip(&comps.sizes)
            .map(|(&(sx, sy), &n)| ObjectInstance {
                centroid: (sx / n as f64, sy / n as f64),
                area: n,
            })
            .collect();
        GroundTruth {
            mask,
            instance_of: comps.labels,
            objects,
        }
    }

    pub fn mask(&self) -> &LabelMask {
        &self.mask
    }

    pub fn objects(&self) -> &[ObjectInstance] {
        &self.objects
    }

    pub fn centroids(&self) -> Vec<(f64, f64)> {
        self.objects.iter().map(|o| o.centroid).collect()
    }

    pub fn diagonal(&self) -> f64 {
        (self.mask.width() as f64).hypot(self.mask.height() as f64)
    }

    /// Label and instance index (1-based, 0 if none) under a detection's
    /// rounded pixel, or `None` outside the image.
    fn hit(&self, d: &Detection) -> Option<(Label, u32)> {
        let (x, y) = (d.x.round(), d.y.round());
        if !(x >= 0.0 && y >= 0.0 && x < self.mask.width() as f64 && y < self.mask.height() as f64) {
            return None;
        }
        let p = y as usize * self.mask.width() + x as usize;
        Some((self.mask.labels()[p], self.instance_of[p]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl std::ops::AddAssign for MatchCounts {
    fn add_assign(&mut self, o: MatchCounts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

/// An object is found if any detection's rounded pixel lies on it; extra
/// hits are free, hits on background are false positives and hits on
/// confusers are ignored.
pub fn match_cueing(dets: &[Detection], gt: &GroundTruth) -> MatchCounts {
    let mut found = vec![false; gt.objects.len()];
    let mut fp = 0;
    for d in dets {
        match gt.hit(d) {
            Some((Label::Object, id)) => found[id as usize - 1] = true,
            Some((Label::Background, _)) | None => fp += 1,
            Some((Label::Confuser, _)) => {}
        }
    }
    let tp = found.iter().filter(|&&f| f).count();
    MatchCounts {
        tp,
        fp,
        fn_: found.len() - tp,
    }
}

/// Greedy closest-pair matching within `radius`. Equal distances go to the
/// lower detection index, then the lower object index.
pub fn match_nn(dets: &[(f64, f64)], objects: &[(f64, f64)], radius: f64) -> MatchCounts {
    let mut pairs = Vec::new();
    for (i, d) in dets.iter().enumerate() {
        for (j, o) in objects.iter().enumerate() {
            let dist = (d.0 - o.0).hypot(d.1 - o.1);
            if dist <= radius {
                pairs.push((dist, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut det_used = vec![false; dets.len()];
    let mut obj_used = vec![false; objects.len()];
    let mut tp = 0;
    for (_, i, j) in pairs {
        if !det_used[i] && !obj_used[j] {
            det_used[i] = true;
            obj_used[j] = true;
            tp += 1;
        }
    }
    MatchCounts {
        tp,
        fp: dets.len() - tp,
        fn_: objects.len() - tp,
    }
}

/// Nearest-neighbour matching with a radius that never binds inside the image.
pub fn match_counting(dets: &[(f64, f64)], objects: &[(f64, f64)], r_large: f64) -> MatchCounts {
    match_nn(dets, objects, r_large)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    Cueing,
    Tracking { radius: f64 },
    Counting,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [
        Criterion::Cueing,
        Criterion::Tracking {
            radius: DEFAULT_TRACKING_RADIUS,
        },
        Criterion::Counting,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Cueing => "cueing",
            Criterion::Tracking { .. } => "tracking",
            Criterion::Counting => "counting",
        }
    }

    pub fn apply(&self, dets: &[Detection], gt: &GroundTruth) -> MatchCounts {
        let pts = || dets.iter().map(|d| (d.x, d.y)).collect::<Vec<_>>();
        match *self {
            Criterion::Cueing => match_cueing(dets, gt),
            Criterion::Tracking { radius } => match_nn(&pts(), &gt.centroids(), radius),
            Criterion::Counting => match_counting(&pts(), &gt.centroids(), gt.diagonal()),
        }
    }

    /// False positives can never drop below `retained - objects`.
    fn fp_at_least_surplus(&self) -> bool {
        !matches!(self, Criterion::Cueing)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cueing" => Ok(Criterion::Cueing),
            "tracking" => Ok(Criterion::Tracking {
                radius: DEFAULT_TRACKING_RADIUS,
            }),
            "counting" => Ok(Criterion::Counting),
            other => Err(Error::InvalidParameter(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Detections with confidence `>= threshold` are kept; the first point
    /// has an infinite threshold and keeps nothing.
    pub threshold: f64,
    pub fp_per_image: f64,
    pub tp_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub u: f64,
}

/// Sweeps every distinct confidence from high to low and records mean false
/// positives per image against the fraction of objects matched, dropping
/// points beyond `u`.
pub fn build_roc(dets: &[Vec<Detection>], gts: &[GroundTruth], criterion: Criterion, u: f64) -> Result<RocCurve> {
    if dets.len() != gts.len() {
        return Err(Error::InvalidParameter(format!(
            "{} detection lists for {} ground truths",
            dets.len(),
            gts.len()
        )));
    }
    if !(u > 0.0) {
        return Err(Error::InvalidParameter(format!("U must be positive, got {u}")));
    }
    let total_objects: usize = gts.iter().map(|g| g.objects.len()).sum();
    if total_objects == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let n_images = gts.len() as f64;
    let sorted: Vec<Vec<Detection>> = dets
        .iter()
        .map(|d| {
            let mut d = d.clone();
            d.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
            d
        })
        .collect();
    let mut events: Vec<(f64, usize)> = sorted
        .iter()
        .enumerate()
        .flat_map(|(i, d)| d.iter().map(move |det| (det.confidence, i)))
        .collect();
    events.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fp_per_image: 0.0,
        tp_rate: 0.0,
    }];
    let mut retained = vec![0usize; gts.len()];
    let mut counts = vec![MatchCounts::default(); gts.len()];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut total_retained = 0usize;
    let mut k = 0;
    while k < events.len() {
        let t = events[k].0;
        let mut touched = Vec::new();
        while k < events.len() && events[k].0 == t {
            let img = events[k].1;
            retained[img] += 1;
            total_retained += 1;
            if touched.last() != Some(&img) {
                touched.push(img);
            }
            k += 1;
        }
        for img in touched {
            let c = criterion.apply(&sorted[img][..retained[img]], &gts[img]);
            tp = tp + c.tp - counts[img].tp;
            fp = fp + c.fp - counts[img].fp;
            counts[img] = c;
        }
        let fpi = fp as f64 / n_images;
        if fpi <= u {
            points.push(RocPoint {
                threshold: t,
                fp_per_image: fpi,
                tp_rate: tp as f64 / total_objects as f64,
            });
        } else if !criterion.fp_at_least_surplus() {
            // cueing false positives only grow
            break;
        } else if total_retained.saturating_sub(total_objects) as f64 / n_images > u {
            break;
        }
    }
    Ok(RocCurve { points, u })
}

/// Trapezoidal area under the curve, extended flat to `U`, divided by `U`.
pub fn aroc(curve: &RocCurve) -> f64 {
    let u = curve.u;
    let mut area = 0.0;
    for p in curve.points.windows(2) {
        let (x0, x1) = (p[0].fp_per_image.min(u), p[1].fp_per_image.min(u));
        area += (x1 - x0) * (p[0].tp_rate + p[1].tp_rate) / 2.0;
    }
    if let Some(last) = curve.points.last() {
        area += (u - last.fp_per_image.min(u)) * last.tp_rate;
    }
    (area / u).clamp(0.0, 1.0)
}
