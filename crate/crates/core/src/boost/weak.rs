//! Weak hypotheses and the per-round search over programs, post-filters,
//! polarities and stump thresholds.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::postfilter::{apply_post_filter, PostFilterSpec};
use super::{TrainingSet, WeightVector};
use crate::components::UnionFind;
use crate::grammar::{FeatureProgram, Grammar};
use crate::ops::nearest_rank;
use crate::{GreyImage, Result, StructuringElement};

/// Default cap on stump thresholds per program.
pub const MAX_THRESHOLDS: usize = 256;

/// Candidates within this margin of the best keep the earlier one.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Polarity {
    /// Positive where the feature exceeds the threshold.
    Above,
    /// Positive where the feature is below the threshold.
    Below,
}

impl Polarity {
    pub const BOTH: [Polarity; 2] = [Polarity::Above, Polarity::Below];

    pub fn sign(self) -> i8 {
        match self {
            Polarity::Above => 1,
            Polarity::Below => -1,
        }
    }
}

impl TryFrom<i8> for Polarity {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Polarity::Above),
            -1 => Ok(Polarity::Below),
            _ => Err(format!("polarity must be 1 or -1, got {v}")),
        }
    }
}

impl From<Polarity> for i8 {
    fn from(p: Polarity) -> i8 {
        p.sign()
    }
}

/// Feature program, decision stump and post-filter.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakHypothesis {
    pub program: FeatureProgram,
    pub threshold: f64,
    pub polarity: Polarity,
    pub filter: PostFilterSpec,
}

impl WeakHypothesis {
    /// Stump sign map of an already evaluated feature image.
    pub fn stump(&self, feature: &GreyImage) -> Vec<bool> {
        let t = self.threshold;
        match self.polarity {
            Polarity::Above => feature.data().iter().map(|&v| v > t).collect(),
            Polarity::Below => feature.data().iter().map(|&v| v < t).collect(),
        }
    }

    /// Ternary predictions from an already evaluated feature image.
    pub fn predict_feature(&self, feature: &GreyImage) -> Vec<i8> {
        apply_post_filter(&self.stump(feature), feature.width(), feature.height(), self.filter)
    }

    pub fn predict(&self, img: &GreyImage) -> Result<Vec<i8>> {
        Ok(self.predict_feature(&self.program.evaluate(img)?))
    }
}

/// Midpoints between consecutive distinct values, thinned to at most `cap`
/// quantile-spaced entries. Ascending.
pub fn candidate_thresholds(values: &[f64], cap: usize) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let mids: Vec<f64> = v.windows(2).map(|p| p[0] + (p[1] - p[0]) / 2.0).collect();
    if mids.len() <= cap || cap == 0 {
        return mids;
    }
    if cap == 1 {
        return vec![mids[mids.len() / 2]];
    }
    let m = mids.len() - 1;
    (0..cap).map(|i| mids[(i * m + (cap - 1) / 2) / (cap - 1)]).collect()
}

/// Every candidate score of one program: `scores[filter][polarity][t]` is
/// the edge of threshold `thresholds[t]`.
#[derive(Debug, Clone)]
pub struct ProgramScores {
    pub thresholds: Vec<f64>,
    pub scores: Vec<[Vec<f64>; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateIndex {
    pub filter: usize,
    pub polarity: Polarity,
    pub threshold: usize,
    pub r: f64,
}

impl ProgramScores {
    /// Best candidate in canonical order (filter, polarity, threshold).
    pub fn best(&self) -> Option<CandidateIndex> {
        let mut best: Option<CandidateIndex> = None;
        for (fi, per_pol) in self.scores.iter().enumerate() {
            for (pi, rs) in per_pol.iter().enumerate() {
                for (ti, &r) in rs.iter().enumerate() {
                    if best.is_none_or(|b| r > b.r + TIE_TOLERANCE) {
                        best = Some(CandidateIndex {
                            filter: fi,
                            polarity: Polarity::BOTH[pi],
                            threshold: ti,
                            r,
                        });
                    }
                }
            }
        }
        best
    }
}

/// Outcome of one round's search.
#[derive(Debug, Clone)]
pub struct WeakFit {
    pub hypothesis: WeakHypothesis,
    pub r: f64,
    /// Best edge of each pool program, `None` when it had no threshold.
    pub pool_scores: Vec<Option<f64>>,
}

/// Samples `pool_size` programs and returns the best candidate.
/// `Ok(None)` when no program admits a threshold.
#[allow(clippy::too_many_arguments)]
pub fn fit_weak<R: Rng + ?Sized>(
    ts: &TrainingSet,
    weights: &WeightVector,
    pool_size: usize,
    grammar: &Grammar,
    max_depth: usize,
    filters: &[PostFilterSpec],
    max_thresholds: usize,
    rng: &mut R,
) -> Result<Option<WeakFit>> {
    let pool: Vec<FeatureProgram> = (0..pool_size.max(1)).map(|_| grammar.sample(rng, max_depth)).collect();
    fit_weak_pool(ts, weights, pool, filters, max_thresholds)
}

/// Best candidate over a fixed program pool.
pub fn fit_weak_pool(
    ts: &TrainingSet,
    weights: &WeightVector,
    pool: Vec<FeatureProgram>,
    filters: &[PostFilterSpec],
    max_thresholds: usize,
) -> Result<Option<WeakFit>> {
    let scored: Vec<Result<ProgramScores>> = pool
        .par_iter()
        .map(|p| score_program(ts, weights, p, filters, max_thresholds))
        .collect();
    let mut best: Option<(usize, CandidateIndex, f64)> = None;
    let mut pool_scores = Vec::with_capacity(pool.len());
    for (pi, s) in scored.into_iter().enumerate() {
        let s = s?;
        let b = s.best();
        pool_scores.push(b.map(|c| c.r));
        if let Some(c) = b {
            if best.is_none_or(|(_, bc, _)| c.r > bc.r + TIE_TOLERANCE) {
                best = Some((pi, c, s.thresholds[c.threshold]));
            }
        }
    }
    Ok(best.map(|(pi, c, theta)| WeakFit {
        hypothesis: WeakHypothesis {
            program: pool[pi].clone(),
            threshold: theta,
            polarity: c.polarity,
            filter: filters[c.filter],
        },
        r: c.r,
        pool_scores,
    }))
}

/// Scores every (filter, polarity, threshold) candidate of one program.
///
/// Thresholding commutes with flat min, max and rank filters, so each
/// feature image is quantized once to the number of thresholds it clears
/// and the filters run on that level image. Region growing is swept from
/// the highest threshold down with a union-find.
pub fn score_program(
    ts: &TrainingSet,
    weights: &WeightVector,
    program: &FeatureProgram,
    filters: &[PostFilterSpec],
    max_thresholds: usize,
) -> Result<ProgramScores> {
    let features: Vec<GreyImage> = ts
        .images()
        .iter()
        .map(|img| program.evaluate(img))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = ts
        .examples()
        .iter()
        .map(|e| features[e.image as usize].data()[e.pixel as usize])
        .collect();
    let thresholds = candidate_thresholds(&values, max_thresholds);
    let m = thresholds.len();
    let dy: Vec<f64> = weights
        .as_slice()
        .iter()
        .zip(ts.labels())
        .map(|(&d, &y)| d * y as f64)
        .collect();
    let mut scores = vec![[Vec::new(), Vec::new()]; filters.len()];
    if m == 0 {
        return Ok(ProgramScores { thresholds, scores });
    }
    // level(v): how many oriented thresholds v clears
    let level_images = |f: &dyn Fn(f64) -> u16| -> Vec<Vec<u16>> {
        features
            .iter()
            .map(|img| img.data().iter().map(|&v| f(v)).collect())
            .collect()
    };
    let above = level_images(&|v| thresholds.partition_point(|&t| t < v) as u16);
    let below = level_images(&|v| (m - thresholds.partition_point(|&t| t <= v)) as u16);
    // unless a value sits exactly on a threshold the two mirror each other
    let mirrored = above
        .iter()
        .zip(&below)
        .all(|(a, b)| a.iter().zip(b).all(|(&a, &b)| a as usize + b as usize == m));
    let build = |levels: &[Vec<u16>], mirror: bool| -> Vec<FilterBank> {
        levels
            .iter()
            .zip(ts.images())
            .map(|(l, img)| FilterBank::build(l, img.width(), img.height(), m, filters, mirror))
            .collect()
    };
    let banks_above = build(&above, mirrored);
    let banks_below = if mirrored {
        banks_above.iter().map(|b| b.mirrored(m)).collect()
    } else {
        build(&below, false)
    };
    for (pi, pol) in Polarity::BOTH.into_iter().enumerate() {
        let (levels, banks) = match pol {
            Polarity::Above => (&above, &banks_above),
            Polarity::Below => (&below, &banks_below),
        };
        let plain_refs: Vec<&[u16]> = levels.iter().map(Vec::as_slice).collect();
        let plain = level_scores(ts, &dy, levels, &plain_refs, m);
        let mut regions: Vec<usize> = Vec::new();
        for (fi, f) in filters.iter().enumerate() {
            let oriented = match *f {
                PostFilterSpec::None => plain.clone(),
                PostFilterSpec::RegionGrow(k) => {
                    regions.push(k);
                    continue;
                }
                _ => {
                    let filtered: Vec<&[u16]> = banks.iter().map(|b| b.get(*f)).collect();
                    level_scores(ts, &dy, levels, &filtered, m)
                }
            };
            scores[fi][pi] = canonical(oriented, pol);
        }
        if !regions.is_empty() {
            let inactive = inactive_sums(ts, &dy, levels, m);
            let swept = region_sweep(ts, &dy, levels, m, &regions, &inactive);
            let mut it = swept.into_iter();
            for (fi, f) in filters.iter().enumerate() {
                if let PostFilterSpec::RegionGrow(_) = f {
                    scores[fi][pi] = canonical(it.next().expect("one sweep per region size"), pol);
                }
            }
        }
    }
    Ok(ProgramScores { thresholds, scores })
}

/// Oriented index `j` of the `Below` polarity is threshold `m - 1 - j`.
fn canonical(mut oriented: Vec<f64>, pol: Polarity) -> Vec<f64> {
    if pol == Polarity::Below {
        oriented.reverse();
    }
    oriented
}

/// Edge at each oriented index `j` when a pixel is `+1` iff both its level
/// and its filtered level exceed `j` and `-1` iff neither does.
fn level_scores(ts: &TrainingSet, dy: &[f64], levels: &[Vec<u16>], filtered: &[&[u16]], m: usize) -> Vec<f64> {
    let mut pos = vec![0.0; m + 1];
    let mut neg = vec![0.0; m + 1];
    for (e, &d) in ts.examples().iter().zip(dy) {
        let a = levels[e.image as usize][e.pixel as usize];
        let b = filtered[e.image as usize][e.pixel as usize];
        pos[a.min(b) as usize] += d;
        neg[a.max(b) as usize] += d;
    }
    // r(j) = sum_{lo > j} pos - sum_{hi <= j} neg
    let mut above: f64 = pos.iter().sum::<f64>() - pos[0];
    let mut below = neg[0];
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        out.push(above - below);
        above -= pos[j + 1];
        below += neg[j + 1];
    }
    out
}

fn inactive_sums(ts: &TrainingSet, dy: &[f64], levels: &[Vec<u16>], m: usize) -> Vec<f64> {
    let mut hist = vec![0.0; m + 1];
    for (e, &d) in ts.examples().iter().zip(dy) {
        hist[levels[e.image as usize][e.pixel as usize] as usize] += d;
    }
    let mut acc = 0.0;
    (0..m)
        .map(|j| {
            acc += hist[j];
            acc
        })
        .collect()
}

/// Region-grow edges for each `k` at every oriented index, sweeping the
/// positive set from small to large.
fn region_sweep(
    ts: &TrainingSet,
    dy: &[f64],
    levels: &[Vec<u16>],
    m: usize,
    ks: &[usize],
    inactive: &[f64],
) -> Vec<Vec<f64>> {
    let mut offsets = Vec::with_capacity(levels.len());
    let mut total = 0usize;
    for l in levels {
        offsets.push(total);
        total += l.len();
    }
    let mut px_dy = vec![0.0; total];
    for (e, &d) in ts.examples().iter().zip(dy) {
        px_dy[offsets[e.image as usize] + e.pixel as usize] = d;
    }
    // pixels grouped by level, highest first
    let mut by_level: Vec<Vec<u32>> = vec![Vec::new(); m + 1];
    for (ii, l) in levels.iter().enumerate() {
        for (p, &q) in l.iter().enumerate() {
            if q > 0 {
                by_level[q as usize].push((offsets[ii] + p) as u32);
            }
        }
    }
    let image_of = |g: usize| offsets.partition_point(|&o| o <= g) - 1;
    let mut uf = UnionFind::new(total);
    let mut active = vec![false; total];
    let mut comp_sum = vec![0.0; total];
    let mut small = vec![0.0; ks.len()];
    let mut out = vec![vec![0.0; m]; ks.len()];
    for j in (0..m).rev() {
        for &g in &by_level[j + 1] {
            let g = g as usize;
            let ii = image_of(g);
            let w = ts.images()[ii].width();
            let h = ts.images()[ii].height();
            let p = g - offsets[ii];
            let (x, y) = (p % w, p / w);
            active[g] = true;
            comp_sum[g] = px_dy[g];
            // a lone pixel is within every size limit
            small.iter_mut().for_each(|s| *s += px_dy[g]);
            let mut neighbours = [usize::MAX; 4];
            if x > 0 {
                neighbours[0] = g - 1;
            }
            if x + 1 < w {
                neighbours[1] = g + 1;
            }
            if y > 0 {
                neighbours[2] = g - w;
            }
            if y + 1 < h {
                neighbours[3] = g + w;
            }
            for nb in neighbours {
                if nb == usize::MAX || !active[nb] {
                    continue;
                }
                let (ra, rb) = (uf.find(g), uf.find(nb));
                if ra == rb {
                    continue;
                }
                let (sa, sb) = (uf.size(ra), uf.size(rb));
                let (da, db) = (comp_sum[ra], comp_sum[rb]);
                for (s, &k) in small.iter_mut().zip(ks) {
                    if sa + sb > k {
                        if sa <= k {
                            *s -= da;
                        }
                        if sb <= k {
                            *s -= db;
                        }
                    }
                }
                let root = uf.union(ra, rb);
                comp_sum[root] = da + db;
            }
        }
        for (o, &s) in out.iter_mut().zip(&small) {
            o[j] = s - inactive[j];
        }
    }
    out
}

/// Filtered level images of one training image, keyed by radius.
#[derive(Debug, Default)]
struct FilterBank {
    erode: BTreeMap<usize, Vec<u16>>,
    dilate: BTreeMap<usize, Vec<u16>>,
    median: BTreeMap<usize, Vec<u16>>,
    /// Rank `n - 1 - k` partner of each median, kept for mirroring.
    median_upper: BTreeMap<usize, Vec<u16>>,
}

impl FilterBank {
    /// With `mirror`, also computes what [`FilterBank::mirrored`] needs.
    fn build(levels: &[u16], w: usize, h: usize, m: usize, filters: &[PostFilterSpec], mirror: bool) -> Self {
        let mut er = BTreeSet::new();
        let mut dr = BTreeSet::new();
        let mut mr = BTreeSet::new();
        for f in filters {
            match *f {
                PostFilterSpec::Erode(r) => er.insert(r),
                PostFilterSpec::Dilate(r) => dr.insert(r),
                PostFilterSpec::Median(r) => mr.insert(r),
                _ => false,
            };
        }
        if mirror {
            er.extend(dr.iter().copied());
            dr = er.clone();
        }
        let er: Vec<usize> = er.into_iter().collect();
        let dr: Vec<usize> = dr.into_iter().collect();
        let mut bank = FilterBank {
            erode: er
                .iter()
                .copied()
                .zip(disk_extremes(levels, w, h, &er, false))
                .collect(),
            dilate: dr.iter().copied().zip(disk_extremes(levels, w, h, &dr, true)).collect(),
            ..FilterBank::default()
        };
        for r in mr {
            let (lower, upper) = median_levels(levels, w, h, m, &StructuringElement::disk(r), mirror);
            bank.median.insert(r, lower);
            if let Some(u) = upper {
                bank.median_upper.insert(r, u);
            }
        }
        bank
    }

    /// Bank of the level image `m - levels`: min and max swap, and the
    /// median comes from the partner rank.
    fn mirrored(&self, m: usize) -> Self {
        let flip = |src: &BTreeMap<usize, Vec<u16>>| -> BTreeMap<usize, Vec<u16>> {
            src.iter()
                .map(|(&r, v)| (r, v.iter().map(|&q| (m - q as usize) as u16).collect()))
                .collect()
        };
        FilterBank {
            erode: flip(&self.dilate),
            dilate: flip(&self.erode),
            median: flip(&self.median_upper),
            median_upper: BTreeMap::new(),
        }
    }

    fn get(&self, f: PostFilterSpec) -> &[u16] {
        let found = match f {
            PostFilterSpec::Erode(r) => self.erode.get(&r),
            PostFilterSpec::Dilate(r) => self.dilate.get(&r),
            PostFilterSpec::Median(r) => self.median.get(&r),
            _ => None,
        };
        found.expect("bank holds every requested filter")
    }
}

/// Min (or max) of a level image over clipped disks of each radius.
/// Disk rows are horizontal runs, so running extremes over every half
/// width are shared by all radii.
fn disk_extremes(levels: &[u16], w: usize, h: usize, radii: &[usize], take_max: bool) -> Vec<Vec<u16>> {
    let Some(&rmax) = radii.iter().max() else {
        return Vec::new();
    };
    let pick = |a: u16, b: u16| if take_max { a.max(b) } else { a.min(b) };
    let mut runs: Vec<Vec<u16>> = vec![levels.to_vec()];
    for hw in 1..=rmax {
        let mut next = runs[hw - 1].clone();
        for y in 0..h {
            let row = &levels[y * w..(y + 1) * w];
            let out = &mut next[y * w..(y + 1) * w];
            for x in hw..w {
                out[x] = pick(out[x], row[x - hw]);
            }
            for x in 0..w.saturating_sub(hw) {
                out[x] = pick(out[x], row[x + hw]);
            }
        }
        runs.push(next);
    }
    let init = if take_max { 0 } else { u16::MAX };
    radii
        .iter()
        .map(|&r| {
            let mut out = vec![init; w * h];
            let r = r as isize;
            for dy in -r..=r {
                let hw = (0..=r).rev().find(|hw| hw * hw + dy * dy <= r * r).unwrap_or(0) as usize;
                for y in 0..h as isize {
                    let sy = y + dy;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let src = &runs[hw][sy as usize * w..(sy as usize + 1) * w];
                    let dst = &mut out[y as usize * w..(y as usize + 1) * w];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d = pick(*d, s);
                    }
                }
            }
            out
        })
        .collect()
}

const COARSE: usize = 16;

/// Sliding-histogram nearest-rank median over a clipped footprint; with
/// `upper`, also the rank `n - 1 - k` value.
fn median_levels(
    levels: &[u16],
    w: usize,
    h: usize,
    m: usize,
    se: &StructuringElement,
    upper: bool,
) -> (Vec<u16>, Option<Vec<u16>>) {
    let bins = m + 1;
    let mut fine = vec![0u32; bins];
    let mut coarse = vec![0u32; bins.div_ceil(COARSE)];
    let mut lower_out = vec![0u16; w * h];
    let mut upper_out = if upper { vec![0u16; w * h] } else { Vec::new() };
    let (wi, hi) = (w as isize, h as isize);
    let select = |mut k: u32, fine: &[u32], coarse: &[u32]| -> u16 {
        let mut c = 0;
        while coarse[c] <= k {
            k -= coarse[c];
            c += 1;
        }
        let mut q = c * COARSE;
        while fine[q] <= k {
            k -= fine[q];
            q += 1;
        }
        q as u16
    };
    for y in 0..hi {
        fine.iter_mut().for_each(|c| *c = 0);
        coarse.iter_mut().for_each(|c| *c = 0);
        let mut n = 0usize;
        let add = |x: isize, dy: isize, delta: i32, n: &mut usize, fine: &mut [u32], coarse: &mut [u32]| {
            let sy = y + dy;
            if x < 0 || x >= wi || sy < 0 || sy >= hi {
                return;
            }
            let q = levels[sy as usize * w + x as usize] as usize;
            fine[q] = (fine[q] as i32 + delta) as u32;
            coarse[q / COARSE] = (coarse[q / COARSE] as i32 + delta) as u32;
            *n = (*n as isize + delta as isize) as usize;
        };
        for sp in se.spans() {
            for dx in sp.dx_min..=sp.dx_max {
                add(dx, sp.dy, 1, &mut n, &mut fine, &mut coarse);
            }
        }
        for x in 0..wi {
            if x > 0 {
                for sp in se.spans() {
                    add(x - 1 + sp.dx_min, sp.dy, -1, &mut n, &mut fine, &mut coarse);
                    add(x + sp.dx_max, sp.dy, 1, &mut n, &mut fine, &mut coarse);
                }
            }
            let p = y as usize * w + x as usize;
            let k = nearest_rank(50.0, n);
            lower_out[p] = select(k as u32, &fine, &coarse);
            if upper {
                let ku = n - 1 - k;
                upper_out[p] = if ku == k {
                    lower_out[p]
                } else {
                    select(ku as u32, &fine, &coarse)
                };
            }
        }
    }
    (lower_out, upper.then_some(upper_out))
}
