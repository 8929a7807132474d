//! Flat greyscale morphology and percentile filtering. Footprints are
//! clipped at the image border (out-of-bounds samples are ignored).

use std::collections::VecDeque;

use crate::raster::{GreyImage, StructuringElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MorphOp {
    Erode,
    Dilate,
    Open,
    Close,
}

impl MorphOp {
    pub const ALL: [MorphOp; 4] = [MorphOp::Erode, MorphOp::Dilate, MorphOp::Open, MorphOp::Close];

    pub fn name(self) -> &'static str {
        match self {
            MorphOp::Erode => "erode",
            MorphOp::Dilate => "dilate",
            MorphOp::Open => "open",
            MorphOp::Close => "close",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

/// Running extremum of `row[x+a ..= x+b]` (clipped) for every `x`.
/// `better(p, q)` is true when `p` should replace `q`.
fn sliding_extreme(row: &[f64], a: isize, b: isize, better: impl Fn(f64, f64) -> bool, out: &mut [f64]) {
    let w = row.len() as isize;
    let mut deque: VecDeque<isize> = VecDeque::new();
    let mut next = 0isize;
    for x in 0..w {
        let hi = (x + b).min(w - 1);
        let lo = (x + a).max(0);
        while next <= hi {
            let v = row[next as usize];
            while let Some(&back) = deque.back() {
                if better(v, row[back as usize]) || v == row[back as usize] {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(next);
            next += 1;
        }
        while let Some(&front) = deque.front() {
            if front < lo {
                deque.pop_front();
            } else {
                break;
            }
        }
        out[x as usize] = match deque.front() {
            Some(&i) if lo <= hi => row[i as usize],
            _ => f64::NAN,
        };
    }
}

fn extreme_filter(img: &GreyImage, se: &StructuringElement, take_max: bool) -> GreyImage {
    let (w, h) = (img.width(), img.height());
    let init = if take_max { f64::NEG_INFINITY } else { f64::INFINITY };
    let mut out = vec![init; w * h];
    let mut scratch = vec![0.0; w];
    let better = |p: f64, q: f64| if take_max { p > q } else { p < q };
    for span in se.spans() {
        for y in 0..h {
            let sy = y as isize + span.dy;
            if sy < 0 || sy >= h as isize {
                continue;
            }
            let row = &img.data()[sy as usize * w..(sy as usize + 1) * w];
            sliding_extreme(row, span.dx_min, span.dx_max, better, &mut scratch);
            for (o, &s) in out[y * w..(y + 1) * w].iter_mut().zip(&scratch) {
                // NaN marks an empty clipped window and never wins
                if better(s, *o) {
                    *o = s;
                }
            }
        }
    }
    GreyImage::new(w, h, out).expect("dimensions preserved")
}

/// Minimum over the footprint.
pub fn erode(img: &GreyImage, se: &StructuringElement) -> GreyImage {
    extreme_filter(img, se, false)
}

/// Maximum over the footprint.
pub fn dilate(img: &GreyImage, se: &StructuringElement) -> GreyImage {
    extreme_filter(img, se, true)
}

pub fn apply_morph(op: MorphOp, img: &GreyImage, se: &StructuringElement) -> GreyImage {
    match op {
        MorphOp::Erode => erode(img, se),
        MorphOp::Dilate => dilate(img, se),
        MorphOp::Open => dilate(&erode(img, se), se),
        MorphOp::Close => erode(&dilate(img, se), se),
    }
}

/// Nearest-rank index (0-based) of the `p`-th percentile among `n` samples.
#[inline]
pub fn nearest_rank(p: f64, n: usize) -> usize {
    let rank = (p / 100.0 * n as f64).ceil() as usize;
    rank.clamp(1, n) - 1
}

/// `p`-th percentile (nearest rank) of the values under the footprint.
pub fn apply_ptile(img: &GreyImage, p: f64, se: &StructuringElement) -> GreyImage {
    if p <= 0.0 {
        return erode(img, se);
    }
    if p >= 100.0 {
        return dilate(img, se);
    }
    let (w, h) = (img.width() as isize, img.height() as isize);
    let mut buf = Vec::with_capacity(se.len());
    GreyImage::from_fn(img.width(), img.height(), |x, y| {
        gather(img, se, x as isize, y as isize, w, h, &mut buf);
        let k = nearest_rank(p, buf.len());
        *buf.select_nth_unstable_by(k, f64::total_cmp).1
    })
}

#[inline]
fn gather(img: &GreyImage, se: &StructuringElement, x: isize, y: isize, w: isize, h: isize, buf: &mut Vec<f64>) {
    buf.clear();
    let data = img.data();
    for span in se.spans() {
        let sy = y + span.dy;
        if sy < 0 || sy >= h {
            continue;
        }
        let lo = (x + span.dx_min).max(0);
        let hi = (x + span.dx_max).min(w - 1);
        if lo > hi {
            continue;
        }
        let base = (sy * w) as usize;
        buf.extend_from_slice(&data[base + lo as usize..=base + hi as usize]);
    }
}
