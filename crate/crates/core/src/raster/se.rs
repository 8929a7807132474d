use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Pixel-center inclusion slack; keeps boundary pixels stable under
/// rotations by pi and axis swaps that are exact only in real arithmetic.
const INCLUSION_EPS: f64 = 1e-9;

/// Flat binary footprint centered on the origin.
///
/// Offsets are stored both as a point list and as horizontal runs so
/// morphology can use sliding-window extrema per run.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuringElement {
    orientation: f64,
    radius: usize,
    ratio: f64,
    offsets: Vec<(isize, isize)>,
    spans: Vec<Span>,
}

/// Horizontal run `dx_min..=dx_max` at row offset `dy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub dy: isize,
    pub dx_min: isize,
    pub dx_max: isize,
}

impl StructuringElement {
    /// Rasterizes an ellipse with major radius `k` pixels, orientation in
    /// radians and width-to-height `ratio`.
    ///
    /// Semi-axes are `k·ratio/max(ratio,1)` along the orientation and
    /// `k/max(ratio,1)` across it, each at least 0.5 px, so the major
    /// semi-axis is always `k` and the mask always contains the center.
    pub fn ellipse(orientation: f64, k: usize, ratio: f64) -> Result<Self> {
        if !(1..=7).contains(&k) {
            return Err(Error::InvalidParameter(format!(
                "structuring element radius {k} outside 1..=7"
            )));
        }
        if !(ratio.is_finite() && ratio > 0.0) || !orientation.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "structuring element orientation {orientation} / ratio {ratio}"
            )));
        }
        let scale = ratio.max(1.0);
        let along = (k as f64 * ratio / scale).max(0.5);
        let across = (k as f64 / scale).max(0.5);
        let theta = orientation.rem_euclid(PI);
        let (s, c) = theta.sin_cos();
        let r = k as isize;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let (fx, fy) = (dx as f64, dy as f64);
                let u = fx * c + fy * s;
                let v = -fx * s + fy * c;
                let q = (u / along).powi(2) + (v / across).powi(2);
                if q <= 1.0 + INCLUSION_EPS {
                    offsets.push((dx, dy));
                }
            }
        }
        Ok(Self::from_offsets(orientation, k, ratio, offsets))
    }

    /// Discrete disk `dx² + dy² <= radius²`; radius 0 is the single center pixel.
    pub fn disk(radius: usize) -> Self {
        let r = radius as isize;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    offsets.push((dx, dy));
                }
            }
        }
        Self::from_offsets(0.0, radius, 1.0, offsets)
    }

    fn from_offsets(orientation: f64, radius: usize, ratio: f64, offsets: Vec<(isize, isize)>) -> Self {
        // offsets arrive sorted by (dy, dx)
        let mut spans: Vec<Span> = Vec::new();
        for &(dx, dy) in &offsets {
            match spans.last_mut() {
                Some(sp) if sp.dy == dy && sp.dx_max + 1 == dx => sp.dx_max = dx,
                _ => spans.push(Span {
                    dy,
                    dx_min: dx,
                    dx_max: dx,
                }),
            }
        }
        StructuringElement {
            orientation,
            radius,
            ratio,
            offsets,
            spans,
        }
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    /// Major radius `k`; the footprint fits in a `(2k+1)²` box.
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn offsets(&self) -> &[(isize, isize)] {
        &self.offsets
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn contains(&self, dx: isize, dy: isize) -> bool {
        self.offsets.binary_search_by(|&(x, y)| (y, x).cmp(&(dy, dx))).is_ok()
    }

    /// The footprint as a `(2k+1)²` boolean grid, row-major.
    pub fn mask(&self) -> Vec<bool> {
        let r = self.radius as isize;
        let side = (2 * r + 1) as usize;
        let mut grid = vec![false; side * side];
        for &(dx, dy) in &self.offsets {
            grid[((dy + r) as usize) * side + (dx + r) as usize] = true;
        }
        grid
    }

    /// Same point set rotated by 180 degrees.
    pub fn rotated180(&self) -> Self {
        let mut offsets: Vec<(isize, isize)> = self.offsets.iter().map(|&(x, y)| (-x, -y)).collect();
        offsets.sort_by_key(|&(x, y)| (y, x));
        Self::from_offsets(self.orientation + PI, self.radius, self.ratio, offsets)
    }
}
