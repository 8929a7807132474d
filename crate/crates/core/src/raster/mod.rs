//! Raster types shared by every stage: grey images, ternary label masks,
//! structuring elements and integral images.

mod integral;
mod io;
mod se;

pub use integral::IntegralImage;
pub use io::{load_image, load_mask, read_text_raster, save_image_png, save_mask, write_text_raster};
pub use se::StructuringElement;

use crate::error::{Error, Result};

/// A real-valued single-channel raster stored row-major.
///
/// Input images are normalized to `[0, 1]`; operator outputs may leave that
/// range but are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct GreyImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Per-pixel sum of weighted weak hypotheses.
pub type ConfidenceImage = GreyImage;

impl GreyImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::Dimensions {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(GreyImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        GreyImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GreyImage { width, height, data }
    }

    /// Builds an image from rows; panics on ragged input. Mostly for tests.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let data: Vec<f64> = rows.iter().flat_map(|r| r.as_ref().to_vec()).collect();
        Self::new(width, height, data).expect("ragged or empty rows")
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn same_dims(&self, other: &GreyImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn check_dims(&self, other: &GreyImage) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ))
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GreyImage {
        GreyImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Replaces every non-finite sample by zero.
    pub(crate) fn sanitized(mut self) -> Self {
        for v in &mut self.data {
            if !v.is_finite() {
                *v = 0.0;
            }
        }
        self
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Ground-truth class of a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Background,
    Object,
    Confuser,
}

impl Label {
    /// Byte code used in mask files.
    pub fn code(self) -> u8 {
        match self {
            Label::Background => 0,
            Label::Object => 128,
            Label::Confuser => 255,
        }
    }

    pub fn from_code(code: u16) -> Option<Label> {
        match code {
            0 => Some(Label::Background),
            128 => Some(Label::Object),
            255 => Some(Label::Confuser),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::Dimensions {
                width,
                height,
                len: labels.len(),
            });
        }
        Ok(LabelMask { width, height, labels })
    }

    pub fn filled(width: usize, height: usize, label: Label) -> Self {
        LabelMask {
            width,
            height,
            labels: vec![label; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, label: Label) {
        self.labels[y * self.width + x] = label;
    }

    pub fn matches(&self, image: &GreyImage) -> bool {
        self.width == image.width() && self.height == image.height()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Reflect-101 border index: `-1 -> 1`, `n -> n - 2`. Works for any offset.
#[inline]
pub(crate) fn reflect101(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let n = n as isize;
    let period = 2 * (n - 1);
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - m;
    }
    m as usize
}
