//! Primitive neighborhood operators: the terminals of the feature grammar.

mod haar;
mod linear;
mod morph;
mod pointwise;

use std::f64::consts::{PI, TAU};

pub use haar::{apply_haar, apply_haar_dense, HaarKind, HaarRect, ViolaJonesKernel, KERNEL_EXTENT};
pub use linear::{
    convolve2d, convolve_separable, gabor, gaussian_kernels, gaussian_smooth, ggm, laplace, laws, GaborEnvelope,
    GaborParams, LawsVector,
};
pub use morph::{apply_morph, apply_ptile, dilate, erode, nearest_rank, MorphOp};
pub use pointwise::{apply_binary, apply_sigmoid, BinaryKind};

use crate::error::{Error, Result};
use crate::raster::{GreyImage, StructuringElement};

/// Scale range for `ggm` and `laplace`.
pub const SIGMA_RANGE: (f64, f64) = (0.3, 9.0);
/// Slopes admitted for `sigmoid`.
pub const SIGMOID_LAMBDAS: [f64; 2] = [0.1, 0.0];
/// Envelope size range for `gabor`.
pub const GABOR_SIZE_RANGE: (f64, f64) = (1.0, 31.0);
/// Carrier wavelength range (pixels) for `gabor`.
pub const GABOR_WAVELENGTH_RANGE: (f64, f64) = (2.0, 12.0);
/// Aspect ratios are `10^(2s-1)` for `s ∈ [0, 1]`.
pub const RATIO_RANGE: (f64, f64) = (0.1, 10.0);

/// A fully parameterized single-input operator.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    Sigmoid { theta: f64, lambda: f64 },
    Ggm { sigma: f64 },
    Laplace { sigma: f64 },
    Laws { u: LawsVector, v: LawsVector },
    Gabor(GaborParams),
    Morph { op: MorphOp, se: StructuringElement },
    Ptile { p: f64, se: StructuringElement },
    Convolve(ViolaJonesKernel),
}

impl FilterSpec {
    pub fn name(&self) -> &'static str {
        match self {
            FilterSpec::Sigmoid { .. } => "sigmoid",
            FilterSpec::Ggm { .. } => "ggm",
            FilterSpec::Laplace { .. } => "laplace",
            FilterSpec::Laws { .. } => "laws",
            FilterSpec::Gabor(_) => "gabor",
            FilterSpec::Morph { op, .. } => op.name(),
            FilterSpec::Ptile { .. } => "ptile",
            FilterSpec::Convolve(_) => "convolve",
        }
    }

    /// True for operators that are linear in the image.
    pub fn is_linear(&self) -> bool {
        matches!(
            self,
            FilterSpec::Laws { .. } | FilterSpec::Laplace { .. } | FilterSpec::Gabor(_) | FilterSpec::Convolve(_)
        )
    }

    /// Checks every parameter against its sampling range.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidParameter(what));
        let in_range = |v: f64, (lo, hi): (f64, f64)| v.is_finite() && v >= lo && v <= hi;
        match self {
            FilterSpec::Sigmoid { theta, lambda } => {
                if !theta.is_finite() || !SIGMOID_LAMBDAS.contains(lambda) {
                    return bad(format!("sigmoid theta={theta} lambda={lambda}"));
                }
            }
            FilterSpec::Ggm { sigma } | FilterSpec::Laplace { sigma } => {
                if !in_range(*sigma, SIGMA_RANGE) {
                    return bad(format!("{} sigma={sigma}", self.name()));
                }
            }
            FilterSpec::Laws { .. } => {}
            FilterSpec::Gabor(g) => {
                if !(in_range(g.theta, (0.0, PI))
                    && in_range(g.size, GABOR_SIZE_RANGE)
                    && in_range(g.ratio, RATIO_RANGE)
                    && in_range(g.wavelength, GABOR_WAVELENGTH_RANGE))
                {
                    return bad(format!("gabor {g:?}"));
                }
            }
            FilterSpec::Morph { se, .. } => validate_se(se)?,
            FilterSpec::Ptile { p, se } => {
                if !in_range(*p, (0.0, 100.0)) {
                    return bad(format!("ptile p={p}"));
                }
                validate_se(se)?;
            }
            FilterSpec::Convolve(k) => {
                if !k.is_valid() {
                    return bad(format!("convolve kernel {k:?}"));
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, img: &GreyImage) -> GreyImage {
        let out = match self {
            FilterSpec::Sigmoid { theta, lambda } => return apply_sigmoid(img, *theta, *lambda),
            FilterSpec::Ggm { sigma } => ggm(img, *sigma),
            FilterSpec::Laplace { sigma } => laplace(img, *sigma),
            FilterSpec::Laws { u, v } => laws(img, *u, *v),
            FilterSpec::Gabor(g) => gabor(img, g),
            FilterSpec::Morph { op, se } => apply_morph(*op, img, se),
            FilterSpec::Ptile { p, se } => apply_ptile(img, *p, se),
            FilterSpec::Convolve(k) => apply_haar(img, k),
        };
        out.sanitized()
    }
}

fn validate_se(se: &StructuringElement) -> Result<()> {
    let ok = (1..=7).contains(&se.radius())
        && se.orientation().is_finite()
        && (0.0..=TAU).contains(&se.orientation())
        && se.ratio() >= RATIO_RANGE.0
        && se.ratio() <= RATIO_RANGE.1;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "structuring element theta={} k={} ratio={}",
            se.orientation(),
            se.radius(),
            se.ratio()
        )))
    }
}

/// Applies one of the linear operators (laws, laplace, gabor, ggm, convolve).
pub fn apply_linear(spec: &FilterSpec, img: &GreyImage) -> Result<GreyImage> {
    match spec {
        FilterSpec::Laws { .. }
        | FilterSpec::Laplace { .. }
        | FilterSpec::Gabor(_)
        | FilterSpec::Ggm { .. }
        | FilterSpec::Convolve(_) => {
            spec.validate()?;
            Ok(spec.apply(img))
        }
        other => Err(Error::InvalidParameter(format!(
            "{} is not a linear filter",
            other.name()
        ))),
    }
}
