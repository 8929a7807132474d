//! Object detection from grammar-sampled feature programs, spatially
//! exploitative confidence-rated AdaBoost over pixels, and detectors that
//! turn confidence images into ranked `(x, y)` locations.

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boost;
pub mod components;
pub mod detect;
pub mod error;
pub mod eval;
pub mod grammar;
pub mod ops;
pub mod pipeline;
pub mod raster;

pub use error::{Error, Result};
pub use raster::{ConfidenceImage, GreyImage, IntegralImage, Label, LabelMask, StructuringElement};
