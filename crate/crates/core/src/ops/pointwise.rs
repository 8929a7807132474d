use crate::error::Result;
use crate::raster::GreyImage;

/// Element-wise two-image operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryKind {
    Mult,
    Blend,
    NormDiff,
    ScaledSub,
}

impl BinaryKind {
    pub const ALL: [BinaryKind; 4] = [
        BinaryKind::Mult,
        BinaryKind::NormDiff,
        BinaryKind::ScaledSub,
        BinaryKind::Blend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BinaryKind::Mult => "mult",
            BinaryKind::Blend => "blend",
            BinaryKind::NormDiff => "normDiff",
            BinaryKind::ScaledSub => "scaledSub",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// `mult: ab`, `blend: (a+b)/2`, `normDiff: (a-b)/(ΣA+ΣB)`, `scaledSub: (a-b)/(a+b)`.
///
/// Zero denominators produce zero.
pub fn apply_binary(kind: BinaryKind, a: &GreyImage, b: &GreyImage) -> Result<GreyImage> {
    a.check_dims(b)?;
    let out: Vec<f64> = match kind {
        BinaryKind::Mult => zip(a, b, |x, y| x * y),
        BinaryKind::Blend => zip(a, b, |x, y| (x + y) / 2.0),
        BinaryKind::NormDiff => {
            let denom = a.sum() + b.sum();
            if denom == 0.0 {
                vec![0.0; a.len()]
            } else {
                zip(a, b, |x, y| (x - y) / denom)
            }
        }
        BinaryKind::ScaledSub => zip(a, b, |x, y| {
            let s = x + y;
            if s == 0.0 {
                0.0
            } else {
                (x - y) / s
            }
        }),
    };
    Ok(GreyImage::new(a.width(), a.height(), out)?.sanitized())
}

fn zip(a: &GreyImage, b: &GreyImage, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect()
}

/// Soft maximum `arctan(λ(u+θ))/λ`; `λ = 0` takes the limit `u + θ`.
pub fn apply_sigmoid(img: &GreyImage, theta: f64, lambda: f64) -> GreyImage {
    if lambda == 0.0 {
        img.map(|u| u + theta)
    } else {
        img.map(|u| (lambda * (u + theta)).atan() / lambda)
    }
    .sanitized()
}
