//! Linear neighborhood filters. All use convolution (kernel flipped) with
//! reflect-101 borders.

use std::f64::consts::PI;

use crate::raster::{reflect101, GreyImage};

/// The five standard Laws texture vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LawsVector {
    L5,
    E5,
    S5,
    R5,
    W5,
}

impl LawsVector {
    pub const ALL: [LawsVector; 5] = [
        LawsVector::L5,
        LawsVector::E5,
        LawsVector::S5,
        LawsVector::R5,
        LawsVector::W5,
    ];

    pub fn taps(self) -> [f64; 5] {
        match self {
            LawsVector::L5 => [1.0, 4.0, 6.0, 4.0, 1.0],
            LawsVector::E5 => [-1.0, -2.0, 0.0, 2.0, 1.0],
            LawsVector::S5 => [-1.0, 0.0, 2.0, 0.0, -1.0],
            LawsVector::R5 => [1.0, -4.0, 6.0, -4.0, 1.0],
            LawsVector::W5 => [-1.0, 2.0, 0.0, -2.0, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LawsVector::L5 => "L5",
            LawsVector::E5 => "E5",
            LawsVector::S5 => "S5",
            LawsVector::R5 => "R5",
            LawsVector::W5 => "W5",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GaborEnvelope {
    Sin,
    Cos,
    Both,
}

impl GaborEnvelope {
    pub const ALL: [GaborEnvelope; 3] = [GaborEnvelope::Sin, GaborEnvelope::Cos, GaborEnvelope::Both];

    pub fn name(self) -> &'static str {
        match self {
            GaborEnvelope::Sin => "sin",
            GaborEnvelope::Cos => "cos",
            GaborEnvelope::Both => "both",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == name)
    }
}

/// Horizontal 1-D convolution with an odd-length kernel. Taps at equal
/// distance from the center are paired, so antisymmetric kernels give an
/// exact zero on constant rows.
fn convolve_rows(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let r = kernel.len() / 2;
    let mut out = vec![0.0; src.len()];
    let mut padded = vec![0.0; width + 2 * r];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for (i, p) in padded.iter_mut().enumerate() {
            *p = row[reflect101(i as isize - r as isize, width)];
        }
        for x in 0..width {
            let c = x + r;
            let mut acc = kernel[r] * padded[c];
            for i in 1..=r {
                acc += kernel[r + i] * padded[c - i] + kernel[r - i] * padded[c + i];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

fn transpose(src: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            out[x * height + y] = src[y * width + x];
        }
    }
    out
}

/// Separable convolution: `horizontal` along x, then `vertical` along y.
pub fn convolve_separable(img: &GreyImage, horizontal: &[f64], vertical: &[f64]) -> GreyImage {
    let (w, h) = (img.width(), img.height());
    let rows = convolve_rows(img.data(), w, h, horizontal);
    let cols = convolve_rows(&transpose(&rows, w, h), h, w, vertical);
    GreyImage::new(w, h, transpose(&cols, h, w)).expect("dimensions preserved")
}

/// Dense 2-D convolution with an odd-sized row-major kernel.
pub fn convolve2d(img: &GreyImage, kernel: &[f64], kw: usize, kh: usize) -> GreyImage {
    debug_assert!(kw % 2 == 1 && kh % 2 == 1 && kernel.len() == kw * kh);
    let (w, h) = (img.width(), img.height());
    let (rx, ry) = (kw / 2, kh / 2);
    let pw = w + 2 * rx;
    let mut padded = vec![0.0; pw * (h + 2 * ry)];
    for py in 0..h + 2 * ry {
        let sy = reflect101(py as isize - ry as isize, h);
        for px in 0..pw {
            padded[py * pw + px] = img.get(reflect101(px as isize - rx as isize, w), sy);
        }
    }
    // convolution = correlation with the kernel rotated by 180 degrees
    let flipped: Vec<f64> = kernel.iter().rev().copied().collect();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for ky in 0..kh {
            let krow = &flipped[ky * kw..(ky + 1) * kw];
            let prow = &padded[(y + ky) * pw..(y + ky + 1) * pw];
            let orow = &mut out[y * w..(y + 1) * w];
            for (kx, &k) in krow.iter().enumerate() {
                if k == 0.0 {
                    continue;
                }
                for (o, &p) in orow.iter_mut().zip(&prow[kx..kx + w]) {
                    *o += k * p;
                }
            }
        }
    }
    GreyImage::new(w, h, out).expect("dimensions preserved")
}

/// Laws texture energy with kernel `u·vᵀ` (u down the rows, v across).
pub fn laws(img: &GreyImage, u: LawsVector, v: LawsVector) -> GreyImage {
    convolve_separable(img, &v.taps(), &u.taps())
}

/// Sampled Gaussian and its first and second derivatives at scale `sigma`,
/// radius `ceil(4σ)`. The smoothing kernel sums to one and the second
/// derivative is adjusted to sum to zero.
pub fn gaussian_kernels(sigma: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let r = (4.0 * sigma).ceil().max(1.0) as isize;
    let s2 = sigma * sigma;
    let raw: Vec<f64> = (-r..=r).map(|i| (-((i * i) as f64) / (2.0 * s2)).exp()).collect();
    let norm: f64 = raw.iter().sum();
    let g: Vec<f64> = raw.iter().map(|v| v / norm).collect();
    let g1: Vec<f64> = (-r..=r).zip(&g).map(|(i, &v)| -(i as f64) / s2 * v).collect();
    let mut g2: Vec<f64> = (-r..=r)
        .zip(&g)
        .map(|(i, &v)| ((i * i) as f64 / (s2 * s2) - 1.0 / s2) * v)
        .collect();
    let mean = g2.iter().sum::<f64>() / g2.len() as f64;
    let mid = g2.len() / 2;
    for (j, t) in g2.iter_mut().enumerate() {
        // keep the kernel exactly symmetric
        if j <= mid {
            *t -= mean;
        }
    }
    for j in mid + 1..g2.len() {
        g2[j] = g2[2 * mid - j];
    }
    (g, g1, g2)
}

pub fn gaussian_smooth(img: &GreyImage, sigma: f64) -> GreyImage {
    let (g, _, _) = gaussian_kernels(sigma);
    convolve_separable(img, &g, &g)
}

/// Gaussian gradient magnitude.
pub fn ggm(img: &GreyImage, sigma: f64) -> GreyImage {
    let (g, g1, _) = gaussian_kernels(sigma);
    let gx = convolve_separable(img, &g1, &g);
    let gy = convolve_separable(img, &g, &g1);
    let data = gx.data().iter().zip(gy.data()).map(|(a, b)| a.hypot(*b)).collect();
    GreyImage::new(img.width(), img.height(), data).expect("dimensions preserved")
}

/// Laplacian from Gaussian second derivatives.
pub fn laplace(img: &GreyImage, sigma: f64) -> GreyImage {
    let (g, _, g2) = gaussian_kernels(sigma);
    let xx = convolve_separable(img, &g2, &g);
    let yy = convolve_separable(img, &g, &g2);
    let data = xx.data().iter().zip(yy.data()).map(|(a, b)| a + b).collect();
    GreyImage::new(img.width(), img.height(), data).expect("dimensions preserved")
}

/// Gabor parameters: carrier orientation, envelope size, envelope aspect
/// ratio, carrier wavelength in pixels, and response type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaborParams {
    pub theta: f64,
    pub size: f64,
    pub ratio: f64,
    pub wavelength: f64,
    pub envelope: GaborEnvelope,
}

impl GaborParams {
    /// Envelope standard deviations `(along, across)` the carrier direction.
    pub fn sigmas(&self) -> (f64, f64) {
        let scale = self.ratio.max(1.0);
        let along = (self.size * self.ratio / scale / 4.0).max(0.5);
        let across = (self.size / scale / 4.0).max(0.5);
        (along, across)
    }

    /// Odd and even kernels on a square grid of side `2·ceil(3σmax)+1`.
    /// Both are normalized by the envelope sum.
    pub fn kernels(&self) -> (Vec<f64>, Vec<f64>, usize) {
        let (sa, sc) = self.sigmas();
        let r = (3.0 * sa.max(sc)).ceil().max(1.0) as isize;
        let side = (2 * r + 1) as usize;
        let (s, c) = self.theta.sin_cos();
        let mut env = Vec::with_capacity(side * side);
        let mut phase = Vec::with_capacity(side * side);
        for y in -r..=r {
            for x in -r..=r {
                let (fx, fy) = (x as f64, y as f64);
                let u = fx * c + fy * s;
                let v = -fx * s + fy * c;
                env.push((-(u * u) / (2.0 * sa * sa) - (v * v) / (2.0 * sc * sc)).exp());
                phase.push(2.0 * PI * u / self.wavelength);
            }
        }
        let norm: f64 = env.iter().sum();
        let odd = env.iter().zip(&phase).map(|(e, p)| e * p.sin() / norm).collect();
        let even = env.iter().zip(&phase).map(|(e, p)| e * p.cos() / norm).collect();
        (odd, even, side)
    }
}

pub fn gabor(img: &GreyImage, params: &GaborParams) -> GreyImage {
    let (odd, even, side) = params.kernels();
    match params.envelope {
        GaborEnvelope::Sin => convolve2d(img, &odd, side, side),
        GaborEnvelope::Cos => convolve2d(img, &even, side, side),
        GaborEnvelope::Both => {
            let a = convolve2d(img, &odd, side, side);
            let b = convolve2d(img, &even, side, side);
            let data = a.data().iter().zip(b.data()).map(|(p, q)| p.hypot(*q)).collect();
            GreyImage::new(img.width(), img.height(), data).expect("dimensions preserved")
        }
    }
}
