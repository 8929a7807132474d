//! Viola–Jones rectangle kernels evaluated through an integral image.

use rand::Rng;

use crate::raster::{reflect101, GreyImage, IntegralImage};

/// Side length of the square kernel extent; the kernel is anchored at its
/// center pixel.
pub const KERNEL_EXTENT: usize = 31;
const ANCHOR: usize = KERNEL_EXTENT / 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HaarKind {
    Horizontal2,
    Vertical2,
    Horizontal3,
    Vertical3,
    Quad,
}

impl HaarKind {
    pub const ALL: [HaarKind; 5] = [
        HaarKind::Horizontal2,
        HaarKind::Vertical2,
        HaarKind::Horizontal3,
        HaarKind::Vertical3,
        HaarKind::Quad,
    ];

    /// Cell grid `(columns, rows)`.
    pub fn grid(self) -> (usize, usize) {
        match self {
            HaarKind::Horizontal2 => (2, 1),
            HaarKind::Vertical2 => (1, 2),
            HaarKind::Horizontal3 => (3, 1),
            HaarKind::Vertical3 => (1, 3),
            HaarKind::Quad => (2, 2),
        }
    }

    /// Coefficient of cell `(col, row)`; adjacent cells alternate sign.
    pub fn coefficient(self, col: usize, row: usize) -> f64 {
        if (col + row).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HaarKind::Horizontal2 => "h2",
            HaarKind::Vertical2 => "v2",
            HaarKind::Horizontal3 => "h3",
            HaarKind::Vertical3 => "v3",
            HaarKind::Quad => "quad",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// A rectangle feature embedded in a zero-filled `31×31` kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ViolaJonesKernel {
    pub kind: HaarKind,
    pub cell_width: usize,
    pub cell_height: usize,
    pub offset_x: usize,
    pub offset_y: usize,
}

/// One signed rectangle in kernel coordinates, half-open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaarRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub coefficient: f64,
}

impl ViolaJonesKernel {
    pub fn window(&self) -> (usize, usize) {
        let (c, r) = self.kind.grid();
        (c * self.cell_width, r * self.cell_height)
    }

    pub fn is_valid(&self) -> bool {
        let (ww, wh) = self.window();
        self.cell_width >= 1
            && self.cell_height >= 1
            && self.offset_x + ww <= KERNEL_EXTENT
            && self.offset_y + wh <= KERNEL_EXTENT
    }

    pub fn rects(&self) -> Vec<HaarRect> {
        let (cols, rows) = self.kind.grid();
        let mut out = Vec::with_capacity(cols * rows);
        for row in 0..rows {
            for col in 0..cols {
                let x0 = self.offset_x + col * self.cell_width;
                let y0 = self.offset_y + row * self.cell_height;
                out.push(HaarRect {
                    x0,
                    y0,
                    x1: x0 + self.cell_width,
                    y1: y0 + self.cell_height,
                    coefficient: self.kind.coefficient(col, row),
                });
            }
        }
        out
    }

    /// The kernel as a dense row-major `31×31` array.
    pub fn dense(&self) -> Vec<f64> {
        let mut k = vec![0.0; KERNEL_EXTENT * KERNEL_EXTENT];
        for r in self.rects() {
            for y in r.y0..r.y1 {
                for x in r.x0..r.x1 {
                    k[y * KERNEL_EXTENT + x] = r.coefficient;
                }
            }
        }
        k
    }

    /// Kind uniformly, then cell size uniformly among sizes that fit, then
    /// offset uniformly among positions that fit.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let kind = HaarKind::ALL[rng.random_range(0..HaarKind::ALL.len())];
        let (cols, rows) = kind.grid();
        let cell_width = rng.random_range(1..=KERNEL_EXTENT / cols);
        let cell_height = rng.random_range(1..=KERNEL_EXTENT / rows);
        let offset_x = rng.random_range(0..=KERNEL_EXTENT - cols * cell_width);
        let offset_y = rng.random_range(0..=KERNEL_EXTENT - rows * cell_height);
        ViolaJonesKernel {
            kind,
            cell_width,
            cell_height,
            offset_x,
            offset_y,
        }
    }
}

/// Response at `(x, y)` is `Σ K(i, j)·I(x + i − 15, y + j − 15)`, the kernel
/// laid over the image with its center on the pixel, reflect-101 borders.
pub fn apply_haar(img: &GreyImage, kernel: &ViolaJonesKernel) -> GreyImage {
    let (w, h) = (img.width(), img.height());
    let pad = ANCHOR;
    let (pw, ph) = (w + 2 * pad, h + 2 * pad);
    let mut padded = Vec::with_capacity(pw * ph);
    for py in 0..ph {
        let sy = reflect101(py as isize - pad as isize, h);
        for px in 0..pw {
            padded.push(img.get(reflect101(px as isize - pad as isize, w), sy));
        }
    }
    let ii = IntegralImage::from_values(pw, ph, &padded);
    let rects = kernel.rects();
    // padded coordinate of kernel cell (i, j) at pixel (x, y) is (x + i, y + j)
    GreyImage::from_fn(w, h, |x, y| {
        rects
            .iter()
            .map(|r| r.coefficient * ii.rect_sum(x + r.x0, y + r.y0, x + r.x1, y + r.y1))
            .sum()
    })
}

/// Dense evaluation of the same response; the reference for [`apply_haar`].
pub fn apply_haar_dense(img: &GreyImage, kernel: &ViolaJonesKernel) -> GreyImage {
    let k = kernel.dense();
    let (w, h) = (img.width(), img.height());
    GreyImage::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for j in 0..KERNEL_EXTENT {
            let sy = reflect101(y as isize + j as isize - ANCHOR as isize, h);
            for i in 0..KERNEL_EXTENT {
                let c = k[j * KERNEL_EXTENT + i];
                if c != 0.0 {
                    acc += c * img.get(reflect101(x as isize + i as isize - ANCHOR as isize, w), sy);
                }
            }
        }
        acc
    })
}
