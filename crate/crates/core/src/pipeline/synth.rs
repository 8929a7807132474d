//! Synthetic aerial-like scenes: bright elliptical cars on a textured
//! background, bright rectangular buildings labeled as confusers.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::manifest::{DatasetManifest, ManifestEntry, Split};
use crate::raster::{save_image_png, save_mask};
use crate::{Error, GreyImage, Label, LabelMask, Result};

const PLACEMENT_TRIES: usize = 2000;
const BACKGROUND_MAX: f64 = 0.6;
const OCCLUDER_LEVEL: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    /// Cars per image.
    pub objects: usize,
    pub car_length: f64,
    pub car_width: f64,
    pub buildings: usize,
    pub building_min: usize,
    pub building_max: usize,
    /// Probability that a car is partly hidden by an occluder.
    pub occlusion: f64,
    /// Standard deviation of additive Gaussian noise.
    pub noise: f64,
    /// Minimum distance between car centers, except within a parking row.
    pub spacing: f64,
    /// Parking rows per image: parallel cars packed side by side.
    pub rows: usize,
    pub row_length: usize,
    /// Free space between the sides of neighboring cars in a row.
    pub row_gap: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            width: 128,
            height: 128,
            train: 10,
            validation: 5,
            test: 5,
            objects: 10,
            car_length: 8.0,
            car_width: 4.0,
            buildings: 2,
            building_min: 32,
            building_max: 45,
            occlusion: 0.3,
            noise: 0.15,
            spacing: 12.0,
            rows: 2,
            row_length: 3,
            row_gap: 2.5,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("synth: {m}")));
        if self.width < 16 || self.height < 16 {
            return bad("images must be at least 16x16");
        }
        if self.total() == 0 {
            return bad("no images requested");
        }
        if !(self.car_length >= self.car_width && self.car_width >= 1.0) {
            return bad("car length must be at least its width, width at least 1");
        }
        if self.building_min == 0 || self.building_min > self.building_max {
            return bad("building size range is empty");
        }
        if !(0.0..=1.0).contains(&self.occlusion) || !(self.noise >= 0.0) || !(self.spacing >= 0.0) {
            return bad("occlusion must be a probability, noise and spacing nonnegative");
        }
        if self.rows > 0 && (self.row_length == 0 || !(self.row_gap >= 2.0)) {
            return bad("parking rows need at least one car and a gap of at least 2 px");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedCar {
    pub center: (f64, f64),
    pub orientation: f64,
    pub occluded: bool,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub image: GreyImage,
    pub mask: LabelMask,
    pub cars: Vec<PlacedCar>,
}

/// Smooth value noise: bilinear interpolation of a random lattice.
fn value_noise(rng: &mut ChaCha8Rng, w: usize, h: usize, cell: f64) -> Vec<f64> {
    let gw = (w as f64 / cell).ceil() as usize + 2;
    let gh = (h as f64 / cell).ceil() as usize + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64 / cell, y as f64 / cell);
            let (ix, iy) = (fx as usize, fy as usize);
            let (tx, ty) = (fx - ix as f64, fy - iy as f64);
            let g = |i: usize, j: usize| grid[j * gw + i];
            let top = g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx;
            let bottom = g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

pub fn render_scene(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Scene {
    let (w, h) = (spec.width, spec.height);
    let coarse = value_noise(rng, w, h, 24.0);
    let fine = value_noise(rng, w, h, 5.0);
    let mut img: Vec<f64> = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (0.15 + 0.3 * c + 0.12 * f).clamp(0.05, BACKGROUND_MAX))
        .collect();
    let mut labels = vec![Label::Background; w * h];

    let mut boxes: Vec<(usize, usize, usize, usize)> = Vec::new();
    for _ in 0..spec.buildings {
        for _ in 0..PLACEMENT_TRIES {
            let bw = rng.random_range(spec.building_min..=spec.building_max).min(w);
            let bh = rng.random_range(spec.building_min..=spec.building_max).min(h);
            let x0 = rng.random_range(0..=w - bw);
            let y0 = rng.random_range(0..=h - bh);
            let overlaps = boxes
                .iter()
                .any(|&(ax, ay, aw, ah)| x0 < ax + aw + 2 && ax < x0 + bw + 2 && y0 < ay + ah + 2 && ay < y0 + bh + 2);
            if overlaps {
                continue;
            }
            let level = rng.random_range(0.65..0.9);
            let tilt = rng.random_range(-0.05..0.05);
            for y in y0..y0 + bh {
                for x in x0..x0 + bw {
                    img[y * w + x] = (level + tilt * (x - x0) as f64 / bw as f64).clamp(0.0, 1.0);
                    labels[y * w + x] = Label::Confuser;
                }
            }
            boxes.push((x0, y0, bw, bh));
            break;
        }
    }
    if boxes.len() < spec.buildings {
        log::warn!("placed {} of {} buildings", boxes.len(), spec.buildings);
    }

    let margin = spec.car_length / 2.0 + 2.0;
    let mut cars: Vec<PlacedCar> = Vec::new();
    let pitch = spec.car_width + spec.row_gap;
    let mut groups: Vec<usize> = Vec::new();
    let mut left = spec.objects;
    for _ in 0..spec.rows {
        let n = spec.row_length.min(left);
        if n > 0 {
            groups.push(n);
            left -= n;
        }
    }
    groups.extend(std::iter::repeat_n(1, left));
    for n in groups {
        let mut placed = None;
        for _ in 0..PLACEMENT_TRIES {
            let cx = rng.random_range(0.0..w as f64);
            let cy = rng.random_range(0.0..h as f64);
            let orientation = rng.random_range(0.0..std::f64::consts::PI);
            let (s, c) = orientation.sin_cos();
            let centers: Vec<(f64, f64)> = (0..n)
                .map(|k| (cx - k as f64 * pitch * s, cy + k as f64 * pitch * c))
                .collect();
            let ok = centers.iter().all(|&(x, y)| {
                let inside = x >= margin && y >= margin && x < w as f64 - margin && y < h as f64 - margin;
                let near_building = boxes.iter().any(|&(x0, y0, bw, bh)| {
                    x + margin > x0 as f64
                        && x - margin < (x0 + bw) as f64
                        && y + margin > y0 as f64
                        && y - margin < (y0 + bh) as f64
                });
                let crowded = cars
                    .iter()
                    .any(|c| (c.center.0 - x).hypot(c.center.1 - y) < spec.spacing.max(spec.car_length + 2.0));
                inside && !near_building && !crowded
            });
            if ok {
                placed = Some((centers, orientation));
                break;
            }
        }
        let Some((centers, orientation)) = placed else { break };
        for center in centers {
            let occluded = rng.random_bool(spec.occlusion);
            draw_car(spec, rng, &mut img, &mut labels, center, orientation, occluded);
            cars.push(PlacedCar {
                center,
                orientation,
                occluded,
            });
        }
    }
    if cars.len() < spec.objects {
        log::warn!("placed {} of {} cars", cars.len(), spec.objects);
    }

    if spec.noise > 0.0 {
        for v in &mut img {
            let n: f64 = StandardNormal.sample(rng);
            *v = (*v + spec.noise * n).clamp(0.0, 1.0);
        }
    }
    Scene {
        image: GreyImage::new(w, h, img).expect("scene dimensions"),
        mask: LabelMask::new(w, h, labels).expect("scene dimensions"),
        cars,
    }
}

/// Paints one elliptical car, and its occluder if any, into `img` and `labels`.
fn draw_car(
    spec: &SynthSpec,
    rng: &mut ChaCha8Rng,
    img: &mut [f64],
    labels: &mut [Label],
    center: (f64, f64),
    orientation: f64,
    occluded: bool,
) {
    let (w, h) = (spec.width, spec.height);
    let (a, b) = (spec.car_length / 2.0, spec.car_width / 2.0);
    let cut = if occluded {
        a * rng.random_range(0.1..0.5)
    } else {
        f64::INFINITY
    };
    let level = 0.72 + rng.random_range(0.0..0.2);
    let (s, c) = orientation.sin_cos();
    let r = a.ceil() as isize + 3;
    let (ix, iy) = (center.0.round() as isize, center.1.round() as isize);
    for y in iy - r..=iy + r {
        for x in ix - r..=ix + r {
            if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                continue;
            }
            let (dx, dy) = (x as f64 - center.0, y as f64 - center.1);
            let u = dx * c + dy * s;
            let v = -dx * s + dy * c;
            let p = y as usize * w + x as usize;
            let inside = (u / a).powi(2) + (v / b).powi(2) <= 1.0;
            // occluder: a dark disk over the car's front end
            let end = (u - a).hypot(v);
            if occluded && (u > cut && inside || end <= 3.0) {
                img[p] = OCCLUDER_LEVEL;
                labels[p] = Label::Background;
            } else if inside {
                img[p] = level;
                labels[p] = Label::Object;
            }
        }
    }
}

/// Renders every scene of `spec` and returns `(split, scene)` pairs.
pub fn render_dataset(spec: &SynthSpec) -> Result<Vec<(Split, Scene)>> {
    spec.validate()?;
    let splits = std::iter::repeat_n(Split::Train, spec.train)
        .chain(std::iter::repeat_n(Split::Validation, spec.validation))
        .chain(std::iter::repeat_n(Split::Test, spec.test));
    Ok(splits
        .enumerate()
        .map(|(i, split)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64 + 1);
            (split, render_scene(spec, &mut rng))
        })
        .collect())
}

/// Writes 8-bit PNG images and masks plus `manifest.csv` under `out`.
pub fn synth_generate(spec: &SynthSpec, out: impl AsRef<Path>) -> Result<DatasetManifest> {
    let out = out.as_ref();
    let scenes = render_dataset(spec)?;
    for dir in ["images", "masks"] {
        std::fs::create_dir_all(out.join(dir)).map_err(|e| Error::io(out.join(dir), e))?;
    }
    let mut entries = Vec::new();
    for (i, (split, scene)) in scenes.iter().enumerate() {
        let name = format!("scene_{i:03}.png");
        let image = out.join("images").join(&name);
        let mask = out.join("masks").join(&name);
        save_image_png(&scene.image, &image, false)?;
        save_mask(&scene.mask, &mask)?;
        entries.push(ManifestEntry {
            image,
            mask,
            split: *split,
        });
    }
    let manifest = DatasetManifest { entries };
    let path = out.join("manifest.csv");
    std::fs::write(&path, manifest.to_csv(out)).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
