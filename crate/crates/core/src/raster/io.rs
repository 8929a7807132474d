//! PNG and plain-text raster I/O.
//!
//! Text rasters: first line `w h`, then `w*h` whitespace-separated reals in
//! row-major order. Files ending in `.txt` use this format; everything else
//! is read as PNG.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::{GreyImage, Label, LabelMask};
use crate::error::{Error, Result};

fn is_text(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("txt"))
}

struct RawRaster {
    width: usize,
    height: usize,
    samples: Vec<u16>,
    max: u16,
}

fn read_png(path: &Path) -> Result<RawRaster> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decode_err = |e: png::DecodingError| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut reader = decoder.read_info().map_err(decode_err)?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    let channels = match color {
        png::ColorType::Grayscale => 1,
        png::ColorType::GrayscaleAlpha => 2,
        png::ColorType::Rgb | png::ColorType::Indexed => 3,
        png::ColorType::Rgba => 4,
    };
    if channels != 1 {
        return Err(Error::MultiChannel {
            path: path.to_path_buf(),
            channels,
        });
    }
    let size = reader.output_buffer_size().ok_or_else(|| Error::Decode {
        path: path.to_path_buf(),
        message: "image too large".into(),
    })?;
    let mut buf = vec![0u8; size];
    let frame = reader.next_frame(&mut buf).map_err(decode_err)?;
    let (width, height) = (frame.width as usize, frame.height as usize);
    let bytes = &buf[..frame.buffer_size()];
    let (samples, max) = match depth {
        png::BitDepth::Eight => (
            (0..height)
                .flat_map(|y| bytes[y * frame.line_size..][..width].iter().map(|&b| b as u16))
                .collect(),
            255,
        ),
        png::BitDepth::Sixteen => (
            (0..height)
                .flat_map(|y| {
                    bytes[y * frame.line_size..][..2 * width]
                        .chunks_exact(2)
                        .map(|c| u16::from_be_bytes([c[0], c[1]]))
                })
                .collect(),
            u16::MAX,
        ),
        other => {
            return Err(Error::UnsupportedBitDepth {
                path: path.to_path_buf(),
                depth: other as u8,
            })
        }
    };
    Ok(RawRaster {
        width,
        height,
        samples,
        max,
    })
}

/// Loads an 8- or 16-bit grayscale PNG (or a text raster) scaled to `[0, 1]`.
pub fn load_image(path: impl AsRef<Path>) -> Result<GreyImage> {
    let path = path.as_ref();
    if is_text(path) {
        return read_text_raster(path);
    }
    let raw = read_png(path)?;
    let scale = raw.max as f64;
    let data = raw.samples.iter().map(|&s| s as f64 / scale).collect();
    GreyImage::new(raw.width, raw.height, data)
}

/// Loads a label mask: 0 = background, 128 = object, 255 = confuser.
pub fn load_mask(path: impl AsRef<Path>) -> Result<LabelMask> {
    let path = path.as_ref();
    let (width, height, codes): (usize, usize, Vec<u16>) = if is_text(path) {
        let img = read_text_raster(path)?;
        let codes = img
            .data()
            .iter()
            .map(|&v| {
                if v.fract() == 0.0 && (0.0..=65535.0).contains(&v) {
                    v as u16
                } else {
                    u16::MAX
                }
            })
            .collect();
        (img.width(), img.height(), codes)
    } else {
        let raw = read_png(path)?;
        if raw.max != 255 {
            return Err(Error::UnsupportedBitDepth {
                path: path.to_path_buf(),
                depth: 16,
            });
        }
        (raw.width, raw.height, raw.samples)
    };
    let mut labels = Vec::with_capacity(codes.len());
    for (i, &c) in codes.iter().enumerate() {
        match Label::from_code(c) {
            Some(l) => labels.push(l),
            None => {
                return Err(Error::InvalidMaskValue {
                    path: path.to_path_buf(),
                    value: c,
                    x: i % width,
                    y: i / width,
                })
            }
        }
    }
    LabelMask::new(width, height, labels)
}

fn write_png(path: &Path, width: usize, height: usize, depth: png::BitDepth, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), width as u32, height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(depth);
    let to_io = |e: png::EncodingError| Error::io(path, std::io::Error::other(e.to_string()));
    let mut writer = enc.write_header().map_err(to_io)?;
    writer.write_image_data(bytes).map_err(to_io)?;
    writer.finish().map_err(to_io)
}

/// Saves an image as grayscale PNG. Values are clamped to `[0, 1]`.
pub fn save_image_png(img: &GreyImage, path: impl AsRef<Path>, sixteen_bit: bool) -> Result<()> {
    let path = path.as_ref();
    let q = |v: f64, max: f64| (v.clamp(0.0, 1.0) * max).round();
    if sixteen_bit {
        let bytes: Vec<u8> = img
            .data()
            .iter()
            .flat_map(|&v| (q(v, 65535.0) as u16).to_be_bytes())
            .collect();
        write_png(path, img.width(), img.height(), png::BitDepth::Sixteen, &bytes)
    } else {
        let bytes: Vec<u8> = img.data().iter().map(|&v| q(v, 255.0) as u8).collect();
        write_png(path, img.width(), img.height(), png::BitDepth::Eight, &bytes)
    }
}

pub fn save_mask(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = mask.labels().iter().map(|l| l.code()).collect();
    write_png(path.as_ref(), mask.width(), mask.height(), png::BitDepth::Eight, &bytes)
}

pub fn read_text_raster(path: impl AsRef<Path>) -> Result<GreyImage> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_text_raster(&text)
}

pub(crate) fn parse_text_raster(text: &str) -> Result<GreyImage> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::RasterText("missing header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::RasterText(format!("bad header {header:?}")))
        })
        .collect::<Result<_>>()?;
    let [width, height] = dims[..] else {
        return Err(Error::RasterText(format!("header must be `w h`, got {header:?}")));
    };
    let data: Vec<f64> = lines
        .flat_map(str::split_whitespace)
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::RasterText(format!("bad sample {t:?}")))
        })
        .collect::<Result<_>>()?;
    GreyImage::new(width, height, data)
}

/// Writes the text raster format; samples use shortest round-trip notation.
pub fn write_text_raster(img: &GreyImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("{} {}\n", img.width(), img.height());
    for row in img.data().chunks(img.width()) {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
