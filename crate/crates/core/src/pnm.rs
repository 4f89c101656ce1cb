//! Netpbm reading and writing.
//!
//! Reads PGM (P2/P5) and PPM (P3/P6) with any maxval up to 65535. Color
//! input is converted to luminance with Rec. 601 weights. Writes binary PGM
//! (P5) and PPM (P6).

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::edge::{EdgeMap, GrayImage};

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported format: {0}")]
    Unsupported(String),
}

/// Packed RGB image, used for detection overlays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.data().iter().map(|&v| [v, v, v]).collect(),
        }
    }

    pub fn put(&mut self, x: i64, y: i64, color: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            self.data[y as usize * self.width + x as usize] = color;
        }
    }
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: u32,
    /// Offset of the first raster byte.
    offset: usize,
}

fn skip_whitespace_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_uint(bytes: &[u8], pos: usize, what: &str) -> Result<(u32, usize), PnmError> {
    let start = skip_whitespace_and_comments(bytes, pos);
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(PnmError::MalformedHeader(format!("expected {what}")));
    }
    let text = std::str::from_utf8(&bytes[start..end]).expect("ascii digits");
    let value = text
        .parse::<u32>()
        .map_err(|_| PnmError::MalformedHeader(format!("{what} out of range: {text}")))?;
    Ok((value, end))
}

fn parse_header(bytes: &[u8]) -> Result<Header, PnmError> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(PnmError::Unsupported("missing netpbm magic number".into()));
    }
    let magic = [bytes[0], bytes[1]];
    if !matches!(magic[1], b'2' | b'3' | b'5' | b'6') {
        return Err(PnmError::Unsupported(format!(
            "P{} (only P2, P3, P5 and P6 are read)",
            magic[1] as char
        )));
    }
    let (width, pos) = read_uint(bytes, 2, "width")?;
    let (height, pos) = read_uint(bytes, pos, "height")?;
    let (maxval, pos) = read_uint(bytes, pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(PnmError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(PnmError::MalformedHeader(format!("maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from binary data.
    if pos >= bytes.len() && matches!(magic[1], b'5' | b'6') {
        return Err(PnmError::MalformedHeader("missing raster".into()));
    }
    Ok(Header {
        magic,
        width: width as usize,
        height: height as usize,
        maxval,
        offset: pos + 1,
    })
}

fn scale(v: u32, maxval: u32) -> u8 {
    if maxval == 255 {
        v.min(255) as u8
    } else {
        ((v.min(maxval) as f64) * 255.0 / maxval as f64).round() as u8
    }
}

fn luma(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
        .round()
        .min(255.0) as u8
}

fn read_samples(bytes: &[u8], h: &Header, count: usize) -> Result<Vec<u32>, PnmError> {
    let mut samples = Vec::with_capacity(count);
    match h.magic[1] {
        b'2' | b'3' => {
            let mut pos = h.offset - 1;
            for _ in 0..count {
                let (v, next) = read_uint(bytes, pos, "sample").map_err(|_| {
                    PnmError::MalformedHeader(format!(
                        "header declares {count} samples but only {} are present",
                        samples.len()
                    ))
                })?;
                samples.push(v);
                pos = next;
            }
        }
        _ => {
            let width = if h.maxval > 255 { 2 } else { 1 };
            let raster = &bytes[h.offset.min(bytes.len())..];
            if raster.len() < count * width {
                return Err(PnmError::MalformedHeader(format!(
                    "header declares {count} samples but only {} are present",
                    raster.len() / width
                )));
            }
            for i in 0..count {
                let v = if width == 2 {
                    u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]]) as u32
                } else {
                    raster[i] as u32
                };
                samples.push(v);
            }
        }
    }
    Ok(samples)
}

/// Decodes PGM/PPM bytes to a grayscale image.
pub fn decode_gray(bytes: &[u8]) -> Result<GrayImage, PnmError> {
    let h = parse_header(bytes)?;
    let pixels = h.width * h.height;
    let color = matches!(h.magic[1], b'3' | b'6');
    let samples = read_samples(bytes, &h, if color { 3 * pixels } else { pixels })?;
    let data = if color {
        samples
            .chunks_exact(3)
            .map(|c| {
                luma(
                    scale(c[0], h.maxval),
                    scale(c[1], h.maxval),
                    scale(c[2], h.maxval),
                )
            })
            .collect()
    } else {
        samples.iter().map(|&v| scale(v, h.maxval)).collect()
    };
    GrayImage::from_raw(h.width, h.height, data)
        .map_err(|e| PnmError::MalformedHeader(e.to_string()))
}

pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage, PnmError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| PnmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_gray(&bytes)
}

/// Loads an edge map stored as PGM; pixels `>= 128` are edges.
pub fn load_edge_map(path: impl AsRef<Path>) -> Result<EdgeMap, PnmError> {
    load_gray(path).map(|img| EdgeMap::from_gray(&img))
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    for px in &img.data {
        out.extend_from_slice(px);
    }
    out
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), PnmError> {
    fs::write(path, bytes).map_err(|source| PnmError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn save_gray(path: impl AsRef<Path>, img: &GrayImage) -> Result<(), PnmError> {
    write(path.as_ref(), &encode_pgm(img))
}

pub fn save_edge_map(path: impl AsRef<Path>, edges: &EdgeMap) -> Result<(), PnmError> {
    save_gray(path, &edges.to_gray())
}

pub fn save_ppm(path: impl AsRef<Path>, img: &RgbImage) -> Result<(), PnmError> {
    write(path.as_ref(), &encode_ppm(img))
}
