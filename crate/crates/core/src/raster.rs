//! Layout rasterization and bit-exact PGM image I/O.
//!
//! The graph is drawn black-on-white: edges as thick segments, nodes as
//! filled disks. Segment and disk membership is decided by an exact
//! per-pixel distance test inside each primitive's bounding box.

use std::path::Path;

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub intensities: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        Self { width, height, intensities: vec![fill; width * height] }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.intensities[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![0; width * height] }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<u8>) -> Self {
        assert_eq!(bits.len(), width * height);
        assert!(bits.iter().all(|&b| b <= 1));
        Self { width, height, bits }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.bits[y * self.width + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RasterParams {
    pub threshold: u8,
    pub node_radius_px: u32,
    pub line_thickness_px: u32,
    pub supersample: u32,
}

impl Default for RasterParams {
    fn default() -> Self {
        Self { threshold: 128, node_radius_px: 2, line_thickness_px: 1, supersample: 1 }
    }
}

impl RasterParams {
    pub fn margin(&self) -> u32 {
        self.node_radius_px + 1
    }
}

fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

fn dist2_point_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    let abx = bx - ax;
    let aby = by - ay;
    let apx = px - ax;
    let apy = py - ay;
    let len2 = abx * abx + aby * aby;
    let t = if len2 == 0.0 { 0.0 } else { ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0) };
    let dx = apx - t * abx;
    let dy = apy - t * aby;
    dx * dx + dy * dy
}

/// Render the graph into a grayscale image. Node coordinates are rounded
/// half-up to pixel centers; the image is the canvas padded by
/// `node_radius_px + 1` on every side.
pub fn rasterize(layout: &Layout, t: &Topology, p: &RasterParams) -> GrayImage {
    assert_eq!(layout.positions.len(), t.node_count);
    let margin = p.margin() as i64;
    let width = layout.canvas_width.ceil() as usize + 2 * margin as usize;
    let height = layout.canvas_height.ceil() as usize + 2 * margin as usize;
    let s = p.supersample.max(1) as usize;
    let ws = width * s;
    let hs = height * s;

    let centers: Vec<(i64, i64)> = layout
        .positions
        .iter()
        .map(|&(x, y)| (round_half_up(x) + margin, round_half_up(y) + margin))
        .collect();

    // subsample i covers x = (i + 0.5)/s - 0.5
    let coord = |i: usize| (i as f64 + 0.5) / s as f64 - 0.5;
    let index_lo = |x: f64| (((x + 0.5) * s as f64 - 0.5).floor().max(0.0)) as usize;
    let index_hi = |x: f64, max: usize| ((((x + 0.5) * s as f64 - 0.5).ceil()) as usize).min(max - 1);

    let mut mask = vec![0u8; ws * hs];
    let half_thick = p.line_thickness_px as f64 / 2.0;
    let mut paint = |x0: f64, y0: f64, x1: f64, y1: f64, reach: f64, disk: bool| {
        let lo_x = index_lo(x0.min(x1) - reach - 1.0);
        let hi_x = index_hi(x0.max(x1) + reach + 1.0, ws);
        let lo_y = index_lo(y0.min(y1) - reach - 1.0);
        let hi_y = index_hi(y0.max(y1) + reach + 1.0, hs);
        let reach2 = reach * reach;
        for iy in lo_y..=hi_y {
            let py = coord(iy);
            for ix in lo_x..=hi_x {
                let px = coord(ix);
                let d2 = if disk {
                    let dx = px - x0;
                    let dy = py - y0;
                    dx * dx + dy * dy
                } else {
                    dist2_point_segment(px, py, x0, y0, x1, y1)
                };
                if d2 <= reach2 {
                    mask[iy * ws + ix] = 1;
                }
            }
        }
    };

    for &(u, v) in &t.edges {
        let (ax, ay) = centers[u as usize];
        let (bx, by) = centers[v as usize];
        paint(ax as f64, ay as f64, bx as f64, by as f64, half_thick, false);
    }
    for &(cx, cy) in &centers {
        paint(cx as f64, cy as f64, cx as f64, cy as f64, p.node_radius_px as f64, true);
    }

    let mut img = GrayImage::new(width, height, 255);
    if s == 1 {
        for (dst, &m) in img.intensities.iter_mut().zip(&mask) {
            if m == 1 {
                *dst = 0;
            }
        }
    } else {
        let samples = (s * s) as f64;
        for y in 0..height {
            for x in 0..width {
                let mut count = 0usize;
                for sy in 0..s {
                    let row = (y * s + sy) * ws + x * s;
                    for sx in 0..s {
                        count += mask[row + sx] as usize;
                    }
                }
                let v = (255.0 * (1.0 - count as f64 / samples)).round() as u8;
                img.intensities[y * width + x] = v;
            }
        }
    }
    img
}

/// Binarize: output bit is 1 iff intensity is strictly above the threshold.
pub fn threshold(img: &GrayImage, theta: u8) -> BinaryImage {
    BinaryImage {
        width: img.width,
        height: img.height,
        bits: img.intensities.iter().map(|&v| (v > theta) as u8).collect(),
    }
}

pub fn invert(img: &BinaryImage) -> BinaryImage {
    BinaryImage {
        width: img.width,
        height: img.height,
        bits: img.bits.iter().map(|&b| 1 - b).collect(),
    }
}

/// Write an 8-bit binary PGM (P5, maxval 255).
pub fn write_pgm_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, pgm_bytes_gray(img))?;
    Ok(())
}

pub fn pgm_bytes_gray(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.intensities);
    out
}

/// BinaryImage is stored with 0 -> 0 and 1 -> 255.
pub fn pgm_bytes_binary(img: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend(img.bits.iter().map(|&b| if b == 1 { 255u8 } else { 0u8 }));
    out
}

pub fn write_pgm_binary(img: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, pgm_bytes_binary(img))?;
    Ok(())
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    parse_pgm(&std::fs::read(path)?)
}

pub fn read_pgm_binary(path: impl AsRef<Path>) -> Result<BinaryImage> {
    let gray = read_pgm(path)?;
    Ok(BinaryImage {
        width: gray.width,
        height: gray.height,
        bits: gray.intensities.iter().map(|&v| (v >= 128) as u8).collect(),
    })
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String> {
        // skip whitespace and `#` comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::MalformedImage("truncated header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    let magic = token(bytes)?;
    if magic != "P5" {
        return Err(Error::UnsupportedFormat(format!("magic `{magic}`, only P5 supported")));
    }
    let width: usize = token(bytes)?
        .parse()
        .map_err(|_| Error::MalformedImage("bad width".into()))?;
    let height: usize = token(bytes)?
        .parse()
        .map_err(|_| Error::MalformedImage("bad height".into()))?;
    let maxval: usize = token(bytes)?
        .parse()
        .map_err(|_| Error::MalformedImage("bad maxval".into()))?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval}, only 255 supported")));
    }
    // exactly one whitespace byte separates header and payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::MalformedImage("missing header terminator".into()));
    }
    pos += 1;
    let expected = width * height;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(Error::MalformedImage(format!(
            "truncated payload: expected {expected} bytes, got {}",
            payload.len()
        )));
    }
    Ok(GrayImage { width, height, intensities: payload[..expected].to_vec() })
}
