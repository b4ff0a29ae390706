//! End-to-end hole detection: enclosed empty-space regions of a rasterized
//! layout, found either by connected component labeling or by contour
//! tracing, filtered by an area threshold and mapped back to sensor nodes.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::ccl::Connectivity;
use crate::contour::{bounding_rect, pixel_area};
use crate::error::Result;
use crate::layout::{run_layout, Layout, LayoutResult, LayoutRun};
use crate::raster::{invert, rasterize, threshold, BinaryImage, GrayImage, RasterParams};
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectMethod {
    Ccl,
    Ct,
}

impl DetectMethod {
    pub fn name(&self) -> &'static str {
        match self {
            DetectMethod::Ccl => "ccl",
            DetectMethod::Ct => "ct",
        }
    }
}

impl std::str::FromStr for DetectMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ccl" => Ok(DetectMethod::Ccl),
            "ct" => Ok(DetectMethod::Ct),
            other => Err(format!("unknown method `{other}`, expected ccl or ct")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectParams {
    pub method: DetectMethod,
    /// Minimum hole area as a fraction of the image area.
    pub area_threshold_fraction: f64,
    pub connectivity: Connectivity,
    /// Chebyshev reach (in pixels, on top of the node radius) when
    /// associating nodes with hole boundaries.
    pub node_adjacency_px: u32,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            method: DetectMethod::Ccl,
            area_threshold_fraction: 0.001,
            connectivity: Connectivity::Eight,
            node_adjacency_px: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub id: u32,
    pub area_px: usize,
    /// (x, y, width, height) in pixels
    pub bbox: (usize, usize, usize, usize),
    pub centroid: (f64, f64),
    #[serde(skip)]
    pub boundary_pixels: Vec<(u32, u32)>,
    pub node_ids: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub holes: Vec<Hole>,
    pub method: DetectMethod,
    pub params: DetectParams,
    pub width: usize,
    pub height: usize,
    pub threshold_px: f64,
    /// Wall-clock duration of detection plus property extraction only.
    pub locate_time: Duration,
}

/// Detect enclosed empty regions of a binarized graph rendering (ink = 1)
/// with the method selected in `params`.
pub fn detect_holes(img: &BinaryImage, params: &DetectParams) -> DetectionReport {
    match params.method {
        DetectMethod::Ccl => detect_holes_ccl(img, params),
        DetectMethod::Ct => detect_holes_ct(img, params),
    }
}

/// CCL route: label the empty space, keep interior components above the
/// area threshold.
pub fn detect_holes_ccl(img: &BinaryImage, params: &DetectParams) -> DetectionReport {
    let t = params.area_threshold_fraction * (img.width * img.height) as f64;
    let start = Instant::now();
    // label the empty space directly: equivalent to inverting first
    let labeling = crate::ccl::ccl_runs_fg(img, params.connectivity, 0);

    let mut kept: Vec<&crate::ccl::ComponentStats> = labeling
        .stats
        .iter()
        .filter(|s| !s.touches_border && s.area as f64 >= t)
        .collect();
    kept.sort_by(|a, b| b.area.cmp(&a.area).then(a.label.cmp(&b.label)));

    let mut holes = Vec::with_capacity(kept.len());
    for (idx, s) in kept.iter().enumerate() {
        holes.push(Hole {
            id: idx as u32 + 1,
            area_px: s.area,
            bbox: s.bbox,
            centroid: s.centroid,
            boundary_pixels: component_boundary(&labeling, s),
            node_ids: Vec::new(),
        });
    }
    let locate_time = start.elapsed();
    DetectionReport {
        holes,
        method: DetectMethod::Ccl,
        params: *params,
        width: img.width,
        height: img.height,
        threshold_px: t,
        locate_time,
    }
}

/// Component pixels with at least one non-component 4-neighbor, in scan
/// order. Interior components never sit on the image border, so all four
/// neighbors of every component pixel exist.
fn component_boundary(
    labeling: &crate::ccl::RunLabeling,
    s: &crate::ccl::ComponentStats,
) -> Vec<(u32, u32)> {
    let (_, by, _, bh) = s.bbox;
    let rows_of = |y: usize| -> Vec<(u32, u32)> {
        labeling
            .row(y)
            .iter()
            .filter(|r| r.2 == s.label)
            .map(|r| (r.0, r.1))
            .collect()
    };

    let mut boundary = Vec::new();
    let mut above: Vec<(u32, u32)> = Vec::new();
    let mut cur = rows_of(by);
    for y in by..by + bh {
        let below = if y + 1 < by + bh { rows_of(y + 1) } else { Vec::new() };
        for &(x0, x1) in &cur {
            // run endpoints always face non-component pixels west/east
            boundary.push((x0, y as u32));
            if x1 == x0 {
                continue;
            }
            // an interior pixel is boundary unless covered both above and
            // below by component runs
            if x1 - x0 >= 2 {
                let covered = intersect_intervals(&above, &below);
                let (s_in, e_in) = (x0 + 1, x1 - 1);
                let mut x = s_in;
                for &(c0, c1) in &covered {
                    if c1 < s_in {
                        continue;
                    }
                    if c0 > e_in {
                        break;
                    }
                    while x < c0.max(s_in) {
                        boundary.push((x, y as u32));
                        x += 1;
                    }
                    x = x.max(c1 + 1);
                }
                while x <= e_in {
                    boundary.push((x, y as u32));
                    x += 1;
                }
            }
            boundary.push((x1, y as u32));
        }
        above = std::mem::take(&mut cur);
        cur = below;
    }
    boundary
}

/// Intersection of two ascending non-overlapping interval lists.
fn intersect_intervals(a: &[(u32, u32)], b: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo <= hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Contour-tracing route: trace borders of the empty space and keep
/// interior outer contours whose pixel-equivalent area clears the same
/// threshold as the CCL route.
pub fn detect_holes_ct(img: &BinaryImage, params: &DetectParams) -> DetectionReport {
    let t = params.area_threshold_fraction * (img.width * img.height) as f64;
    let start = Instant::now();
    // trace the empty space directly: equivalent to inverting first
    let contours = crate::contour::trace_contours_fg(img, 0);

    let on_border = |points: &[(i32, i32)]| {
        points.iter().any(|&(x, y)| {
            x == 0 || y == 0 || x == img.width as i32 - 1 || y == img.height as i32 - 1
        })
    };

    struct Candidate {
        area: f64,
        bbox: (usize, usize, usize, usize),
        centroid: (f64, f64),
        boundary: Vec<(u32, u32)>,
    }

    let mut kept: Vec<Candidate> = Vec::new();
    for c in &contours {
        if !c.is_outer || on_border(&c.points) {
            continue;
        }
        let area = pixel_area(c);
        if area < t {
            continue;
        }
        let mut distinct = c.points.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let (sx, sy) = distinct
            .iter()
            .fold((0i64, 0i64), |(sx, sy), &(x, y)| (sx + x as i64, sy + y as i64));
        kept.push(Candidate {
            area,
            bbox: bounding_rect(c),
            centroid: (
                sx as f64 / distinct.len() as f64,
                sy as f64 / distinct.len() as f64,
            ),
            boundary: distinct.iter().map(|&(x, y)| (x as u32, y as u32)).collect(),
        });
    }
    kept.sort_by(|a, b| b.area.partial_cmp(&a.area).unwrap());

    let holes = kept
        .into_iter()
        .enumerate()
        .map(|(idx, c)| Hole {
            id: idx as u32 + 1,
            area_px: c.area.round() as usize,
            bbox: c.bbox,
            centroid: c.centroid,
            boundary_pixels: c.boundary,
            node_ids: Vec::new(),
        })
        .collect();
    let locate_time = start.elapsed();
    DetectionReport {
        holes,
        method: DetectMethod::Ct,
        params: *params,
        width: img.width,
        height: img.height,
        threshold_px: t,
        locate_time,
    }
}

fn round_half_up(v: f64) -> i64 {
    (v + 0.5).floor() as i64
}

/// Fill `node_ids` for every hole: a node belongs to a hole when its
/// rounded pixel position is within `delta + node_radius_px` Chebyshev
/// distance of some boundary pixel of that hole.
pub fn map_nodes_to_holes(
    layout: &Layout,
    holes: &mut [Hole],
    raster_params: &RasterParams,
    delta: u32,
) {
    let margin = raster_params.margin() as i64;
    let reach = (delta + raster_params.node_radius_px) as i64;
    let pixels: Vec<(i64, i64)> = layout
        .positions
        .iter()
        .map(|&(x, y)| (round_half_up(x) + margin, round_half_up(y) + margin))
        .collect();
    for hole in holes.iter_mut() {
        let (bx, by, bw, bh) = hole.bbox;
        let mut members = Vec::new();
        for (node, &(px, py)) in pixels.iter().enumerate() {
            // quick reject on the expanded bounding box
            if px < bx as i64 - reach
                || py < by as i64 - reach
                || px > (bx + bw) as i64 + reach
                || py > (by + bh) as i64 + reach
            {
                continue;
            }
            let near = hole.boundary_pixels.iter().any(|&(qx, qy)| {
                (px - qx as i64).abs().max((py - qy as i64).abs()) <= reach
            });
            if near {
                members.push(node as u32);
            }
        }
        hole.node_ids = members;
    }
}

pub struct PipelineOutput {
    pub report: DetectionReport,
    pub layout: LayoutResult,
    pub image: BinaryImage,
}

/// Full coordinate-free pipeline: layout, rasterize, binarize, detect,
/// associate nodes. Deterministic given the seeds in `layout_run`.
pub fn run_pipeline(
    topology: &Topology,
    layout_run: &LayoutRun,
    raster_params: &RasterParams,
    detect_params: &DetectParams,
) -> Result<PipelineOutput> {
    let layout = run_layout(topology, layout_run)?;
    let gray = rasterize(&layout.layout, topology, raster_params);
    let bin = threshold(&gray, raster_params.threshold);
    // thresholding leaves empty space at 1; detection expects ink = 1
    let ink = invert(&bin);
    let mut report = detect_holes(&ink, detect_params);
    map_nodes_to_holes(
        &layout.layout,
        &mut report.holes,
        raster_params,
        detect_params.node_adjacency_px,
    );
    Ok(PipelineOutput { report, layout, image: ink })
}

/// Report JSON matching the documented external schema.
pub fn report_json(report: &DetectionReport) -> serde_json::Value {
    serde_json::json!({
        "method": report.method.name(),
        "canvas": [report.width, report.height],
        "threshold_px": report.threshold_px,
        "locate_time_ns": report.locate_time.as_nanos() as u64,
        "params": report.params,
        "holes": report.holes.iter().map(|h| serde_json::json!({
            "id": h.id,
            "area_px": h.area_px,
            "bbox": [h.bbox.0, h.bbox.1, h.bbox.2, h.bbox.3],
            "centroid": [h.centroid.0, h.centroid.1],
            "node_ids": h.node_ids,
        })).collect::<Vec<_>>(),
    })
}

/// Debug overlay: the rendering with detected hole regions filled gray.
pub fn overlay(img_ink: &BinaryImage, params: &DetectParams) -> GrayImage {
    let t = params.area_threshold_fraction * (img_ink.width * img_ink.height) as f64;
    let (map, stats) = crate::ccl::ccl_two_pass_fg(img_ink, params.connectivity, 0);
    let filled: Vec<bool> = stats
        .iter()
        .map(|s| !s.touches_border && s.area as f64 >= t)
        .collect();
    let mut out = GrayImage::new(img_ink.width, img_ink.height, 255);
    for (i, px) in out.intensities.iter_mut().enumerate() {
        if img_ink.bits[i] == 1 {
            *px = 0;
        } else {
            let label = map.labels[i];
            if label > 0 && filled[label as usize - 1] {
                *px = 128;
            }
        }
    }
    out
}
