//! Evaluation harness: node-level confusion matrices, hole sensitivity and
//! specificity, ground-truth label construction, the experiment matrix, and
//! the locating-speed benchmark.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detect::{detect_holes, detect_holes_ccl, map_nodes_to_holes, DetectMethod, DetectParams};
use crate::error::Result;
use crate::layout::{fit_to_canvas, target_canvas, Algorithm, LayoutRun};
use crate::raster::{invert, rasterize, threshold, BinaryImage, RasterParams};
use crate::topology::{generate_topology, GenSpec, GroundTruth, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Node-level confusion over a network of `node_count` sensors.
pub fn confusion(gt_set: &HashSet<u32>, detected_set: &HashSet<u32>, node_count: usize) -> Confusion {
    let tp = gt_set.intersection(detected_set).count();
    let fp = detected_set.difference(gt_set).count();
    let fn_ = gt_set.difference(detected_set).count();
    let tn = node_count - gt_set.union(detected_set).count();
    Confusion { tp, tn, fp, fn_ }
}

/// Hole sensitivity, TP / (TP + FP). Undefined (None) when no node was
/// detected at all.
pub fn sensitivity(c: &Confusion) -> Option<f64> {
    if c.tp + c.fp == 0 {
        None
    } else {
        Some(c.tp as f64 / (c.tp + c.fp) as f64)
    }
}

/// Hole specificity, TN / (TN + FN).
pub fn specificity(c: &Confusion) -> Option<f64> {
    if c.tn + c.fn_ == 0 {
        None
    } else {
        Some(c.tn as f64 / (c.tn + c.fn_) as f64)
    }
}

/// Reference node set: run the identical rasterize-and-detect pipeline on
/// the true coordinates and collect the nodes on detected hole boundaries.
pub fn ground_truth_labels(
    gt: &GroundTruth,
    topology: &Topology,
    raster_params: &RasterParams,
    detect_params: &DetectParams,
) -> Result<HashSet<u32>> {
    let layout = fit_to_canvas(&gt.positions)?;
    let gray = rasterize(&layout, topology, raster_params);
    let ink = invert(&threshold(&gray, raster_params.threshold));
    let mut report = detect_holes_ccl(&ink, detect_params);
    map_nodes_to_holes(&layout, &mut report.holes, raster_params, detect_params.node_adjacency_px);
    Ok(report.holes.iter().flat_map(|h| h.node_ids.iter().copied()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutClass {
    /// Lower-density deployment with carved holes.
    Sparse,
    /// Dense deployment without carved holes.
    Uniform,
}

impl LayoutClass {
    pub fn name(&self) -> &'static str {
        match self {
            LayoutClass::Sparse => "sparse",
            LayoutClass::Uniform => "uniform",
        }
    }

    /// Generator settings realizing this class at the given size.
    pub fn gen_spec(&self, n: usize, target_degree: f64, seed: u64) -> GenSpec {
        match self {
            LayoutClass::Sparse => GenSpec {
                n,
                target_degree,
                hole_count: 2,
                hole_radius_fraction: 0.12,
                seed,
            },
            LayoutClass::Uniform => GenSpec {
                n,
                target_degree,
                hole_count: 0,
                hole_radius_fraction: 0.1,
                seed,
            },
        }
    }
}

impl std::str::FromStr for LayoutClass {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sparse" => Ok(LayoutClass::Sparse),
            "uniform" => Ok(LayoutClass::Uniform),
            other => Err(format!("unknown layout class `{other}`, expected sparse or uniform")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub degree: f64,
    pub algorithm: Algorithm,
    pub layout_class: LayoutClass,
    pub seed: u64,
    pub confusion: Confusion,
    pub hole_sensitivity: Option<f64>,
    pub hole_specificity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MatrixCell {
    pub n: usize,
    pub degree: f64,
    pub algorithm: Algorithm,
    pub layout_class: LayoutClass,
    pub seed: u64,
    pub outcome: std::result::Result<EvalReport, String>,
}

#[derive(Debug, Clone, Copy)]
pub struct MatrixOptions {
    pub max_iterations: usize,
    pub raster: RasterParams,
    pub detect: DetectParams,
}

impl Default for MatrixOptions {
    fn default() -> Self {
        Self {
            max_iterations: crate::layout::DEFAULT_MAX_ITERATIONS,
            raster: harness_raster_params(),
            detect: DetectParams::default(),
        }
    }
}

/// Raster settings used by the experiment harness. Lines are drawn 2 px
/// thick: with 1 px lines, 8-connected empty space slips diagonally through
/// every slanted edge, so no hole is ever enclosed.
pub fn harness_raster_params() -> RasterParams {
    RasterParams { line_thickness_px: 2, ..RasterParams::default() }
}

/// Seed for one dataset: shared across algorithms and degrees so every
/// algorithm sees the same deployment for a given (n, class, replicate).
fn dataset_seed(base: u64, n: usize, class: LayoutClass) -> u64 {
    let class_tag = match class {
        LayoutClass::Sparse => 1u64,
        LayoutClass::Uniform => 2u64,
    };
    base.wrapping_mul(0x9E3779B97F4A7C15) ^ (n as u64) << 8 ^ class_tag
}

/// Evaluate one experiment cell end to end.
pub fn run_cell(
    n: usize,
    degree: f64,
    algorithm: Algorithm,
    class: LayoutClass,
    seed: u64,
    opts: &MatrixOptions,
) -> Result<EvalReport> {
    let gen_seed = dataset_seed(seed, n, class);
    let (topology, gt) = generate_topology(&class.gen_spec(n, degree, gen_seed))?;
    let canvas = target_canvas(topology.node_count).0;
    let run = LayoutRun {
        max_iterations: opts.max_iterations,
        ..LayoutRun::with_defaults(algorithm, canvas, topology.node_count, gen_seed)
    };
    let out = crate::detect::run_pipeline(&topology, &run, &opts.raster, &opts.detect)?;
    let detected: HashSet<u32> =
        out.report.holes.iter().flat_map(|h| h.node_ids.iter().copied()).collect();
    let gt_set = ground_truth_labels(&gt, &topology, &opts.raster, &opts.detect)?;
    let c = confusion(&gt_set, &detected, topology.node_count);
    Ok(EvalReport {
        n,
        degree,
        algorithm,
        layout_class: class,
        seed,
        confusion: c,
        hole_sensitivity: sensitivity(&c),
        hole_specificity: specificity(&c),
    })
}

/// Run the full cross product of axes. Individual cell failures are
/// recorded and the matrix continues.
pub fn run_experiment_matrix(
    node_counts: &[usize],
    degrees: &[f64],
    algorithms: &[Algorithm],
    layout_classes: &[LayoutClass],
    seeds: &[u64],
    opts: &MatrixOptions,
) -> Vec<MatrixCell> {
    let mut cells = Vec::new();
    for &n in node_counts {
        for &d in degrees {
            for &class in layout_classes {
                for &seed in seeds {
                    for &algorithm in algorithms {
                        let outcome = run_cell(n, d, algorithm, class, seed, opts)
                            .map_err(|e| e.to_string());
                        cells.push(MatrixCell {
                            n,
                            degree: d,
                            algorithm,
                            layout_class: class,
                            seed,
                            outcome,
                        });
                    }
                }
            }
        }
    }
    cells
}

/// Matrix-level CSV, one row per successful cell.
pub fn matrix_csv(cells: &[MatrixCell]) -> String {
    let mut out = String::from("n,d,algorithm,layout_class,seed,tp,tn,fp,fn,sensitivity,specificity\n");
    for cell in cells {
        if let Ok(r) = &cell.outcome {
            let fmt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v}"));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.degree,
                r.algorithm.name(),
                r.layout_class.name(),
                r.seed,
                r.confusion.tp,
                r.confusion.tn,
                r.confusion.fp,
                r.confusion.fn_,
                fmt(r.hole_sensitivity),
                fmt(r.hole_specificity),
            );
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct BenchImage {
    pub n: usize,
    pub d: f64,
    pub image: BinaryImage,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchCellReport {
    pub n: usize,
    pub d: f64,
    pub method: DetectMethod,
    pub median_ns: u64,
    pub mad_ns: u64,
    pub samples: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub cells: Vec<BenchCellReport>,
    /// (n, d, median CT time / median CCL time)
    pub speedups: Vec<(usize, f64, f64)>,
}

pub fn median_ns(samples: &[u64]) -> u64 {
    assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2
    }
}

pub fn mad_ns(samples: &[u64]) -> u64 {
    let m = median_ns(samples) as i64;
    let deviations: Vec<u64> = samples.iter().map(|&s| (s as i64 - m).unsigned_abs()).collect();
    median_ns(&deviations)
}

const BENCH_WARMUPS: usize = 2;

/// Time detection plus property extraction on pre-loaded in-memory images,
/// `repetitions` samples per image and method after two warm-up runs.
/// Serial by construction.
pub fn bench_locate(
    images: &[BenchImage],
    methods: &[DetectMethod],
    repetitions: usize,
    params: &DetectParams,
) -> BenchReport {
    assert!(repetitions >= 5, "at least 5 repetitions required");
    let mut cells: Vec<BenchCellReport> = Vec::new();
    for &method in methods {
        let p = DetectParams { method, ..*params };
        // pool samples per (n, d)
        let mut groups: Vec<((usize, f64), Vec<u64>)> = Vec::new();
        for bi in images {
            let mut samples = Vec::with_capacity(repetitions);
            for rep in 0..BENCH_WARMUPS + repetitions {
                let start = Instant::now();
                let report = detect_holes(&bi.image, &p);
                let elapsed = start.elapsed().as_nanos() as u64;
                std::hint::black_box(&report);
                if rep >= BENCH_WARMUPS {
                    samples.push(elapsed);
                }
            }
            let key = (bi.n, bi.d);
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, pooled)) => pooled.extend(samples),
                None => groups.push((key, samples)),
            }
        }
        for ((n, d), samples) in groups {
            cells.push(BenchCellReport {
                n,
                d,
                method,
                median_ns: median_ns(&samples),
                mad_ns: mad_ns(&samples),
                samples,
            });
        }
    }

    let mut speedups = Vec::new();
    for ccl_cell in cells.iter().filter(|c| c.method == DetectMethod::Ccl) {
        if let Some(ct_cell) = cells
            .iter()
            .find(|c| c.method == DetectMethod::Ct && c.n == ccl_cell.n && c.d == ccl_cell.d)
        {
            speedups.push((
                ccl_cell.n,
                ccl_cell.d,
                ct_cell.median_ns as f64 / ccl_cell.median_ns as f64,
            ));
        }
    }
    BenchReport { cells, speedups }
}

pub fn bench_csv(report: &BenchReport) -> String {
    let mut out = String::from("n,d,method,median_ns,mad_ns,samples\n");
    for c in &report.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.n,
            c.d,
            c.method.name(),
            c.median_ns,
            c.mad_ns,
            c.samples.len()
        );
    }
    out
}
