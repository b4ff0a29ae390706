//! Coordinate-free coverage-hole detection for wireless sensor networks.
//!
//! The pipeline takes nothing but a connectivity graph: a force-directed
//! engine lays the graph out on a canvas, the layout is rasterized to a
//! binary image, and enclosed empty regions are found either by two-pass
//! connected component labeling or by border-following contour tracing.
//! An evaluation harness scores detections against generated ground truth
//! and benchmarks the two locating methods.

pub mod ccl;
pub mod contour;
pub mod detect;
pub mod error;
pub mod eval;
pub mod layout;
pub mod raster;
pub mod topology;

pub use ccl::{ccl_two_pass, component_stats, ComponentStats, Connectivity, LabelMap, UnionFind};
pub use contour::{bounding_rect, contour_area, trace_contours, Contour};
pub use detect::{
    detect_holes, map_nodes_to_holes, run_pipeline, DetectMethod, DetectParams, DetectionReport,
    Hole,
};
pub use error::{Error, Result};
pub use eval::{
    bench_locate, confusion, ground_truth_labels, run_experiment_matrix, sensitivity, specificity,
    BenchReport, Confusion, EvalReport, LayoutClass,
};
pub use layout::{
    fit_to_canvas, hop_matrix, run_layout, target_canvas, Algorithm, AlgorithmParams, Layout,
    LayoutRun,
};
pub use raster::{invert, rasterize, threshold, BinaryImage, GrayImage, RasterParams};
pub use topology::{
    generate_topology, read_edge_list, write_edge_list, GenSpec, GroundTruth, Topology,
};
