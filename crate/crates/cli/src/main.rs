//! Command-line surface for the holescan pipeline.
//!
//! Subcommands: gen, layout, render, detect, eval, bench. Exit codes are 0
//! on success, 1 on runtime failure, and 2 on usage errors. Values from an
//! optional `--config` file (flat `key = value` lines mirroring flag names)
//! act as defaults that explicit flags override.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use holescan::ccl::Connectivity;
use holescan::detect::{
    detect_holes, map_nodes_to_holes, overlay, report_json, DetectMethod, DetectParams,
};
use holescan::eval::{
    bench_csv, bench_locate, matrix_csv, run_experiment_matrix, BenchImage, LayoutClass,
    MatrixOptions,
};
use holescan::layout::{
    layout_csv, parse_layout_csv, run_layout, target_canvas, Algorithm, LayoutMeta, LayoutRun,
};
use holescan::raster::{
    invert, pgm_bytes_binary, rasterize, read_pgm_binary, threshold, GrayImage, RasterParams,
};
use holescan::topology::{generate_topology, read_edge_list, write_edge_list, write_ground_truth, GenSpec};

#[derive(Parser)]
#[command(name = "holescan", version, about = "Coordinate-free coverage-hole detection for sensor networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic topology with known coverage holes
    Gen(GenArgs),
    /// Compute a force-directed layout of an edge list
    Layout(LayoutArgs),
    /// Rasterize a layout to a PGM (and optionally PNG) image
    Render(RenderArgs),
    /// Detect coverage holes in a layout
    Detect(DetectArgs),
    /// Run the evaluation experiment matrix
    Eval(EvalArgs),
    /// Benchmark the locating methods on a corpus of rendered images
    Bench(BenchArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Flat key=value file providing flag defaults
    #[arg(long, global = false)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Number of sensor nodes (>= 2)
    #[arg(long)]
    nodes: usize,
    /// Target average degree (>= 1)
    #[arg(long)]
    degree: f64,
    /// Number of carved holes
    #[arg(long, default_value_t = 0)]
    holes: usize,
    /// Hole radius as a fraction of the deployment side, in (0, 0.5)
    #[arg(long, default_value_t = 0.12)]
    hole_radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LayoutArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Edge-list file
    #[arg(long)]
    edges: PathBuf,
    /// Layout algorithm: kk, fa2, fr, jiggle
    #[arg(long)]
    algo: Algorithm,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration budget (>= 1)
    #[arg(long, default_value_t = holescan::layout::DEFAULT_MAX_ITERATIONS)]
    iterations: usize,
    /// Stability threshold on mean displacement / canvas size
    #[arg(long, default_value_t = holescan::layout::DEFAULT_STABILITY_EPSILON)]
    epsilon: f64,
    /// Working-space size; defaults to the output canvas width
    #[arg(long)]
    canvas_size: Option<f64>,
    /// Output CSV path; a .meta.json sidecar is written next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct RasterArgs {
    /// Binarization threshold in [0, 255]
    #[arg(long, default_value_t = 128)]
    threshold: u8,
    #[arg(long, default_value_t = 2)]
    node_radius: u32,
    #[arg(long, default_value_t = 1)]
    line_thickness: u32,
    #[arg(long, default_value_t = 1)]
    supersample: u32,
}

impl RasterArgs {
    fn params(&self) -> RasterParams {
        RasterParams {
            threshold: self.threshold,
            node_radius_px: self.node_radius,
            line_thickness_px: self.line_thickness,
            supersample: self.supersample,
        }
    }
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    layout: PathBuf,
    #[arg(long)]
    edges: PathBuf,
    #[command(flatten)]
    raster: RasterArgs,
    /// Output PGM path
    #[arg(long)]
    out: PathBuf,
    /// Optional PNG copy for viewing
    #[arg(long)]
    png: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    layout: PathBuf,
    #[arg(long)]
    edges: PathBuf,
    /// Detection method: ccl or ct
    #[arg(long, default_value = "ccl")]
    method: DetectMethod,
    /// Minimum hole area as a fraction of the image area
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    /// Pixel connectivity for labeling: 4 or 8
    #[arg(long, default_value_t = 8)]
    connectivity: u8,
    /// Chebyshev reach in pixels for node-to-hole association
    #[arg(long, default_value_t = 2)]
    delta: u32,
    #[command(flatten)]
    raster: RasterArgs,
    /// Report JSON output path
    #[arg(long)]
    out: PathBuf,
    /// Also write the binarized rendering as a reference PGM
    #[arg(long)]
    pgm: Option<PathBuf>,
    /// Also write a PNG overlay with holes filled
    #[arg(long)]
    overlay: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Named matrix preset; `default` is the full n x d x algorithm grid
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long, value_delimiter = ',')]
    nodes: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    degrees: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    algos: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',')]
    classes: Vec<LayoutClass>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 300)]
    iterations: usize,
    /// Cell fan-out (threads); 1 runs serially
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Directory of PGM images named n<N>_d<D>*.pgm
    #[arg(long)]
    corpus: PathBuf,
    /// Timed repetitions per image and method (>= 5)
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0.001)]
    alpha: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let argv = match apply_config(std::env::args().collect()) {
        Ok(argv) => argv,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Layout(args) => cmd_layout(args),
        Command::Render(args) => cmd_render(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Expand `--config FILE` into flag defaults by splicing the file's
/// key=value pairs in front of the explicit flags (which then win).
fn apply_config(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = argv.iter().position(|a| a == "--config") else {
        return Ok(argv);
    };
    let path = argv
        .get(pos + 1)
        .context("--config requires a file path")?
        .clone();
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let mut injected = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("{path}:{}: expected `key = value`", idx + 1))?;
        let flag = format!("--{}", key.trim());
        // an explicit flag wins over the config value
        if argv.iter().any(|a| *a == flag) {
            continue;
        }
        injected.push(flag);
        injected.push(value.trim().to_string());
    }
    // argv = prog subcommand flags...; insert config values after the
    // subcommand so explicit flags override them
    if argv.len() < 2 {
        bail!("--config requires a subcommand");
    }
    let mut out = argv[..2].to_vec();
    out.extend(injected);
    out.extend(argv[2..].iter().cloned());
    Ok(out)
}

fn usage_error(msg: &str) -> Result<ExitCode> {
    eprintln!("error: {msg}");
    Ok(ExitCode::from(2))
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode> {
    if args.nodes < 2 {
        return usage_error("--nodes must be >= 2");
    }
    if args.degree < 1.0 {
        return usage_error("--degree must be >= 1");
    }
    if args.holes > 0 && !(args.hole_radius > 0.0 && args.hole_radius < 0.5) {
        return usage_error("--hole-radius must lie in (0, 0.5)");
    }
    let spec = GenSpec {
        n: args.nodes,
        target_degree: args.degree,
        hole_count: args.holes,
        hole_radius_fraction: args.hole_radius,
        seed: args.seed,
    };
    let (topology, gt) = generate_topology(&spec)?;
    std::fs::create_dir_all(&args.out)?;
    write_edge_list(&topology, args.out.join("edges.txt"))?;
    write_ground_truth(&gt, args.out.join("ground_truth.csv"), args.out.join("holes.json"))?;
    let meta = serde_json::json!({
        "spec": spec,
        "kept_nodes": topology.node_count,
        "edges": topology.edges.len(),
        "average_degree": topology.average_degree(),
    });
    std::fs::write(args.out.join("gen_meta.json"), serde_json::to_string_pretty(&meta)?)?;
    println!(
        "generated {} nodes, {} edges (average degree {:.3}) in {}",
        topology.node_count,
        topology.edges.len(),
        topology.average_degree(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_layout(args: LayoutArgs) -> Result<ExitCode> {
    if args.iterations < 1 {
        return usage_error("--iterations must be >= 1");
    }
    if args.epsilon <= 0.0 {
        return usage_error("--epsilon must be > 0");
    }
    let topology = read_edge_list(&args.edges)?;
    let canvas = args.canvas_size.unwrap_or_else(|| target_canvas(topology.node_count).0);
    if canvas <= 0.0 {
        return usage_error("--canvas-size must be > 0");
    }
    let run = LayoutRun {
        max_iterations: args.iterations,
        stability_epsilon: args.epsilon,
        ..LayoutRun::with_defaults(args.algo, canvas, topology.node_count, args.seed)
    };
    let result = run_layout(&topology, &run)?;
    std::fs::write(&args.out, layout_csv(&result.layout))?;
    let meta = LayoutMeta {
        algorithm: args.algo.name().to_string(),
        iterations_run: result.iterations_run,
        canvas: [result.layout.canvas_width, result.layout.canvas_height],
        seed: args.seed,
        params: run.params,
    };
    let meta_path = sidecar_path(&args.out);
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
    println!(
        "layout of {} nodes written to {} ({} iterations)",
        topology.node_count,
        args.out.display(),
        result.iterations_run
    );
    Ok(ExitCode::SUCCESS)
}

fn sidecar_path(csv: &Path) -> PathBuf {
    let mut os = csv.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

fn load_layout(layout_path: &Path, node_count: usize) -> Result<holescan::layout::Layout> {
    let (w, h) = target_canvas(node_count);
    let text = std::fs::read_to_string(layout_path)?;
    let layout = parse_layout_csv(&text, w, h)?;
    if layout.positions.len() != node_count {
        bail!(
            "layout has {} positions but the edge list declares {} nodes",
            layout.positions.len(),
            node_count
        );
    }
    Ok(layout)
}

fn write_png(img: &GrayImage, path: &Path) -> Result<()> {
    let buf: image::GrayImage =
        image::ImageBuffer::from_raw(img.width as u32, img.height as u32, img.intensities.clone())
            .context("image buffer")?;
    buf.save(path)?;
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<ExitCode> {
    let topology = read_edge_list(&args.edges)?;
    let layout = load_layout(&args.layout, topology.node_count)?;
    let gray = rasterize(&layout, &topology, &args.raster.params());
    holescan::raster::write_pgm_gray(&gray, &args.out)?;
    if let Some(png) = &args.png {
        write_png(&gray, png)?;
    }
    println!("rendered {}x{} image to {}", gray.width, gray.height, args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_detect(args: DetectArgs) -> Result<ExitCode> {
    let connectivity = match args.connectivity {
        4 => Connectivity::Four,
        8 => Connectivity::Eight,
        _ => return usage_error("--connectivity must be 4 or 8"),
    };
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return usage_error("--alpha must lie in (0, 1)");
    }
    let raster_params = args.raster.params();
    let detect_params = DetectParams {
        method: args.method,
        area_threshold_fraction: args.alpha,
        connectivity,
        node_adjacency_px: args.delta,
    };
    let topology = read_edge_list(&args.edges)?;
    let layout = load_layout(&args.layout, topology.node_count)?;
    let gray = rasterize(&layout, &topology, &raster_params);
    let ink = invert(&threshold(&gray, raster_params.threshold));
    let mut report = detect_holes(&ink, &detect_params);
    map_nodes_to_holes(&layout, &mut report.holes, &raster_params, detect_params.node_adjacency_px);
    std::fs::write(&args.out, serde_json::to_string_pretty(&report_json(&report))?)?;
    if let Some(pgm) = &args.pgm {
        std::fs::write(pgm, pgm_bytes_binary(&ink))?;
    }
    if let Some(path) = &args.overlay {
        write_png(&overlay(&ink, &detect_params), path)?;
    }
    println!(
        "{} holes found by {} in {:?}; report written to {}",
        report.holes.len(),
        report.method.name(),
        report.locate_time,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode> {
    let (nodes, degrees, algos, classes) = match args.matrix.as_deref() {
        Some("default") => (
            vec![200, 500, 1000, 2000, 3000],
            vec![6.0, 8.0, 10.0, 12.0, 15.0],
            Algorithm::ALL.to_vec(),
            vec![LayoutClass::Sparse, LayoutClass::Uniform],
        ),
        Some(other) => return usage_error(&format!("unknown matrix preset `{other}`")),
        None => {
            if args.nodes.is_empty() || args.degrees.is_empty() || args.algos.is_empty() {
                return usage_error("provide --matrix default or all of --nodes, --degrees, --algos");
            }
            let classes = if args.classes.is_empty() {
                vec![LayoutClass::Sparse]
            } else {
                args.classes.clone()
            };
            (args.nodes.clone(), args.degrees.clone(), args.algos.clone(), classes)
        }
    };
    if args.iterations < 1 {
        return usage_error("--iterations must be >= 1");
    }
    if args.parallelism < 1 {
        return usage_error("--parallelism must be >= 1");
    }
    let opts = MatrixOptions { max_iterations: args.iterations, ..Default::default() };
    std::fs::create_dir_all(&args.out)?;

    let cells = if args.parallelism == 1 {
        run_experiment_matrix(&nodes, &degrees, &algos, &classes, &args.seeds, &opts)
    } else {
        run_matrix_parallel(&nodes, &degrees, &algos, &classes, &args.seeds, &opts, args.parallelism)
    };

    for cell in &cells {
        if let Ok(report) = &cell.outcome {
            let name = format!(
                "cell_n{}_d{}_{}_{}_s{}.json",
                report.n,
                report.degree,
                report.algorithm.name(),
                report.layout_class.name(),
                report.seed
            );
            std::fs::write(args.out.join(name), serde_json::to_string_pretty(report)?)?;
        } else if let Err(msg) = &cell.outcome {
            eprintln!(
                "cell n={} d={} {} {} seed={} failed: {msg}",
                cell.n,
                cell.degree,
                cell.algorithm.name(),
                cell.layout_class.name(),
                cell.seed
            );
        }
    }
    std::fs::write(args.out.join("matrix.csv"), matrix_csv(&cells))?;
    let meta = serde_json::json!({
        "nodes": nodes, "degrees": degrees,
        "algorithms": algos.iter().map(|a| a.name()).collect::<Vec<_>>(),
        "classes": classes.iter().map(|c| c.name()).collect::<Vec<_>>(),
        "seeds": args.seeds, "iterations": args.iterations,
    });
    std::fs::write(args.out.join("run_meta.json"), serde_json::to_string_pretty(&meta)?)?;
    let ok = cells.iter().filter(|c| c.outcome.is_ok()).count();
    println!("{ok}/{} cells succeeded; matrix written to {}", cells.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

/// Fan experiment cells out over a fixed number of worker threads.
fn run_matrix_parallel(
    nodes: &[usize],
    degrees: &[f64],
    algos: &[Algorithm],
    classes: &[LayoutClass],
    seeds: &[u64],
    opts: &MatrixOptions,
    workers: usize,
) -> Vec<holescan::eval::MatrixCell> {
    let mut jobs = Vec::new();
    for &n in nodes {
        for &d in degrees {
            for &class in classes {
                for &seed in seeds {
                    for &algorithm in algos {
                        jobs.push((n, d, algorithm, class, seed));
                    }
                }
            }
        }
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<Option<holescan::eval::MatrixCell>> = Vec::new();
    results.resize_with(jobs.len(), || None);
    let results = std::sync::Mutex::new(results);
    std::thread::scope(|scope| {
        for _ in 0..workers.min(jobs.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(&(n, d, algorithm, class, seed)) = jobs.get(idx) else {
                    break;
                };
                let outcome = holescan::eval::run_cell(n, d, algorithm, class, seed, opts)
                    .map_err(|e| e.to_string());
                let cell = holescan::eval::MatrixCell {
                    n,
                    degree: d,
                    algorithm,
                    layout_class: class,
                    seed,
                    outcome,
                };
                results.lock().unwrap()[idx] = Some(cell);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(Option::unwrap).collect()
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    if args.reps < 5 {
        return usage_error("--reps must be >= 5");
    }
    let mut images = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(&args.corpus)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    entries.sort();
    for path in &entries {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let Some((n, d)) = parse_corpus_name(stem) else {
            bail!("corpus file `{stem}.pgm` does not match n<N>_d<D>");
        };
        // rendered corpus images are dark ink on a light background;
        // detection wants ink = 1
        images.push(BenchImage { n, d, image: invert(&read_pgm_binary(path)?) });
    }
    if images.is_empty() {
        bail!("no .pgm images found in {}", args.corpus.display());
    }
    let params = DetectParams { area_threshold_fraction: args.alpha, ..Default::default() };
    let report = bench_locate(&images, &[DetectMethod::Ccl, DetectMethod::Ct], args.reps, &params);
    std::fs::write(&args.out, bench_csv(&report))?;
    for (n, d, speedup) in &report.speedups {
        println!("n={n} d={d}: CCL is {speedup:.2}x faster than CT");
    }
    println!("benchmark written to {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

/// Parse `n<N>_d<D>` from a corpus file stem, ignoring any suffix.
fn parse_corpus_name(stem: &str) -> Option<(usize, f64)> {
    let rest = stem.strip_prefix('n')?;
    let (n_str, rest) = rest.split_once("_d")?;
    let d_str: String = rest
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '.')
        .collect();
    Some((n_str.parse().ok()?, d_str.parse().ok()?))
}
