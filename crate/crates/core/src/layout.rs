//! Force-directed layout of a connectivity graph.
//!
//! Four engines are provided: Kamada-Kawai, ForceAtlas2,
//! Fruchterman-Reingold, and a JIGGLE-style spring embedder. A run samples
//! initial positions from a seeded RNG, iterates one engine until the mean
//! per-node displacement falls below a stability threshold or the iteration
//! budget runs out, then fits the result to the output canvas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Topology;

pub const DEFAULT_MAX_ITERATIONS: usize = 1000;
pub const DEFAULT_STABILITY_EPSILON: f64 = 1e-4;

/// Node positions in canvas units.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub positions: Vec<(f64, f64)>,
    pub canvas_width: f64,
    pub canvas_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Kk,
    Fa2,
    Fr,
    Jiggle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Kk, Algorithm::Fa2, Algorithm::Fr, Algorithm::Jiggle];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Kk => "kk",
            Algorithm::Fa2 => "fa2",
            Algorithm::Fr => "fr",
            Algorithm::Jiggle => "jiggle",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "kk" => Ok(Algorithm::Kk),
            "fa2" => Ok(Algorithm::Fa2),
            "fr" => Ok(Algorithm::Fr),
            "jiggle" => Ok(Algorithm::Jiggle),
            other => Err(format!("unknown algorithm `{other}`, expected one of kk, fa2, fr, jiggle")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KKParams {
    pub stiffness: f64,
    pub node_radius: f64,
    pub time_step: f64,
    pub unit_edge_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FA2Params {
    pub k_rep: f64,
    pub gravity: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FRParams {
    pub k_r: f64,
    pub k_a: f64,
    pub initial_temperature: f64,
    pub cooling_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JiggleParams {
    pub k_r: f64,
    pub k_a: f64,
    pub k_s: f64,
    pub desired_edge_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum AlgorithmParams {
    Kk(KKParams),
    Fa2(FA2Params),
    Fr(FRParams),
    Jiggle(JiggleParams),
}

impl AlgorithmParams {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            AlgorithmParams::Kk(_) => Algorithm::Kk,
            AlgorithmParams::Fa2(_) => Algorithm::Fa2,
            AlgorithmParams::Fr(_) => Algorithm::Fr,
            AlgorithmParams::Jiggle(_) => Algorithm::Jiggle,
        }
    }

    /// Default parameters scaled to the working-space size and node count.
    pub fn defaults(algorithm: Algorithm, canvas_size: f64, n_nodes: usize) -> Self {
        let scale = canvas_size / (n_nodes.max(1) as f64).sqrt();
        match algorithm {
            Algorithm::Kk => AlgorithmParams::Kk(KKParams {
                stiffness: 1.0,
                node_radius: 0.0,
                time_step: 0.1,
                unit_edge_length: scale,
            }),
            Algorithm::Fa2 => AlgorithmParams::Fa2(FA2Params {
                k_rep: canvas_size,
                gravity: 1.0,
                damping: 0.9,
            }),
            Algorithm::Fr => AlgorithmParams::Fr(FRParams {
                k_r: scale,
                k_a: scale,
                initial_temperature: canvas_size / 10.0,
                cooling_factor: 0.95,
            }),
            Algorithm::Jiggle => AlgorithmParams::Jiggle(JiggleParams {
                k_r: 1.0,
                k_a: 1.0,
                k_s: 1.0,
                desired_edge_length: scale,
            }),
        }
    }
}

/// One full layout invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRun {
    pub params: AlgorithmParams,
    pub max_iterations: usize,
    pub stability_epsilon: f64,
    pub canvas_size: f64,
    pub seed: u64,
}

impl LayoutRun {
    pub fn with_defaults(algorithm: Algorithm, canvas_size: f64, n_nodes: usize, seed: u64) -> Self {
        Self {
            params: AlgorithmParams::defaults(algorithm, canvas_size, n_nodes),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            stability_epsilon: DEFAULT_STABILITY_EPSILON,
            canvas_size,
            seed,
        }
    }
}

/// All-pairs shortest-path hop counts, computed once per run for
/// Kamada-Kawai.
pub struct HopMatrix {
    n: usize,
    hops: Vec<u16>,
}

impl HopMatrix {
    pub fn get(&self, i: usize, j: usize) -> u16 {
        self.hops[i * self.n + j]
    }
}

pub fn hop_matrix(t: &Topology) -> HopMatrix {
    let n = t.node_count;
    let adj = t.adjacency();
    let mut hops = vec![u16::MAX; n * n];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n {
        let row = start * n;
        hops[row + start] = 0;
        queue.push_back(start as u32);
        while let Some(u) = queue.pop_front() {
            let d = hops[row + u as usize];
            for &v in &adj[u as usize] {
                if hops[row + v as usize] == u16::MAX {
                    hops[row + v as usize] = d + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    HopMatrix { n, hops }
}

const COINCIDENCE_EPS: f64 = 1e-9;
const JITTER_MAGNITUDE: f64 = 1e-6;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

///// Separation vector from j to i with the coincidence rule applied:
/// nodes closer than 1e-9 are separated by a deterministic jitter of
/// magnitude 1e-6 derived from (seed, i, j).
fn separation(seed: u64, i: usize, j: usize, pi: (f64, f64), pj: (f64, f64)) -> (f64, f64, f64) {
    let dx = pi.0 - pj.0;
    let dy = pi.1 - pj.1;
    let d = (dx * dx + dy * dy).sqrt();
    if d >= COINCIDENCE_EPS {
        return (dx, dy, d);
    }
    let h = splitmix64(seed ^ ((i as u64) << 32 | j as u64));
    let angle = h as f64 / u64::MAX as f64 * std::f64::consts::TAU;
    (
        JITTER_MAGNITUDE * angle.cos(),
        JITTER_MAGNITUDE * angle.sin(),
        JITTER_MAGNITUDE,
    )
}

/// One Kamada-Kawai iteration. Target lengths come from graph-theoretic
/// distances; forces are spring-like toward the target length on every
/// pair and are applied with step `time_step`.
pub fn kk_step(
    positions: &[(f64, f64)],
    p: &KKParams,
    d_graph: &HopMatrix,
    jitter_seed: u64,
) -> Vec<(f64, f64)> {
    let n = positions.len();
    let mut forces = vec![(0.0f64, 0.0f64); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (dx, dy, d) = separation(jitter_seed, i, j, positions[i], positions[j]);
            let hops = d_graph.get(i, j) as f64;
            let target = p.stiffness * (p.unit_edge_length * hops - 2.0 * p.node_radius);
            // contracts when stretched past the target, repels when closer;
            // the 1/target weight is the gradient of the energy's
            // (target - d)^2 / target terms and keeps the summed force
            // bounded on large graphs
            let magnitude = p.stiffness * (d - target) / target.abs().max(f64::EPSILON);
            let fx = -magnitude * dx / d;
            let fy = -magnitude * dy / d;
            forces[i].0 += fx;
            forces[i].1 += fy;
            forces[j].0 -= fx;
            forces[j].1 -= fy;
        }
    }
    positions
        .iter()
        .zip(&forces)
        .map(|(&(x, y), &(fx, fy))| (x + p.time_step * fx, y + p.time_step * fy))
        .collect()
}

/// Total spring energy of a configuration under the Kamada-Kawai model.
pub fn kk_energy(positions: &[(f64, f64)], p: &KKParams, d_graph: &HopMatrix) -> f64 {
    let n = positions.len();
    let mut energy = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = positions[i].0 - positions[j].0;
            let dy = positions[i].1 - positions[j].1;
            let d = (dx * dx + dy * dy).sqrt();
            let hops = d_graph.get(i, j) as f64;
            let target = p.stiffness * (p.unit_edge_length * hops - 2.0 * p.node_radius);
            if target > 0.0 {
                energy += (target - d) * (target - d) / target;
            }
        }
    }
    energy
}

/// One ForceAtlas2 iteration: degree-weighted repulsion on all pairs,
/// attraction proportional to distance on edges, gravity toward the canvas
/// center, net displacement scaled by the damping factor.
pub fn fa2_step(
    positions: &[(f64, f64)],
    t: &Topology,
    p: &FA2Params,
    degrees: &[u32],
    center: (f64, f64),
    jitter_seed: u64,
) -> Vec<(f64, f64)> {
    let n = positions.len();
    let mut forces = vec![(0.0f64, 0.0f64); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (dx, dy, d) = separation(jitter_seed, i, j, positions[i], positions[j]);
            let rep = p.k_rep * (degrees[i] as f64 + 1.0) * (degrees[j] as f64 + 1.0) / d;
            let fx = rep * dx / d;
            let fy = rep * dy / d;
            forces[i].0 += fx;
            forces[i].1 += fy;
            forces[j].0 -= fx;
            forces[j].1 -= fy;
        }
    }
    for &(u, v) in &t.edges {
        let (i, j) = (u as usize, v as usize);
        let (dx, dy, d) = separation(jitter_seed, i, j, positions[i], positions[j]);
        // attraction magnitude is the distance itself
        let fx = -d * dx / d;
        let fy = -d * dy / d;
        forces[i].0 += fx;
        forces[i].1 += fy;
        forces[j].0 -= fx;
        forces[j].1 -= fy;
    }
    if n > 1 {
        for i in 0..n {
            let gx = center.0 - positions[i].0;
            let gy = center.1 - positions[i].1;
            let gd = (gx * gx + gy * gy).sqrt();
            if gd >= COINCIDENCE_EPS {
                let g = p.gravity * (degrees[i] as f64 + 1.0);
                forces[i].0 += g * gx / gd;
                forces[i].1 += g * gy / gd;
            }
        }
    }
    positions
        .iter()
        .zip(&forces)
        .map(|(&(x, y), &(fx, fy))| (x + p.damping * fx, y + p.damping * fy))
        .collect()
}

/// One Fruchterman-Reingold iteration. The displacement of each node is
/// clamped to the current temperature T0 * cooling^iteration.
pub fn fr_step(
    positions: &[(f64, f64)],
    t: &Topology,
    p: &FRParams,
    iteration_index: usize,
    jitter_seed: u64,
) -> Vec<(f64, f64)> {
    let n = positions.len();
    let mut forces = vec![(0.0f64, 0.0f64); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (dx, dy, d) = separation(jitter_seed, i, j, positions[i], positions[j]);
            let rep = p.k_r / (d * d);
            let fx = rep * dx / d;
            let fy = rep * dy / d;
            forces[i].0 += fx;
            forces[i].1 += fy;
            forces[j].0 -= fx;
            forces[j].1 -= fy;
        }
    }
    for &(u, v) in &t.edges {
        let (i, j) = (u as usize, v as usize);
        let (dx, dy, d) = separation(jitter_seed, i, j, positions[i], positions[j]);
        let att = p.k_a * d.ln();
        let fx = -att * dx / d;
        let fy = -att * dy / d;
        forces[i].0 += fx;
        forces[i].1 += fy;
        forces[j].0 -= fx;
        forces[j].1 -= fy;
    }
    let temperature = p.initial_temperature * p.cooling_factor.powi(iteration_index as i32);
    positions
        .iter()
        .zip(&forces)
        .map(|(&(x, y), &(fx, fy))| {
            let mag = (fx * fx + fy * fy).sqrt();
            if mag == 0.0 {
                (x, y)
            } else {
                let step = mag.min(temperature);
                (x + fx / mag * step, y + fy / mag * step)
            }
        })
        .collect()
}

/// One JIGGLE iteration: inverse-square repulsion on all pairs plus
/// logarithmic attraction and a linear spring toward the rest length on
/// edges, applied with a unit step.
pub fn jiggle_step(
    positions: &[(f64, f64)],
    t: &Topology,
    p: &JiggleParams,
    jitter_seed: u64,
) -> Vec<(f64, f64)> {
    let n = positions.len();
    let mut forces = vec![(0.0f64, 0.0f64); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (dx, dy, d) = separation(jitter_seed, i, j, positions[i], positions[j]);
            let rep = p.k_r / (d * d);
            let fx = rep * dx / d;
            let fy = rep * dy / d;
            forces[i].0 += fx;
            forces[i].1 += fy;
            forces[j].0 -= fx;
            forces[j].1 -= fy;
        }
    }
    let l = p.desired_edge_length;
    for &(u, v) in &t.edges {
        let (i, j) = (u as usize, v as usize);
        let (dx, dy, d) = separation(jitter_seed, i, j, positions[i], positions[j]);
        let att = p.k_a * (d / l).ln();
        let spring = p.k_s * (l - d);
        // attraction contracts past the rest length; the spring restores it
        let magnitude = -att + spring;
        let fx = magnitude * dx / d;
        let fy = magnitude * dy / d;
        forces[i].0 += fx;
        forces[i].1 += fy;
        forces[j].0 -= fx;
        forces[j].1 -= fy;
    }
    positions
        .iter()
        .zip(&forces)
        .map(|(&(x, y), &(fx, fy))| (x + fx, y + fy))
        .collect()
}

/// Output canvas dimensions: 600x600 for small graphs, 4n x 4n beyond 150
/// nodes.
pub fn target_canvas(n_nodes: usize) -> (f64, f64) {
    if n_nodes <= 150 {
        (600.0, 600.0)
    } else {
        (4.0 * n_nodes as f64, 4.0 * n_nodes as f64)
    }
}

/// Translate and uniformly scale positions into the target canvas. Aspect
/// ratio is preserved: a single scale factor is used for both axes.
pub fn fit_to_canvas(positions: &[(f64, f64)]) -> Result<Layout> {
    assert!(!positions.is_empty());
    let (width, height) = target_canvas(positions.len());
    let min_x = positions.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let min_y = positions.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_x = positions.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let max_y = positions.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let extent_x = max_x - min_x;
    let extent_y = max_y - min_y;
    let mut scale = f64::INFINITY;
    if extent_x > 1e-12 {
        scale = scale.min(width / extent_x);
    }
    if extent_y > 1e-12 {
        scale = scale.min(height / extent_y);
    }
    if !scale.is_finite() {
        if positions.len() == 1 {
            // a lone node sits at the canvas center
            return Ok(Layout {
                positions: vec![(width / 2.0, height / 2.0)],
                canvas_width: width,
                canvas_height: height,
            });
        }
        return Err(Error::DegenerateLayout);
    }
    let fitted = positions
        .iter()
        .map(|&(x, y)| {
            (
                ((x - min_x) * scale).clamp(0.0, width),
                ((y - min_y) * scale).clamp(0.0, height),
            )
        })
        .collect();
    Ok(Layout { positions: fitted, canvas_width: width, canvas_height: height })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutResult {
    pub layout: Layout,
    /// Positions before fitting, in working-space units.
    pub raw_positions: Vec<(f64, f64)>,
    pub iterations_run: usize,
}

/// Run a full layout: seeded random initialization, iterate to stability or
/// budget, fit to the output canvas. Deterministic for a fixed run.
pub fn run_layout(t: &Topology, run: &LayoutRun) -> Result<LayoutResult> {
    assert!(run.max_iterations >= 1);
    assert!(run.stability_epsilon > 0.0 && run.canvas_size > 0.0);
    let n = t.node_count;
    let s = run.canvas_size;
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut positions: Vec<(f64, f64)> =
        (0..n).map(|_| (rng.gen_range(0.0..s), rng.gen_range(0.0..s))).collect();

    let hops = match &run.params {
        AlgorithmParams::Kk(_) => Some(hop_matrix(t)),
        _ => None,
    };
    let degrees = t.degrees();
    let center = (s / 2.0, s / 2.0);

    let mut iterations_run = 0;
    for iter in 0..run.max_iterations {
        let next = match &run.params {
            AlgorithmParams::Kk(p) => kk_step(&positions, p, hops.as_ref().unwrap(), run.seed),
            AlgorithmParams::Fa2(p) => fa2_step(&positions, t, p, &degrees, center, run.seed),
            AlgorithmParams::Fr(p) => fr_step(&positions, t, p, iter, run.seed),
            AlgorithmParams::Jiggle(p) => jiggle_step(&positions, t, p, run.seed),
        };
        if let Some(node) = next.iter().position(|&(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Divergence { iteration: iter, node });
        }
        let mean_disp: f64 = positions
            .iter()
            .zip(&next)
            .map(|(&(x0, y0), &(x1, y1))| ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt())
            .sum::<f64>()
            / n as f64;
        positions = next;
        iterations_run = iter + 1;
        if mean_disp / s < run.stability_epsilon {
            break;
        }
    }

    let layout = fit_to_canvas(&positions)?;
    Ok(LayoutResult { layout, raw_positions: positions, iterations_run })
}

/// Sidecar metadata written next to a layout CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutMeta {
    pub algorithm: String,
    pub iterations_run: usize,
    pub canvas: [f64; 2],
    pub seed: u64,
    pub params: AlgorithmParams,
}

pub fn layout_csv(layout: &Layout) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("id,x,y\n");
    for (id, (x, y)) in layout.positions.iter().enumerate() {
        let _ = writeln!(out, "{id},{x},{y}");
    }
    out
}

pub fn parse_layout_csv(text: &str, canvas_width: f64, canvas_height: f64) -> Result<Layout> {
    let mut positions = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line.trim() != "id,x,y" {
                return Err(Error::Parse { line: 1, msg: format!("expected `id,x,y`, got `{line}`") });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Parse { line: idx + 1, msg: format!("expected 3 fields in `{line}`") });
        }
        let x: f64 = fields[1].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("bad x `{}`", fields[1]),
        })?;
        let y: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("bad y `{}`", fields[2]),
        })?;
        positions.push((x, y));
    }
    Ok(Layout { positions, canvas_width, canvas_height })
}
