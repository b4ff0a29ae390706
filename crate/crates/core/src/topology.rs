//! Synthetic sensor-network topologies with known coverage holes.
//!
//! Nodes are deployed uniformly at random in a unit square; disks carved out
//! of the deployment become ground-truth holes. Connectivity follows the
//! unit-disk model: two nodes are linked when they are within communication
//! radius of each other, and the radius is solved by bisection so the
//! realized average degree lands on a requested target.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected connectivity graph. Edges are stored with the smaller id first
/// and kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub node_count: usize,
    pub edges: Vec<(u32, u32)>,
}

impl Topology {
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut normalized = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidSpec(format!("self-loop on node {u}")));
            }
            if u as usize >= node_count || v as usize >= node_count {
                return Err(Error::InvalidSpec(format!(
                    "edge ({u},{v}) exceeds node count {node_count}"
                )));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(Self { node_count, edges: normalized })
    }

    pub fn average_degree(&self) -> f64 {
        assert!(self.node_count > 0);
        2.0 * self.edges.len() as f64 / self.node_count as f64
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.node_count];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v) in &self.edges {
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.node_count];
        let mut queue = VecDeque::from([0u32]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.node_count
    }
}

/// Axis-aligned deployment rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl Disk {
    pub fn contains_strict(&self, x: f64, y: f64) -> bool {
        let dx = x - self.cx;
        let dy = y - self.cy;
        dx * dx + dy * dy < self.r * self.r
    }
}

/// True node coordinates and the disks carved out of the deployment,
/// retained only for evaluation; the detection pipeline never sees them.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub positions: Vec<(f64, f64)>,
    pub region: Rect,
    pub carved_holes: Vec<Disk>,
}

/// Parameters for [`generate_topology`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub target_degree: f64,
    pub hole_count: usize,
    pub hole_radius_fraction: f64,
    pub seed: u64,
}

impl GenSpec {
    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidSpec(format!("n must be >= 2, got {}", self.n)));
        }
        if self.target_degree < 1.0 {
            return Err(Error::InvalidSpec(format!(
                "target_degree must be >= 1, got {}",
                self.target_degree
            )));
        }
        if self.hole_count > 0
            && !(self.hole_radius_fraction > 0.0 && self.hole_radius_fraction < 0.5)
        {
            return Err(Error::InvalidSpec(format!(
                "hole_radius_fraction must lie in (0, 0.5), got {}",
                self.hole_radius_fraction
            )));
        }
        Ok(())
    }
}

const DEGREE_TOLERANCE: f64 = 0.05;
const MAX_BISECTION_STEPS: u32 = 64;

/// Generate a connected random geometric graph with the requested average
/// degree, deployed in the unit square with `hole_count` forbidden disks.
///
/// Only the largest connected component is kept; surviving nodes are
/// renumbered densely in ascending original-id order. Deterministic for a
/// fixed spec.
pub fn generate_topology(spec: &GenSpec) -> Result<(Topology, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let region = Rect { x: 0.0, y: 0.0, width: 1.0, height: 1.0 };

    let r = spec.hole_radius_fraction;
    let mut holes = Vec::with_capacity(spec.hole_count);
    for _ in 0..spec.hole_count {
        // keep carved disks fully interior so they read as enclosed holes
        let cx = rng.gen_range(r..=1.0 - r);
        let cy = rng.gen_range(r..=1.0 - r);
        holes.push(Disk { cx, cy, r });
    }
    let excluded: f64 = holes.iter().map(|h| std::f64::consts::PI * h.r * h.r).sum();
    if excluded > 0.5 {
        return Err(Error::HolesTooLarge { fraction: excluded * 100.0 });
    }

    let mut positions = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        loop {
            let x: f64 = rng.gen_range(0.0..1.0);
            let y: f64 = rng.gen_range(0.0..1.0);
            if !holes.iter().any(|h| h.contains_strict(x, y)) {
                positions.push((x, y));
                break;
            }
        }
    }

    // Bisect the communication radius until the largest component's realized
    // average degree lands within the tolerance band.
    let mut lo = 0.0f64;
    let mut hi = std::f64::consts::SQRT_2;
    let mut best: Option<(f64, Vec<u32>, Vec<(u32, u32)>)> = None;
    for _ in 0..MAX_BISECTION_STEPS {
        let rho = 0.5 * (lo + hi);
        let (component, edges) = largest_component(&positions, rho);
        let degree = if component.is_empty() {
            0.0
        } else {
            2.0 * edges.len() as f64 / component.len() as f64
        };
        if best.as_ref().map_or(true, |(d, _, _)| {
            (degree - spec.target_degree).abs() < (d - spec.target_degree).abs()
        }) {
            best = Some((degree, component.clone(), edges.clone()));
        }
        if (degree - spec.target_degree).abs() <= DEGREE_TOLERANCE * spec.target_degree {
            return finish(spec, component, edges, positions, region, holes);
        }
        if degree < spec.target_degree {
            lo = rho;
        } else {
            hi = rho;
        }
    }
    Err(Error::DegreeUnreachable {
        target: spec.target_degree,
        steps: MAX_BISECTION_STEPS,
        best: best.map_or(0.0, |(d, _, _)| d),
    })
}

fn finish(
    spec: &GenSpec,
    component: Vec<u32>,
    edges: Vec<(u32, u32)>,
    positions: Vec<(f64, f64)>,
    region: Rect,
    holes: Vec<Disk>,
) -> Result<(Topology, GroundTruth)> {
    // dense renumbering, ascending by original id
    let mut remap = vec![u32::MAX; spec.n];
    for (new_id, &old_id) in component.iter().enumerate() {
        remap[old_id as usize] = new_id as u32;
    }
    let renumbered: Vec<(u32, u32)> =
        edges.iter().map(|&(u, v)| (remap[u as usize], remap[v as usize])).collect();
    let kept_positions: Vec<(f64, f64)> =
        component.iter().map(|&id| positions[id as usize]).collect();
    let topology = Topology::new(component.len(), renumbered)?;
    Ok((topology, GroundTruth { positions: kept_positions, region, carved_holes: holes }))
}

/// Unit-disk edges at radius `rho`, restricted to the largest connected
/// component. Returns (sorted original ids in the component, its edges).
fn largest_component(positions: &[(f64, f64)], rho: f64) -> (Vec<u32>, Vec<(u32, u32)>) {
    let n = positions.len();
    let rho2 = rho * rho;
    let mut edges = Vec::new();
    for i in 0..n {
        let (xi, yi) = positions[i];
        for j in (i + 1)..n {
            let dx = positions[j].0 - xi;
            let dy = positions[j].1 - yi;
            if dx * dx + dy * dy <= rho2 {
                edges.push((i as u32, j as u32));
            }
        }
    }
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in &edges {
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    let mut component_of = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if component_of[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0usize;
        let mut queue = VecDeque::from([start as u32]);
        component_of[start] = id;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &v in &adj[u as usize] {
                if component_of[v as usize] == usize::MAX {
                    component_of[v as usize] = id;
                    queue.push_back(v);
                }
            }
        }
        sizes.push(size);
    }
    let largest = (0..sizes.len()).max_by_key(|&i| (sizes[i], usize::MAX - i)).unwrap_or(0);
    let nodes: Vec<u32> =
        (0..n).filter(|&i| component_of[i] == largest).map(|i| i as u32).collect();
    let kept: Vec<(u32, u32)> = edges
        .into_iter()
        .filter(|&(u, _)| component_of[u as usize] == largest)
        .collect();
    (nodes, kept)
}

/// Read an edge-list file: first line `# nodes=N`, then `u v` per line.
pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Topology> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text)
}

pub fn parse_edge_list(text: &str) -> Result<Topology> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, msg: "empty file".into() })?;
    let node_count: usize = header
        .strip_prefix("# nodes=")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("expected `# nodes=N` header, got `{header}`"),
        })?;
    let mut edges = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let parse_id = |s: Option<&str>| -> Result<usize> {
            s.and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("expected `u v`, got `{line}`"),
            })
        };
        let u = parse_id(parts.next())?;
        let v = parse_id(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::Parse { line: line_no, msg: format!("trailing tokens in `{line}`") });
        }
        for id in [u, v] {
            if id >= node_count {
                return Err(Error::IdRange { line: line_no, id, nodes: node_count });
            }
        }
        if u == v {
            return Err(Error::Parse { line: line_no, msg: format!("self-loop on node {u}") });
        }
        edges.push((u as u32, v as u32));
    }
    Topology::new(node_count, edges)
}

pub fn write_edge_list(t: &Topology, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, edge_list_string(t))?;
    Ok(())
}

pub fn edge_list_string(t: &Topology) -> String {
    let mut out = format!("# nodes={}\n", t.node_count);
    for &(u, v) in &t.edges {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

#[derive(Serialize, Deserialize)]
struct HolesFile {
    holes: Vec<Disk>,
}

/// Ground-truth files: `id,x,y` CSV plus a JSON sidecar listing carved disks.
pub fn write_ground_truth(
    gt: &GroundTruth,
    csv_path: impl AsRef<Path>,
    json_path: impl AsRef<Path>,
) -> Result<()> {
    let mut csv = String::from("id,x,y\n");
    for (id, (x, y)) in gt.positions.iter().enumerate() {
        let _ = writeln!(csv, "{id},{x},{y}");
    }
    std::fs::write(csv_path, csv)?;
    let json = serde_json::to_string_pretty(&HolesFile { holes: gt.carved_holes.clone() })?;
    std::fs::write(json_path, json)?;
    Ok(())
}

pub fn read_ground_truth(
    csv_path: impl AsRef<Path>,
    json_path: impl AsRef<Path>,
) -> Result<GroundTruth> {
    let text = std::fs::read_to_string(csv_path)?;
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
            msg: format!("bad x coordinate `{}`", fields[1]),
        })?;
        let y: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("bad y coordinate `{}`", fields[2]),
        })?;
        positions.push((x, y));
    }
    let holes: HolesFile = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
    Ok(GroundTruth {
        positions,
        region: Rect { x: 0.0, y: 0.0, width: 1.0, height: 1.0 },
        carved_holes: holes.holes,
    })
}
