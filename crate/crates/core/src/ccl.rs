//! Two-pass connected component labeling over binary images.
//!
//! The first pass assigns provisional labels from the already-scanned
//! neighbors and records equivalences in a union-find structure; the second
//! pass resolves every pixel to its root and renumbers roots densely in
//! scan order, accumulating per-component statistics on the way.

use serde::Serialize;

use crate::raster::BinaryImage;

/// Disjoint sets with union by size and path compression. Ties on size are
/// broken toward the smaller root index so merges are deterministic.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        // path compression: point the whole chain at the root
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    /// Merge the sets of `x` and `y`; the larger set's root survives.
    /// Returns the surviving root.
    pub fn union(&mut self, x: u32, y: u32) -> u32 {
        let rx = self.find(x);
        let ry = self.find(y);
        if rx == ry {
            return rx;
        }
        let (winner, loser) = if self.size[rx as usize] > self.size[ry as usize]
            || (self.size[rx as usize] == self.size[ry as usize] && rx < ry)
        {
            (rx, ry)
        } else {
            (ry, rx)
        };
        self.parent[loser as usize] = winner;
        self.size[winner as usize] += self.size[loser as usize];
        winner
    }

    /// Size of the set containing `x`.
    pub fn set_size(&mut self, x: u32) -> u32 {
        let r = self.find(x);
        self.size[r as usize]
    }

    /// Append a fresh singleton element and return its index.
    pub fn push(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.size.push(1);
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, Serialize)]
pub enum Connectivity {
    Four,
    Eight,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
}

impl LabelMap {
    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentStats {
    pub label: u32,
    pub area: usize,
    /// (x, y, width, height) in pixels
    pub bbox: (usize, usize, usize, usize),
    pub centroid: (f64, f64),
    pub touches_border: bool,
}

struct StatsAcc {
    area: usize,
    min_x: usize,
    max_x: usize,
    min_y: usize,
    max_y: usize,
    sum_x: u64,
    sum_y: u64,
}

impl StatsAcc {
    fn new(x: usize, y: usize) -> Self {
        Self { area: 1, min_x: x, max_x: x, min_y: y, max_y: y, sum_x: x as u64, sum_y: y as u64 }
    }

    fn empty() -> Self {
        Self { area: 0, min_x: usize::MAX, max_x: 0, min_y: usize::MAX, max_y: 0, sum_x: 0, sum_y: 0 }
    }

    fn push(&mut self, x: usize, y: usize) {
        self.area += 1;
        self.min_x = self.min_x.min(x);
        self.max_x = self.max_x.max(x);
        self.min_y = self.min_y.min(y);
        self.max_y = self.max_y.max(y);
        self.sum_x += x as u64;
        self.sum_y += y as u64;
    }

    /// Fold in a horizontal run x0..=x1 on row y. Rows arrive top to bottom.
    fn push_run(&mut self, x0: usize, x1: usize, y: usize) {
        let len = x1 - x0 + 1;
        self.area += len;
        if x0 < self.min_x {
            self.min_x = x0;
        }
        if x1 > self.max_x {
            self.max_x = x1;
        }
        if y < self.min_y {
            self.min_y = y;
        }
        self.max_y = y;
        // (x0 + x1) * len is always even
        self.sum_x += (x0 + x1) as u64 * len as u64 / 2;
        self.sum_y += y as u64 * len as u64;
    }

    fn finish(&self, label: u32, width: usize, height: usize) -> ComponentStats {
        ComponentStats {
            label,
            area: self.area,
            bbox: (self.min_x, self.min_y, self.max_x - self.min_x + 1, self.max_y - self.min_y + 1),
            centroid: (self.sum_x as f64 / self.area as f64, self.sum_y as f64 / self.area as f64),
            touches_border: self.min_x == 0
                || self.min_y == 0
                || self.max_x == width - 1
                || self.max_y == height - 1,
        }
    }
}

/// Label the foreground of `img`. Output labels are dense 1..=K in
/// first-encounter scan order; 0 marks background.
pub fn ccl_two_pass(img: &BinaryImage, conn: Connectivity) -> (LabelMap, Vec<ComponentStats>) {
    ccl_two_pass_fg(img, conn, 1)
}

/// Like [`ccl_two_pass`] but labeling the pixels whose bit equals
/// `foreground`; labeling with `foreground = 0` equals inverting first.
pub(crate) fn ccl_two_pass_fg(
    img: &BinaryImage,
    conn: Connectivity,
    foreground: u8,
) -> (LabelMap, Vec<ComponentStats>) {
    let labeling = ccl_runs_fg(img, conn, foreground);
    let (w, h) = (img.width, img.height);
    let mut labels = vec![0u32; w * h];
    for y in 0..h {
        let row = y * w;
        for &(x0, x1, id) in labeling.row(y) {
            labels[row + x0 as usize..=row + x1 as usize].fill(id);
        }
    }
    (LabelMap { width: w, height: h, labels }, labeling.stats)
}

/// Run-compressed labeling: the label map as maximal horizontal foreground
/// runs per row, each carrying its final dense component id.
pub(crate) struct RunLabeling {
    /// (x_start, x_end inclusive, dense id) in scan order.
    runs: Vec<(u32, u32, u32)>,
    /// Offsets into `runs` delimiting each row; length = height + 1.
    row_start: Vec<usize>,
    pub stats: Vec<ComponentStats>,
}

impl RunLabeling {
    pub fn row(&self, y: usize) -> &[(u32, u32, u32)] {
        &self.runs[self.row_start[y]..self.row_start[y + 1]]
    }
}

/// The two-pass labeling itself, without materializing the per-pixel map.
pub(crate) fn ccl_runs_fg(img: &BinaryImage, conn: Connectivity, foreground: u8) -> RunLabeling {
    let (w, h) = (img.width, img.height);
    // element 0 of the union-find is a dummy standing for "no label yet"
    let mut uf = UnionFind::new(1);
    let mut next_label = 1u32;

    // First pass. A pixel joins the component of its prior neighbors
    // (W, N for four-connectivity, plus NW, NE for eight) or starts a fresh
    // one. Adjacent prior neighbors are already pairwise equivalent from
    // earlier pixels, so only the cross-pairs below need explicit unions;
    // the resulting equivalence classes match recording every pair.
    //
    // Only two rows of provisional labels are live at a time. Every pixel
    // of a horizontal foreground run ends up in one equivalence class (each
    // pixel is tied to its west neighbor), so one provisional label per run
    // is enough to rebuild the full map in the second pass.
    let eight = conn == Connectivity::Eight;
    let mut prev = vec![0u32; w];
    let mut cur = vec![0u32; w];
    // (x_start, x_end inclusive, provisional label) per run, rows delimited
    // by row_start offsets
    let mut runs: Vec<(u32, u32, u32)> = Vec::new();
    let mut row_start: Vec<usize> = Vec::with_capacity(h + 1);

    // first image row: the only prior neighbor is W, so each run gets one
    // fresh label
    row_start.push(runs.len());
    {
        let brow = &img.bits[..w];
        let mut west = 0u32;
        let mut run_start = 0usize;
        for x in 0..w {
            if brow[x] != foreground {
                if west != 0 {
                    runs.push((run_start as u32, (x - 1) as u32, west));
                }
                prev[x] = 0;
                west = 0;
                continue;
            }
            if west == 0 {
                run_start = x;
                west = next_label;
                uf.push();
                next_label += 1;
            }
            prev[x] = west;
        }
        if west != 0 {
            runs.push((run_start as u32, (w - 1) as u32, west));
        }
    }

    for y in 1..h {
        row_start.push(runs.len());
        let brow = &img.bits[y * w..(y + 1) * w];
        let mut west = 0u32;
        let mut north_west = 0u32;
        // north is carried so each prev entry is read exactly once
        let mut north = prev[0];
        let mut run_start = 0usize;
        for x in 0..w {
            let north_east = if x + 1 < w { prev[x + 1] } else { 0 };
            if brow[x] != foreground {
                if west != 0 {
                    runs.push((run_start as u32, (x - 1) as u32, west));
                }
                cur[x] = 0;
                west = 0;
                north_west = north;
                north = north_east;
                continue;
            }
            if west == 0 {
                run_start = x;
            }
            let label = if north != 0 {
                // NW and NE are already equivalent to N
                if west != 0 && west != north {
                    uf.union(north, west);
                }
                north
            } else if eight {
                if north_west != 0 {
                    // W (if set) is already equivalent to NW
                    if north_east != 0 && north_east != north_west {
                        uf.union(north_west, north_east);
                    }
                    north_west
                } else if west != 0 {
                    if north_east != 0 && north_east != west {
                        uf.union(west, north_east);
                    }
                    west
                } else if north_east != 0 {
                    north_east
                } else {
                    0
                }
            } else {
                west
            };
            let label = if label != 0 {
                label
            } else {
                // no prior neighbor: fresh provisional label
                let l = next_label;
                uf.push();
                next_label += 1;
                l
            };
            cur[x] = label;
            west = label;
            north_west = north;
            north = north_east;
        }
        if west != 0 {
            runs.push((run_start as u32, (w - 1) as u32, west));
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    row_start.push(runs.len());

    // Resolve every provisional label to a dense component id. Provisional
    // labels were handed out in scan order and the smallest label of each
    // equivalence class belongs to the component's first scanned pixel, so
    // walking labels in ascending order numbers components in
    // first-encounter scan order.
    let mut resolve = vec![0u32; next_label as usize];
    let mut component_count = 0u32;
    for l in 1..next_label {
        let root = uf.find(l) as usize;
        if resolve[root] == 0 {
            component_count += 1;
            resolve[root] = component_count;
        }
        resolve[l as usize] = resolve[root];
    }

    // second pass over the runs: rewrite provisional labels to dense ids
    // and accumulate stats
    let mut stats: Vec<StatsAcc> = Vec::with_capacity(component_count as usize);
    stats.resize_with(component_count as usize, StatsAcc::empty);
    for y in 0..h {
        for run in &mut runs[row_start[y]..row_start[y + 1]] {
            let id = resolve[run.2 as usize];
            run.2 = id;
            stats[id as usize - 1].push_run(run.0 as usize, run.1 as usize, y);
        }
    }

    let stats = stats
        .iter()
        .enumerate()
        .map(|(i, acc)| acc.finish(i as u32 + 1, w, h))
        .collect();
    RunLabeling { runs, row_start, stats }
}

/// Recompute statistics from a dense label map.
pub fn component_stats(map: &LabelMap) -> Vec<ComponentStats> {
    let mut accs: Vec<Option<StatsAcc>> = Vec::new();
    for y in 0..map.height {
        for x in 0..map.width {
            let l = map.get(x, y);
            if l == 0 {
                continue;
            }
            let idx = l as usize - 1;
            if accs.len() <= idx {
                accs.resize_with(idx + 1, || None);
            }
            match &mut accs[idx] {
                Some(acc) => acc.push(x, y),
                slot => *slot = Some(StatsAcc::new(x, y)),
            }
        }
    }
    accs.iter()
        .enumerate()
        .map(|(i, acc)| {
            acc.as_ref()
                .expect("labels must be dense")
                .finish(i as u32 + 1, map.width, map.height)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::BinaryImage;

    fn img(w: usize, h: usize, bits: &[u8]) -> BinaryImage {
        BinaryImage::from_bits(w, h, bits.to_vec())
    }

    #[test]
    fn find_fresh_is_identity() {
        let mut uf = UnionFind::new(8);
        assert_eq!(uf.find(5), 5);
    }

    #[test]
    fn union_links_roots() {
        let mut uf = UnionFind::new(8);
        uf.union(1, 2);
        assert_eq!(uf.find(1), uf.find(2));
    }

    #[test]
    fn find_idempotent() {
        let mut uf = UnionFind::new(16);
        uf.union(1, 2);
        uf.union(2, 9);
        uf.union(4, 5);
        for x in 0..16 {
            let r = uf.find(x);
            assert_eq!(uf.find(r), r);
        }
    }

    #[test]
    fn self_union_noop() {
        let mut uf = UnionFind::new(8);
        let r = uf.union(3, 3);
        assert_eq!(r, 3);
        assert_eq!(uf.set_size(3), 1);
    }

    #[test]
    fn tie_breaks_to_smaller_root() {
        let mut uf = UnionFind::new(8);
        assert_eq!(uf.union(3, 7), 3);
        assert_eq!(uf.set_size(7), 2);
    }

    #[test]
    fn larger_set_absorbs() {
        let mut uf = UnionFind::new(16);
        uf.union(1, 2);
        uf.union(1, 3);
        let big_root = uf.find(1);
        assert_eq!(uf.union(9, 1), big_root);
    }

    #[test]
    fn all_zero_image() {
        let (map, stats) = ccl_two_pass(&img(3, 3, &[0; 9]), Connectivity::Four);
        assert!(stats.is_empty());
        assert!(map.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn diagonal_connectivity_difference() {
        let b = img(2, 2, &[1, 0, 0, 1]);
        let (_, s4) = ccl_two_pass(&b, Connectivity::Four);
        assert_eq!(s4.len(), 2);
        assert!(s4.iter().all(|s| s.area == 1));
        let (_, s8) = ccl_two_pass(&b, Connectivity::Eight);
        assert_eq!(s8.len(), 1);
        assert_eq!(s8[0].area, 2);
    }

    #[test]
    fn u_shape_merges_provisional_labels() {
        // two vertical bars joined at the bottom
        #[rustfmt::skip]
        let b = img(3, 3, &[
            1, 0, 1,
            1, 0, 1,
            1, 1, 1,
        ]);
        let (_, stats) = ccl_two_pass(&b, Connectivity::Four);
        assert_eq!(stats.len(), 1);
        assert_eq!(stats[0].area, 7);
    }

    #[test]
    fn single_pixel_stats() {
        let mut bits = vec![0u8; 8 * 8];
        bits[4 * 8 + 3] = 1;
        let (map, stats) = ccl_two_pass(&img(8, 8, &bits), Connectivity::Four);
        assert_eq!(stats.len(), 1);
        let s = &stats[0];
        assert_eq!(s.area, 1);
        assert_eq!(s.bbox, (3, 4, 1, 1));
        assert_eq!(s.centroid, (3.0, 4.0));
        assert!(!s.touches_border);
        assert_eq!(component_stats(&map), stats);
    }

    #[test]
    fn rectangle_touching_border() {
        let mut bits = vec![0u8; 10 * 10];
        for y in 0..2 {
            for x in 0..3 {
                bits[y * 10 + x] = 1;
            }
        }
        let (_, stats) = ccl_two_pass(&img(10, 10, &bits), Connectivity::Four);
        assert_eq!(stats.len(), 1);
        assert_eq!(stats[0].area, 6);
        assert_eq!(stats[0].bbox, (0, 0, 3, 2));
        assert!(stats[0].touches_border);
    }

    #[test]
    fn label_density_and_area_conservation() {
        let bits: Vec<u8> = (0..32 * 32).map(|i| ((i * 2654435761u64 as usize) >> 7) as u8 & 1).collect();
        let b = img(32, 32, &bits);
        let foreground = bits.iter().filter(|&&v| v == 1).count();
        for conn in [Connectivity::Four, Connectivity::Eight] {
            let (map, stats) = ccl_two_pass(&b, conn);
            assert_eq!(stats.iter().map(|s| s.area).sum::<usize>(), foreground);
            let max = map.labels.iter().copied().max().unwrap_or(0);
            assert_eq!(max as usize, stats.len());
            for (i, s) in stats.iter().enumerate() {
                assert_eq!(s.label as usize, i + 1);
            }
        }
    }
}
