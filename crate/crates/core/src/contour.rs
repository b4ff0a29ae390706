//! Border following over binary images.
//!
//! A raster scan locates border start configurations; each border is then
//! followed through the 8-neighborhood, marking visited pixels in a signed
//! working image so every border is traced exactly once. Foreground
//! components yield outer borders, enclosed background regions yield hole
//! borders, and the parent relation between borders is tracked.

use serde::Serialize;

use crate::raster::BinaryImage;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contour {
    /// Border pixels in trace order as (x, y).
    pub points: Vec<(i32, i32)>,
    /// Outer border of a foreground component, as opposed to the border of
    /// an enclosed background region.
    pub is_outer: bool,
    /// Index of the enclosing contour, if any.
    pub parent: Option<usize>,
}

// neighbor directions in counterclockwise order, as (di, dj) with i = row
const DIRS_CCW: [(i32, i32); 8] = [
    (0, 1),   // east
    (-1, 1),  // north-east
    (-1, 0),  // north
    (-1, -1), // north-west
    (0, -1),  // west
    (1, -1),  // south-west
    (1, 0),   // south
    (1, 1),   // south-east
];

fn dir_index(di: i32, dj: i32) -> usize {
    DIRS_CCW.iter().position(|&d| d == (di, dj)).expect("not a neighbor offset")
}

/// Trace every border of the foreground of `img`.
pub fn trace_contours(img: &BinaryImage) -> Vec<Contour> {
    trace_contours_fg(img, 1)
}

/// Like [`trace_contours`] but treating the pixels whose bit equals
/// `foreground` as the foreground; tracing with `foreground = 0` equals
/// inverting first.
pub(crate) fn trace_contours_fg(img: &BinaryImage, foreground: u8) -> Vec<Contour> {
    let w = img.width as i32;
    let h = img.height as i32;
    let mut f: Vec<i32> = img.bits.iter().map(|&b| (b == foreground) as i32).collect();
    let at = |f: &[i32], i: i32, j: i32| -> i32 {
        if i < 0 || j < 0 || i >= h || j >= w {
            0
        } else {
            f[(i * w + j) as usize]
        }
    };

    // border 1 is the implicit frame; traced borders start at 2
    let mut contours: Vec<Contour> = Vec::new();
    let mut border_is_outer = vec![true]; // index 0 = frame
    let mut border_parent: Vec<Option<usize>> = vec![None];
    let mut nbd = 1i32;

    for i in 0..h {
        let mut lnbd = 1i32;
        for j in 0..w {
            let fij = at(&f, i, j);
            if fij == 0 {
                continue;
            }
            let (start_dir, is_outer) = if fij == 1 && at(&f, i, j - 1) == 0 {
                (dir_index(0, -1), true)
            } else if fij >= 1 && at(&f, i, j + 1) == 0 {
                if fij > 1 {
                    lnbd = fij;
                }
                (dir_index(0, 1), false)
            } else {
                if fij != 1 {
                    lnbd = fij.abs();
                }
                continue;
            };

            nbd += 1;
            let border_id = (nbd - 2) as usize; // index into contours
            let parent = {
                let ln = (lnbd - 1) as usize; // index into border_* tables
                if is_outer == border_is_outer[ln] {
                    border_parent[ln]
                } else {
                    Some(ln)
                }
            };
            border_is_outer.push(is_outer);
            border_parent.push(parent);

            let points = follow_border(&mut f, w, h, i, j, start_dir, nbd);
            // the frame (index 0) is not materialized as a contour
            let parent_contour = parent.and_then(|p| p.checked_sub(1));
            contours.push(Contour { points, is_outer, parent: parent_contour });
            debug_assert_eq!(contours.len(), border_id + 1);

            let fij_now = at(&f, i, j);
            if fij_now != 1 {
                lnbd = fij_now.abs();
            }
        }
    }
    contours
}

fn follow_border(
    f: &mut [i32],
    w: i32,
    h: i32,
    i: i32,
    j: i32,
    start_dir: usize,
    nbd: i32,
) -> Vec<(i32, i32)> {
    let at = |f: &[i32], i: i32, j: i32| -> i32 {
        if i < 0 || j < 0 || i >= h || j >= w {
            0
        } else {
            f[(i * w + j) as usize]
        }
    };

    // clockwise search from the zero pixel that triggered this border
    let mut first = None;
    for step in 0..8 {
        let d = (start_dir + 8 - step) % 8;
        let (di, dj) = DIRS_CCW[d];
        if at(f, i + di, j + dj) != 0 {
            first = Some((i + di, j + dj));
            break;
        }
    }
    let Some((i1, j1)) = first else {
        // isolated pixel
        f[(i * w + j) as usize] = -nbd;
        return vec![(j, i)];
    };

    let mut points = Vec::new();
    let (mut i2, mut j2) = (i1, j1);
    let (mut i3, mut j3) = (i, j);
    loop {
        // counterclockwise search around (i3, j3), starting just past (i2, j2)
        let back = dir_index(i2 - i3, j2 - j3);
        let mut east_was_zero = false;
        let mut found = None;
        for step in 1..=8 {
            let d = (back + step) % 8;
            let (di, dj) = DIRS_CCW[d];
            let (ni, nj) = (i3 + di, j3 + dj);
            if at(f, ni, nj) != 0 {
                found = Some((ni, nj));
                break;
            }
            if d == 0 {
                east_was_zero = true;
            }
        }
        let (i4, j4) = found.expect("border pixel must have a nonzero neighbor");

        points.push((j3, i3));
        let idx = (i3 * w + j3) as usize;
        if east_was_zero {
            f[idx] = -nbd;
        } else if f[idx] == 1 {
            f[idx] = nbd;
        }

        if (i4, j4) == (i, j) && (i3, j3) == (i1, j1) {
            break;
        }
        (i2, j2) = (i3, j3);
        (i3, j3) = (i4, j4);
    }
    points
}

/// Shoelace area of the contour polygon, in squared pixels.
pub fn contour_area(c: &Contour) -> f64 {
    if c.points.len() < 3 {
        return 0.0;
    }
    let mut twice = 0i64;
    for k in 0..c.points.len() {
        let (x0, y0) = c.points[k];
        let (x1, y1) = c.points[(k + 1) % c.points.len()];
        twice += x0 as i64 * y1 as i64 - x1 as i64 * y0 as i64;
    }
    (twice.abs() as f64) / 2.0
}

/// Pixel-count-equivalent area of the region enclosed by a traced contour,
/// boundary pixels included: shoelace + B/2 + 1 with B the distinct
/// boundary pixels (Pick's theorem, polygon vertices on the lattice).
pub fn pixel_area(c: &Contour) -> f64 {
    let mut distinct: Vec<(i32, i32)> = c.points.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() == 1 {
        return 1.0;
    }
    contour_area(c) + distinct.len() as f64 / 2.0 + 1.0
}

/// Minimal axis-aligned (x, y, width, height) containing all points, with
/// width and height counted inclusively in pixels.
pub fn bounding_rect(c: &Contour) -> (usize, usize, usize, usize) {
    assert!(!c.points.is_empty());
    let min_x = c.points.iter().map(|p| p.0).min().unwrap();
    let max_x = c.points.iter().map(|p| p.0).max().unwrap();
    let min_y = c.points.iter().map(|p| p.1).min().unwrap();
    let max_y = c.points.iter().map(|p| p.1).max().unwrap();
    (
        min_x as usize,
        min_y as usize,
        (max_x - min_x + 1) as usize,
        (max_y - min_y + 1) as usize,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: usize, h: usize, bits: &[u8]) -> BinaryImage {
        BinaryImage::from_bits(w, h, bits.to_vec())
    }

    fn assert_closed_8_adjacent(c: &Contour) {
        let n = c.points.len();
        for k in 0..n {
            let (x0, y0) = c.points[k];
            let (x1, y1) = c.points[(k + 1) % n];
            assert!((x0 - x1).abs() <= 1 && (y0 - y1).abs() <= 1, "gap at {k}");
        }
    }

    #[test]
    fn single_pixel() {
        let mut bits = vec![0u8; 25];
        bits[2 * 5 + 2] = 1;
        let contours = trace_contours(&img(5, 5, &bits));
        assert_eq!(contours.len(), 1);
        assert!(contours[0].is_outer);
        assert_eq!(contours[0].points, vec![(2, 2)]);
    }

    #[test]
    fn solid_square_outer_boundary() {
        let mut bits = vec![0u8; 25];
        for y in 1..4 {
            for x in 1..4 {
                bits[y * 5 + x] = 1;
            }
        }
        let contours = trace_contours(&img(5, 5, &bits));
        assert_eq!(contours.len(), 1);
        let c = &contours[0];
        assert!(c.is_outer);
        let mut pts = c.points.clone();
        pts.sort_unstable();
        pts.dedup();
        assert_eq!(pts.len(), 8); // 3x3 perimeter, center excluded
        assert!(!pts.contains(&(2, 2)));
        assert_closed_8_adjacent(c);
    }

    #[test]
    fn ring_has_outer_and_hole_border() {
        // 5x5 one-pixel-thick frame inside a 7x7 image
        let mut bits = vec![0u8; 49];
        for y in 1..6 {
            for x in 1..6 {
                if y == 1 || y == 5 || x == 1 || x == 5 {
                    bits[y * 7 + x] = 1;
                }
            }
        }
        let contours = trace_contours(&img(7, 7, &bits));
        assert_eq!(contours.len(), 2);
        let outer = contours.iter().find(|c| c.is_outer).unwrap();
        let hole = contours.iter().find(|c| !c.is_outer).unwrap();
        assert_closed_8_adjacent(outer);
        assert_closed_8_adjacent(hole);
        // hole border encloses the 3x3 interior
        let (x, y, w, h) = bounding_rect(hole);
        assert!(x >= 1 && y >= 1 && x + w <= 6 && y + h <= 6);
        // hole contour is the parent-child of the outer one
        assert_eq!(hole.parent, Some(0));
    }

    #[test]
    fn one_point_area_zero() {
        let c = Contour { points: vec![(5, 7)], is_outer: true, parent: None };
        assert_eq!(contour_area(&c), 0.0);
        assert_eq!(bounding_rect(&c), (5, 7, 1, 1));
    }

    #[test]
    fn square_shoelace_area() {
        // 3x3 block traced through its 8 boundary pixels
        let c = Contour {
            points: vec![(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)],
            is_outer: true,
            parent: None,
        };
        assert_eq!(contour_area(&c), 4.0);
        assert_eq!(pixel_area(&c), 9.0);
    }

    #[test]
    fn bounding_rect_min_max() {
        let c = Contour { points: vec![(1, 1), (4, 3)], is_outer: true, parent: None };
        assert_eq!(bounding_rect(&c), (1, 1, 4, 3));
    }

    #[test]
    fn every_contour_point_is_boundary() {
        // blob with a notch
        #[rustfmt::skip]
        let bits = [
            0,0,0,0,0,0,0,
            0,1,1,1,1,1,0,
            0,1,0,0,1,1,0,
            0,1,1,1,1,1,0,
            0,1,1,1,1,1,0,
            0,0,0,0,0,0,0,
        ];
        let b = img(7, 6, &bits);
        for c in trace_contours(&b) {
            assert_closed_8_adjacent(&c);
            for &(x, y) in &c.points {
                assert_eq!(b.get(x as usize, y as usize), 1);
                let four = [(0i32, 1i32), (0, -1), (1, 0), (-1, 0)];
                let has_bg = four.iter().any(|&(dx, dy)| {
                    let (nx, ny) = (x + dx, y + dy);
                    nx < 0
                        || ny < 0
                        || nx >= b.width as i32
                        || ny >= b.height as i32
                        || b.get(nx as usize, ny as usize) == 0
                });
                assert!(has_bg, "({x},{y}) has no background 4-neighbor");
            }
        }
    }
}
