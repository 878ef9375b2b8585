//! Oriented boundary curves of cell masks on the periodic lattice.

use std::collections::HashSet;

/// A closed lattice curve: lifted integer vertices in grid units, the curve
/// continuing as `points[0] + m * winding` after the last point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeCurve {
    pub points: Vec<(i64, i64)>,
    pub winding: (i64, i64),
}

const STEPS: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Boundary of `mask` with the region on the left of each curve.
///
/// Every exposed cell side becomes a directed lattice edge running
/// counter-clockwise around its cell. At a vertex where two curves touch
/// diagonally the left turn is taken, which keeps diagonal neighbours apart.
pub fn extract_boundary(m: usize, mask: &[bool]) -> Vec<LatticeCurve> {
    let mi = m as i64;
    let inside = |i: i64, j: i64| mask[(i.rem_euclid(mi) * mi + j.rem_euclid(mi)) as usize];
    let wrap = |p: (i64, i64)| (p.0.rem_euclid(mi), p.1.rem_euclid(mi));

    // directed edges keyed by (start vertex mod m, direction)
    let mut edges: Vec<((i64, i64), usize)> = Vec::new();
    for i in 0..mi {
        for j in 0..mi {
            if !inside(i, j) {
                continue;
            }
            if !inside(i, j - 1) {
                edges.push(((i, j), 0));
            }
            if !inside(i + 1, j) {
                edges.push((wrap((i + 1, j)), 1));
            }
            if !inside(i, j + 1) {
                edges.push((wrap((i + 1, j + 1)), 2));
            }
            if !inside(i - 1, j) {
                edges.push((wrap((i, j + 1)), 3));
            }
        }
    }
    let present: HashSet<((i64, i64), usize)> = edges.iter().copied().collect();
    let mut used: HashSet<((i64, i64), usize)> = HashSet::new();
    let mut curves = Vec::new();

    for &start in &edges {
        if used.contains(&start) {
            continue;
        }
        let mut points = Vec::new();
        let mut lifted = start.0;
        let mut edge = start;
        loop {
            used.insert(edge);
            points.push(lifted);
            let d = edge.1;
            lifted = (lifted.0 + STEPS[d].0, lifted.1 + STEPS[d].1);
            let at = wrap(lifted);
            let next = [(d + 1) % 4, d, (d + 3) % 4]
                .into_iter()
                .map(|nd| (at, nd))
                .find(|e| present.contains(e))
                .expect("lattice boundary is closed");
            if next == start {
                break;
            }
            edge = next;
        }
        let disp = (lifted.0 - start.0 .0, lifted.1 - start.0 .1);
        debug_assert!(disp.0 % mi == 0 && disp.1 % mi == 0);
        curves.push(LatticeCurve { points, winding: (disp.0 / mi, disp.1 / mi) });
    }
    curves
}
