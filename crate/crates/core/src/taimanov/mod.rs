//! Discrete Taimanov functional `T_k(P) = sqrt(2k) l(dP) + int_P sigma` over
//! cell regions of a periodic `m x m` grid.
//!
//! Perimeter plus a linear term is submodular, so the global minimizer over
//! all masks is found exactly by one minimum cut.

mod boundary;
mod maxflow;

use log::warn;
use serde::Serialize;

pub use boundary::{extract_boundary, LatticeCurve};
pub use maxflow::FlowNetwork;

use crate::error::{Error, Result};
use crate::geometry::{TorusSystem, Vec2};
use crate::loopspace::DiscreteLoop;

/// Cell weights and edge lengths of the periodic grid. Cell `(i, j)` is
/// `[i/m, (i+1)/m] x [j/m, (j+1)/m]` and is stored at index `i * m + j`.
#[derive(Clone, Debug)]
pub struct TaimanovGrid {
    m: usize,
    /// `f sqrt(det G)` at the cell centre times the cell area.
    weights: Vec<f64>,
    /// Length of the edge between cells `(i, j)` and `(i + 1, j)`.
    east: Vec<f64>,
    /// Length of the edge between cells `(i, j)` and `(i, j + 1)`.
    north: Vec<f64>,
}

impl TaimanovGrid {
    pub fn new(system: &TorusSystem, m: usize) -> Result<Self> {
        if m < 4 {
            return Err(Error::InvalidInput(format!("grid must be at least 4x4, got {m}")));
        }
        let h = 1.0 / m as f64;
        let mut weights = Vec::with_capacity(m * m);
        let mut east = Vec::with_capacity(m * m);
        let mut north = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                let (x, y) = (i as f64 * h, j as f64 * h);
                weights.push(system.sigma_density(Vec2::new(x + 0.5 * h, y + 0.5 * h)) * h * h);
                east.push(system.metric.tensor(Vec2::new(x + h, y + 0.5 * h))[(1, 1)].sqrt() * h);
                north.push(system.metric.tensor(Vec2::new(x + 0.5 * h, y + h))[(0, 0)].sqrt() * h);
            }
        }
        Ok(Self { m, weights, east, north })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn east_of(&self, idx: usize) -> usize {
        let m = self.m;
        ((idx / m + 1) % m) * m + idx % m
    }

    fn north_of(&self, idx: usize) -> usize {
        let m = self.m;
        (idx / m) * m + (idx % m + 1) % m
    }

    fn check(&self, mask: &[bool]) {
        assert_eq!(mask.len(), self.m * self.m, "mask size does not match the grid");
    }

    /// Metric length of the exposed cell edges.
    pub fn perimeter(&self, mask: &[bool]) -> f64 {
        self.check(mask);
        let mut p = 0.0;
        for idx in 0..mask.len() {
            if mask[idx] != mask[self.east_of(idx)] {
                p += self.east[idx];
            }
            if mask[idx] != mask[self.north_of(idx)] {
                p += self.north[idx];
            }
        }
        p
    }

    pub fn flux(&self, mask: &[bool]) -> f64 {
        self.check(mask);
        mask.iter().zip(&self.weights).filter(|(&b, _)| b).map(|(_, w)| w).sum()
    }

    pub fn value(&self, mask: &[bool], k: f64) -> f64 {
        (2.0 * k).sqrt() * self.perimeter(mask) + self.flux(mask)
    }

    /// The smallest global minimizer of the discrete functional at energy `k`.
    pub fn minimize(&self, k: f64) -> Vec<bool> {
        let cells = self.m * self.m;
        let (s, t) = (cells, cells + 1);
        let mut net = FlowNetwork::new(cells + 2);
        let speed = (2.0 * k).sqrt();
        for idx in 0..cells {
            let w = self.weights[idx];
            if w < 0.0 {
                net.add_edge(s, idx, -w, 0.0);
            } else if w > 0.0 {
                net.add_edge(idx, t, w, 0.0);
            }
            let c = speed * self.east[idx];
            net.add_edge(idx, self.east_of(idx), c, c);
            let c = speed * self.north[idx];
            net.add_edge(idx, self.north_of(idx), c, c);
        }
        net.max_flow(s, t);
        let mut side = net.source_side(s);
        side.truncate(cells);
        side
    }
}

/// A cell region with its functional value and oriented boundary.
#[derive(Clone, Debug, Serialize)]
pub struct GridRegion {
    pub m: usize,
    pub k: f64,
    #[serde(skip)]
    pub mask: Vec<bool>,
    pub value: f64,
    pub perimeter: f64,
    pub flux: f64,
    #[serde(skip)]
    pub boundary: Vec<LatticeCurve>,
}

impl GridRegion {
    pub fn from_mask(grid: &TaimanovGrid, k: f64, mask: Vec<bool>) -> Self {
        let perimeter = grid.perimeter(&mask);
        let flux = grid.flux(&mask);
        let boundary = extract_boundary(grid.m(), &mask);
        Self { m: grid.m(), k, value: grid.value(&mask, k), perimeter, flux, mask, boundary }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.mask[(i % self.m) * self.m + j % self.m]
    }

    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// `{k, value, perimeter, flux, n_boundary_curves}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "value": self.value,
            "perimeter": self.perimeter,
            "flux": self.flux,
            "n_boundary_curves": self.boundary.len(),
        })
    }

    /// Plain PBM; the top row is the largest `q2`, the left column `q1 = 0`.
    pub fn to_pbm(&self) -> String {
        let mut s = format!("P1\n{} {}\n", self.m, self.m);
        for row in 0..self.m {
            let j = self.m - 1 - row;
            let line: Vec<&str> = (0..self.m).map(|i| if self.contains(i, j) { "1" } else { "0" }).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

/// `T_k` of a mask on the `m x m` grid, `m = sqrt(mask.len())`.
pub fn taimanov_value(system: &TorusSystem, k: f64, mask: &[bool]) -> Result<f64> {
    let m = (mask.len() as f64).sqrt().round() as usize;
    if m * m != mask.len() {
        return Err(Error::InvalidInput(format!("mask of length {} is not square", mask.len())));
    }
    Ok(TaimanovGrid::new(system, m)?.value(mask, k))
}

pub fn minimize_taimanov(system: &TorusSystem, k: f64, grid_m: usize) -> Result<GridRegion> {
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!("energy must be positive, got {k}")));
    }
    let grid = TaimanovGrid::new(system, grid_m)?;
    let mask = grid.minimize(k);
    Ok(GridRegion::from_mask(&grid, k, mask))
}

/// Values below this count as negative; rounding in the cut can leave `-1e-17`.
const NEGATIVE: f64 = -1e-12;

/// Bisection estimate of `sup { k : min T_k < 0 }` to width `tol_k`.
pub fn tau_plus_estimate(system: &TorusSystem, k_lo: f64, k_hi: f64, tol_k: f64, grid_m: usize) -> Result<f64> {
    let grid = TaimanovGrid::new(system, grid_m)?;
    let negative = |k: f64| {
        let mask = grid.minimize(k);
        grid.value(&mask, k) < NEGATIVE
    };
    if !(0.0 < k_lo && k_lo < k_hi) || !negative(k_lo) || negative(k_hi) {
        return Err(Error::Bracket { k_lo, k_hi });
    }
    let (mut lo, mut hi) = (k_lo, k_hi);
    while hi - lo > tol_k {
        let mid = 0.5 * (lo + hi);
        if negative(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smoothing passes applied to lattice boundaries before resampling.
pub const SMOOTHING_PASSES: usize = 5;

/// Seed loops from the boundary curves of `region`: smoothed, resampled to `n`
/// vertices at uniform metric arc length, with period `length / sqrt(2k)`.
pub fn boundary_to_seed(system: &TorusSystem, k: f64, region: &GridRegion, n: usize) -> Result<Vec<DiscreteLoop>> {
    if region.boundary.is_empty() {
        return Err(Error::InvalidInput("region has no boundary curves".into()));
    }
    let h = 1.0 / region.m as f64;
    let mut seeds = Vec::new();
    for curve in &region.boundary {
        // a single isolated cell has four edges and no useful shape
        if curve.points.len() <= 4 {
            warn!("skipping degenerate boundary curve with {} lattice edges", curve.points.len());
            continue;
        }
        let w = Vec2::new(curve.winding.0 as f64, curve.winding.1 as f64);
        let mut pts: Vec<Vec2> = curve.points.iter().map(|&(a, b)| Vec2::new(a as f64, b as f64) * h).collect();
        let len = pts.len();
        for _ in 0..SMOOTHING_PASSES {
            let prev = pts.clone();
            for i in 0..len {
                let before = if i == 0 { prev[len - 1] - w } else { prev[i - 1] };
                let after = if i + 1 == len { prev[0] + w } else { prev[i + 1] };
                pts[i] = 0.25 * before + 0.5 * prev[i] + 0.25 * after;
            }
        }
        let polygon = DiscreteLoop::new(pts, curve.winding, 1.0)?;
        let mut seed = polygon.resampled(&system.metric, n)?;
        let length = seed.length(&system.metric);
        seed.set_period(length / (2.0 * k).sqrt());
        seeds.push(seed);
    }
    Ok(seeds)
}
