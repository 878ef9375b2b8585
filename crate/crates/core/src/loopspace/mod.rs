//! Discrete free-period loop space.
//!
//! A loop is `N` lifted vertices `x_0..x_{N-1}` in `R^2` at parameters `i / N`,
//! a winding class `w = (a, b)` with the periodic-plus-winding extension
//! `x_{i+N} = x_i + w`, and a period `T > 0`.

mod action;
mod flux;
mod metric;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use action::{ActionCovector, LoopSpace, LoopTangent};
pub use flux::FluxDecomposition;
pub use metric::{cyclic_tridiagonal_solve, LoopMetric};

use crate::error::{Error, Result};
use crate::geometry::{MetricField, Vec2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLoop {
    vertices: Vec<Vec2>,
    winding: (i64, i64),
    period: f64,
}

impl DiscreteLoop {
    pub fn new(vertices: Vec<Vec2>, winding: (i64, i64), period: f64) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidInput(format!("a loop needs at least 3 vertices, got {}", vertices.len())));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidInput(format!("period must be positive, got {period}")));
        }
        Ok(Self { vertices, winding, period })
    }

    /// Loop from a lifted polyline whose last point closes the first one up to a deck translation.
    ///
    /// The winding is the rounded displacement and must be within `1e-6` of an integer vector.
    pub fn from_closed_polyline(mut points: Vec<Vec2>, period: f64) -> Result<Self> {
        let last = points.pop().ok_or_else(|| Error::InvalidInput("empty polyline".into()))?;
        let disp = last - points[0];
        let w = (disp.x.round(), disp.y.round());
        if (disp.x - w.0).abs() > 1e-6 || (disp.y - w.1).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!("broken lift: displacement ({}, {})", disp.x, disp.y)));
        }
        Self::new(points, (w.0 as i64, w.1 as i64), period)
    }

    /// Samples `curve(s)` at `s = i / n`; `curve(1) - curve(0)` must be the winding.
    pub fn from_fn(n: usize, winding: (i64, i64), period: f64, curve: impl Fn(f64) -> Vec2) -> Result<Self> {
        Self::new((0..n).map(|i| curve(i as f64 / n as f64)).collect(), winding, period)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn vertices_mut(&mut self) -> &mut [Vec2] {
        &mut self.vertices
    }

    pub fn winding(&self) -> (i64, i64) {
        self.winding
    }

    pub fn is_contractible(&self) -> bool {
        self.winding == (0, 0)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn set_period(&mut self, period: f64) {
        self.period = period;
    }

    /// Deck displacement `(a, b)` as a vector.
    pub fn closing(&self) -> Vec2 {
        Vec2::new(self.winding.0 as f64, self.winding.1 as f64)
    }

    /// Vertex of the periodic-plus-winding extension.
    pub fn vertex(&self, i: isize) -> Vec2 {
        let n = self.vertices.len() as isize;
        self.vertices[i.rem_euclid(n) as usize] + self.closing() * i.div_euclid(n) as f64
    }

    /// Edge vector `x_{i+1} - x_i`.
    pub fn edge(&self, i: usize) -> Vec2 {
        self.vertex(i as isize + 1) - self.vertices[i]
    }

    /// Base-point change by `shift` vertices (the discrete circle action).
    pub fn reindexed(&self, shift: isize) -> Self {
        let n = self.len() as isize;
        let vertices = (0..n).map(|i| self.vertex(i + shift)).collect();
        Self { vertices, ..self.clone() }
    }

    pub fn translated(&self, by: Vec2) -> Self {
        Self { vertices: self.vertices.iter().map(|v| v + by).collect(), ..self.clone() }
    }

    /// `n`-th iterate: `n N` vertices, winding `n w`, period `n T`.
    pub fn iterate(&self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("iterate index must be >= 1".into()));
        }
        let w = self.closing();
        let mut vertices = Vec::with_capacity(n * self.len());
        for r in 0..n {
            vertices.extend(self.vertices.iter().map(|v| v + w * r as f64));
        }
        Ok(Self {
            vertices,
            winding: (self.winding.0 * n as i64, self.winding.1 * n as i64),
            period: self.period * n as f64,
        })
    }

    /// Metric length of each edge, midpoint rule.
    pub fn edge_lengths(&self, metric: &MetricField) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let e = self.edge(i);
                let mid = self.vertices[i] + e * 0.5;
                e.dot(&(metric.tensor(mid) * e)).sqrt()
            })
            .collect()
    }

    pub fn length(&self, metric: &MetricField) -> f64 {
        self.edge_lengths(metric).iter().sum()
    }

    /// Resample to `n` vertices at uniform metric arc length, keeping vertex 0, winding and period.
    pub fn resampled(&self, metric: &MetricField, n: usize) -> Result<Self> {
        let lengths = self.edge_lengths(metric);
        let total: f64 = lengths.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("cannot resample a loop of zero length".into()));
        }
        let mut out = Vec::with_capacity(n);
        let mut edge = 0usize;
        let mut acc = 0.0;
        for j in 0..n {
            let target = total * j as f64 / n as f64;
            while edge + 1 < lengths.len() && acc + lengths[edge] < target {
                acc += lengths[edge];
                edge += 1;
            }
            let t = if lengths[edge] > 0.0 { ((target - acc) / lengths[edge]).clamp(0.0, 1.0) } else { 0.0 };
            out.push(self.vertices[edge] + self.edge(edge) * t);
        }
        Self::new(out, self.winding, self.period)
    }

    /// Lifted signed area `1/2 sum x_i x x_{i+1} + 1/2 x_0 x w`.
    ///
    /// Its gradient at vertex `i` is `1/2 J (x_{i+1} - x_{i-1})`. For winding
    /// loops it depends on the chosen lift: shifting the lift by an integer
    /// vector `v` changes it by `v x w`.
    pub fn signed_area(&self) -> f64 {
        let c = |u: Vec2, v: Vec2| u.x * v.y - u.y * v.x;
        let n = self.len();
        let mut s = 0.0;
        for i in 0..n {
            s += c(self.vertices[i], self.vertex(i as isize + 1));
        }
        0.5 * (s + c(self.vertices[0], self.closing()))
    }

    /// CSV with a `# T=<period> winding=<a>,<b>` header and `i,x1,x2` rows.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# T={} winding={},{}\ni,x1,x2\n", self.period, self.winding.0, self.winding.1);
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{}", v.x, v.y);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidInput(format!("loop csv: {m}"));
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        let rest = header.strip_prefix("# T=").ok_or_else(|| bad("missing header"))?;
        let (t, w) = rest.split_once(" winding=").ok_or_else(|| bad("missing winding"))?;
        let period: f64 = t.trim().parse().map_err(|_| bad("period"))?;
        let (a, b) = w.trim().split_once(',').ok_or_else(|| bad("winding"))?;
        let winding = (a.parse().map_err(|_| bad("winding a"))?, b.parse().map_err(|_| bad("winding b"))?);
        if lines.next().map(str::trim) != Some("i,x1,x2") {
            return Err(bad("missing column header"));
        }
        let mut vertices = Vec::new();
        for (row, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 || f[0].parse::<usize>().ok() != Some(row) {
                return Err(bad(&format!("row {row}")));
            }
            let x: f64 = f[1].parse().map_err(|_| bad("x1"))?;
            let y: f64 = f[2].parse().map_err(|_| bad("x2"))?;
            vertices.push(Vec2::new(x, y));
        }
        Self::new(vertices, winding, period)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wiggly(n: usize, w: (i64, i64)) -> DiscreteLoop {
        DiscreteLoop::from_fn(n, w, 1.3, |s| {
            let t = std::f64::consts::TAU * s;
            Vec2::new(0.3 + 0.05 * t.sin() + w.0 as f64 * s, 0.2 + 0.04 * (2.0 * t).cos() + w.1 as f64 * s)
        })
        .unwrap()
    }

    #[test]
    fn polyline_winding_is_validated() {
        let pts = vec![Vec2::new(0.0, 0.0), Vec2::new(0.5, 0.1), Vec2::new(0.7, 0.7), Vec2::new(1.0, 0.0)];
        assert_eq!(DiscreteLoop::from_closed_polyline(pts.clone(), 1.0).unwrap().winding(), (1, 0));
        let mut broken = pts;
        broken[3].y = 0.01;
        assert!(DiscreteLoop::from_closed_polyline(broken, 1.0).is_err());
        assert!(DiscreteLoop::new(vec![Vec2::zeros(); 3], (0, 0), 0.0).is_err());
    }

    #[test]
    fn iterate_identities() {
        let l = wiggly(16, (1, 0));
        assert_eq!(l.iterate(1).unwrap(), l);
        let l3 = l.iterate(3).unwrap();
        assert_eq!(l3.winding(), (3, 0));
        assert!((l3.period() - 3.0 * l.period()).abs() < 1e-15);
        assert_eq!(l3.len(), 48);
        assert!(l.iterate(0).is_err());
    }

    #[test]
    fn lift_shift_changes_area_by_integer() {
        let l = wiggly(32, (1, 0));
        let shifted = l.translated(Vec2::new(0.0, 1.0));
        // v x w = 0 * 0 - 1 * 1
        assert!((shifted.signed_area() - l.signed_area() + 1.0).abs() < 1e-12);
        let along = l.translated(Vec2::new(2.0, 0.0));
        assert!((along.signed_area() - l.signed_area()).abs() < 1e-12);
    }

    #[test]
    fn resampling_keeps_class() {
        let l = wiggly(40, (0, 1));
        let r = l.resampled(&MetricField::flat(), 64).unwrap();
        assert_eq!(r.winding(), (0, 1));
        assert_eq!(r.vertices()[0], l.vertices()[0]);
        let lens = r.edge_lengths(&MetricField::flat());
        let mean = lens.iter().sum::<f64>() / lens.len() as f64;
        assert!(lens.iter().all(|x| (x / mean - 1.0).abs() < 0.05));
    }

    #[test]
    fn csv_round_trip() {
        let l = wiggly(10, (2, -1));
        assert_eq!(DiscreteLoop::from_csv(&l.to_csv()).unwrap(), l);
        assert!(DiscreteLoop::from_csv("i,x1,x2\n").is_err());
    }

    proptest! {
        #[test]
        fn winding_and_area_invariant_under_reindexing(shift in -50isize..50, a in -2i64..3, b in -2i64..3) {
            let l = wiggly(20, (a, b));
            let r = l.reindexed(shift);
            prop_assert_eq!(r.winding(), l.winding());
            prop_assert!((r.signed_area() - l.signed_area()).abs() < 1e-10);
        }
    }
}
