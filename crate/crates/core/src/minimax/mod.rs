//! Minimax path classes of non-contractible loops, their transgression, the
//! path action and the numerical mountain pass.
//!
//! A path is a list of lifted loops joined by straight segments. Sums along a
//! path use the midpoint rule on those segments, so the transgression of a
//! path (the integral of `dA` with `A` the lifted signed area, quadratic in the
//! vertices) is exact.

mod census;
mod mountain;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use census::{
    energy_scan, hausdorff_on_torus, same_orbit, Census, CensusOrbit, OrbitKind, ScanParams, ScanResult, ScanRow,
};
pub use mountain::{mountain_pass, MinimaxParams, MinimaxRecord};

use crate::error::{Error, Result};
use crate::geometry::{cross, Vec2};
use crate::loopspace::{DiscreteLoop, LoopSpace, LoopTangent};

/// A piecewise-linear path of loops with shared vertex count and winding.
#[derive(Clone, Debug)]
pub struct LoopPath {
    nodes: Vec<DiscreteLoop>,
}

impl LoopPath {
    pub fn new(nodes: Vec<DiscreteLoop>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidInput("a path needs at least two nodes".into()));
        }
        let (n, w) = (nodes[0].len(), nodes[0].winding());
        if nodes.iter().any(|l| l.len() != n || l.winding() != w) {
            return Err(Error::InvalidInput("path nodes must share vertex count and winding".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[DiscreteLoop] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn first(&self) -> &DiscreteLoop {
        &self.nodes[0]
    }

    pub fn last(&self) -> &DiscreteLoop {
        &self.nodes[self.nodes.len() - 1]
    }

    pub fn winding(&self) -> (i64, i64) {
        self.nodes[0].winding()
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut [DiscreteLoop] {
        &mut self.nodes
    }

    /// Whether the endpoints agree on the torus up to cyclic reindexing, within `tol` per vertex.
    pub fn endpoints_coincide(&self, tol: f64) -> bool {
        let (a, b) = (self.first(), self.last());
        if (a.period() - b.period()).abs() > tol {
            return false;
        }
        let n = a.len();
        (0..n as isize).any(|shift| {
            let r = a.reindexed(shift);
            let offset = b.vertices()[0] - r.vertices()[0];
            let deck = offset.map(f64::round);
            (offset - deck).amax() <= tol
                && r.vertices().iter().zip(b.vertices()).all(|(p, q)| (q - p - deck).amax() <= tol)
        })
    }
}

fn midpoint(a: &DiscreteLoop, b: &DiscreteLoop) -> (DiscreteLoop, LoopTangent) {
    let d = LoopTangent::between(a, b);
    (d.apply(a, 0.5), d)
}

/// `dA(xi) = sum_i xi_i x (x_{i+1} - x_{i-1}) / 2` at loop `l`.
fn area_form(l: &DiscreteLoop, xi: &LoopTangent) -> f64 {
    (0..l.len()).map(|i| 0.5 * cross(xi.dx[i], l.vertex(i as isize + 1) - l.vertex(i as isize - 1))).sum()
}

/// Discrete integral of the transgression form along the path.
pub fn transgression(path: &LoopPath) -> f64 {
    path.nodes
        .windows(2)
        .map(|w| {
            let (mid, d) = midpoint(&w[0], &w[1]);
            area_form(&mid, &d)
        })
        .sum()
}

/// Path action at every node: `local_action(node 0)` plus cumulative
/// midpoint-rule integrals of `eta` along the segments.
pub fn eta_line_integral(space: &LoopSpace, path: &LoopPath, k: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.len());
    let mut s = space.local_action(path.first(), k);
    out.push(s);
    for w in path.nodes.windows(2) {
        let (mid, d) = midpoint(&w[0], &w[1]);
        s += space.eta(&mid, k).pair(&d);
        out.push(s);
    }
    out
}

/// Path action at every node as the local primitive of the lifted node.
///
/// Along a continuous lifted path `eta` is the exact differential of
/// [`LoopSpace::local_action`], so this is the integral that
/// [`eta_line_integral`] approximates by quadrature.
pub fn path_action(space: &LoopSpace, path: &LoopPath, k: f64) -> Vec<f64> {
    path.nodes.iter().map(|l| space.local_action(l, k)).collect()
}

/// The smallest unit direction pairing positively with `winding`.
pub fn default_direction(winding: (i64, i64)) -> Option<(i64, i64)> {
    let (a, b) = winding;
    [(1, 0), (0, 1), (-1, 0), (0, -1)].into_iter().find(|&(p, q)| p * b - q * a > 0)
}

/// The path `s -> iterate(alpha, n) + s (p, q)` with `nodes + 1` nodes.
pub fn build_class_representative(
    alpha: &DiscreteLoop,
    n: usize,
    direction: (i64, i64),
    nodes: usize,
) -> Result<LoopPath> {
    let (a, b) = alpha.winding();
    let (p, q) = direction;
    if p * b - q * a == 0 {
        return Err(Error::InvalidDirection { p, q, a, b });
    }
    if n == 0 || nodes == 0 {
        return Err(Error::InvalidInput("iterate index and node count must be positive".into()));
    }
    let base = alpha.iterate(n)?;
    let shift = Vec2::new(p as f64, q as f64);
    LoopPath::new((0..=nodes).map(|j| base.translated(shift * (j as f64 / nodes as f64))).collect())
}

/// Outcome of [`certify_strict_minimizer`].
#[derive(Clone, Debug)]
pub struct StrictnessReport {
    pub trials: usize,
    pub increased: usize,
    pub smallest_increase: f64,
}

impl StrictnessReport {
    pub fn is_strict(&self) -> bool {
        self.increased == self.trials
    }
}

/// Tests whether random small band-limited perturbations of `alpha` all raise the local action.
pub fn certify_strict_minimizer(
    space: &LoopSpace,
    alpha: &DiscreteLoop,
    k: f64,
    trials: usize,
    amplitude: f64,
    seed: u64,
) -> StrictnessReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = space.local_action(alpha, k);
    let n = alpha.len();
    let mut increased = 0;
    let mut smallest = f64::INFINITY;
    for _ in 0..trials {
        let modes: Vec<[f64; 4]> = (0..4).map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0))).collect();
        let dx = (0..n)
            .map(|i| {
                let s = i as f64 / n as f64;
                modes.iter().enumerate().fold(Vec2::zeros(), |acc, (j, c)| {
                    let (sn, cs) = (std::f64::consts::TAU * j as f64 * s).sin_cos();
                    acc + Vec2::new(c[0] * cs + c[1] * sn, c[2] * cs + c[3] * sn)
                })
            })
            .collect();
        let xi = LoopTangent { dx, dt: rng.gen_range(-1.0..1.0) * alpha.period() };
        let scale = amplitude / space.norm(&xi).max(f64::MIN_POSITIVE);
        let delta = space.local_action(&xi.apply(alpha, scale), k) - base;
        smallest = smallest.min(delta);
        if delta > 0.0 {
            increased += 1;
        }
    }
    StrictnessReport { trials, increased, smallest_increase: smallest }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MagneticDensity, TorusSystem};

    fn line(n: usize, winding: (i64, i64), offset: Vec2) -> DiscreteLoop {
        let w = Vec2::new(winding.0 as f64, winding.1 as f64);
        DiscreteLoop::from_fn(n, winding, 1.0, |s| offset + w * s + Vec2::new(0.03 * (6.0 * s).sin(), 0.0)).unwrap()
    }

    #[test]
    fn translation_pairings() {
        let up = line(32, (0, 1), Vec2::new(0.2, 0.1));
        let path = build_class_representative(&up, 1, (1, 0), 16).unwrap();
        assert!((transgression(&path) - 1.0).abs() < 1e-10);
        assert!(path.endpoints_coincide(1e-12));
        let l = line(32, (1, 2), Vec2::new(0.3, 0.4));
        let path = build_class_representative(&l, 1, (1, 0), 8).unwrap();
        assert!((transgression(&path) - 2.0).abs() < 1e-10);
        let triple = build_class_representative(&up, 3, (1, 0), 16).unwrap();
        assert!((transgression(&triple) - 3.0).abs() < 1e-10);
        assert!(matches!(build_class_representative(&up, 1, (0, 1), 16), Err(Error::InvalidDirection { .. })));
    }

    #[test]
    fn constant_path_is_flat() {
        let space = LoopSpace::new(TorusSystem::flat(MagneticDensity::strip_field()), 32).unwrap();
        let l = line(32, (0, 1), Vec2::new(0.2, 0.0));
        let path = LoopPath::new(vec![l.clone(); 5]).unwrap();
        assert_eq!(transgression(&path), 0.0);
        let s = eta_line_integral(&space, &path, 0.01);
        assert!(s.iter().all(|&v| v == space.local_action(&l, 0.01)));
    }

    #[test]
    fn default_direction_pairs_positively() {
        for w in [(0, 1), (0, -1), (1, 0), (-2, 3), (3, -1)] {
            let (p, q) = default_direction(w).unwrap();
            assert!(p * w.1 - q * w.0 > 0);
            assert_eq!(p.abs() + q.abs(), 1);
        }
        assert_eq!(default_direction((0, 0)), None);
    }

    #[test]
    fn flux_quantization_around_translation_loop() {
        let space = LoopSpace::new(TorusSystem::flat(MagneticDensity::strip_field()), 32).unwrap();
        let up = line(32, (0, 1), Vec2::new(0.2, 0.0));
        let path = build_class_representative(&up, 1, (1, 0), 1024).unwrap();
        let s = eta_line_integral(&space, &path, 0.005);
        let total = s[s.len() - 1] - s[0];
        assert!((total - space.system().flux()).abs() < 1e-6, "{total}");
    }

    #[test]
    fn strip_minimizer_is_strict() {
        let space = LoopSpace::new(TorusSystem::flat(MagneticDensity::strip_field()), 32).unwrap();
        let alpha = DiscreteLoop::from_fn(128, (0, 1), 10.0, |s| Vec2::new(1.0 / 6.0, s)).unwrap();
        let report = certify_strict_minimizer(&space, &alpha, 0.005, 20, 1e-3, 9);
        assert!(report.is_strict(), "{report:?}");
    }
}
