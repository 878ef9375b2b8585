use crate::error::Result;
use crate::geometry::{rot, TorusSystem, Vec2};

use super::flux::FluxDecomposition;
use super::metric::LoopMetric;
use super::DiscreteLoop;

/// Tangent vector at a loop: one displacement per vertex plus a period rate.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopTangent {
    pub dx: Vec<Vec2>,
    pub dt: f64,
}

impl LoopTangent {
    pub fn zeros(n: usize) -> Self {
        Self { dx: vec![Vec2::zeros(); n], dt: 0.0 }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dx: self.dx.iter().map(|v| v * s).collect(), dt: self.dt * s }
    }

    /// Moves `loop_` by `h` times this vector.
    pub fn apply(&self, loop_: &DiscreteLoop, h: f64) -> DiscreteLoop {
        let mut out = loop_.clone();
        for (x, d) in out.vertices_mut().iter_mut().zip(&self.dx) {
            *x += d * h;
        }
        out.set_period(loop_.period() + h * self.dt);
        out
    }

    /// Difference `b - a` of two loops with equal vertex count.
    pub fn between(a: &DiscreteLoop, b: &DiscreteLoop) -> Self {
        Self { dx: a.vertices().iter().zip(b.vertices()).map(|(p, q)| q - p).collect(), dt: b.period() - a.period() }
    }
}

/// Discrete value of the action 1-form at a loop.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionCovector {
    pub dx: Vec<Vec2>,
    pub dt: f64,
    /// Dual norm in the configured loop metric.
    pub h1_norm: f64,
}

impl ActionCovector {
    /// Dual pairing with a tangent vector.
    pub fn pair(&self, v: &LoopTangent) -> f64 {
        self.dx.iter().zip(&v.dx).map(|(a, b)| a.dot(b)).sum::<f64>() + self.dt * v.dt
    }

    pub fn is_zero(&self) -> bool {
        self.dt == 0.0 && self.dx.iter().all(|v| v.x == 0.0 && v.y == 0.0)
    }
}

/// The discrete loop space over a torus system.
///
/// The discrete local action of a lifted loop is
///
/// ```text
/// S_k(x, T) = e(x) / T + k T + sum_i theta0(m_i) . (x_{i+1} - x_i) + c A(x)
/// ```
///
/// with `m_i` the edge midpoints, `e(x) = N/2 sum_i dx_i^T G(m_i) dx_i`, and
/// `A` the lifted signed area. [`LoopSpace::eta`] returns its exact gradient,
/// so line integrals of `eta` along a path of lifted loops telescope.
#[derive(Clone, Debug)]
pub struct LoopSpace {
    system: TorusSystem,
    decomposition: FluxDecomposition,
    metric: LoopMetric,
}

impl LoopSpace {
    pub fn new(system: TorusSystem, grid_n: usize) -> Result<Self> {
        let decomposition = FluxDecomposition::new(&system, grid_n)?;
        Ok(Self { system, decomposition, metric: LoopMetric::H1 })
    }

    pub fn with_metric(mut self, metric: LoopMetric) -> Self {
        self.metric = metric;
        self
    }

    pub fn system(&self) -> &TorusSystem {
        &self.system
    }

    pub fn decomposition(&self) -> &FluxDecomposition {
        &self.decomposition
    }

    pub fn loop_metric(&self) -> LoopMetric {
        self.metric
    }

    /// Midpoint-rule kinetic energy `1/2 int |x'|^2 ds`.
    pub fn kinetic_energy(&self, l: &DiscreteLoop) -> f64 {
        let n = l.len();
        let metric = &self.system.metric;
        let mut e = 0.0;
        for i in 0..n {
            let d = l.edge(i);
            if metric.is_flat() {
                e += d.norm_squared();
            } else {
                e += d.dot(&(metric.tensor(l.vertices()[i] + d * 0.5) * d));
            }
        }
        0.5 * n as f64 * e
    }

    /// `e / T + k T`.
    pub fn action(&self, l: &DiscreteLoop, k: f64) -> f64 {
        self.kinetic_energy(l) / l.period() + k * l.period()
    }

    /// Magnetic part of the local action relative to the loop's lift.
    pub fn magnetic_action(&self, l: &DiscreteLoop) -> f64 {
        let mut w = 0.0;
        if self.decomposition.mode_count() > 0 {
            for i in 0..l.len() {
                let d = l.edge(i);
                w += self.decomposition.theta(l.vertices()[i] + d * 0.5).dot(&d);
            }
        }
        w + self.decomposition.flux() * l.signed_area()
    }

    /// Local primitive of `eta` at a lifted loop; two lifts differ by flux times an integer.
    pub fn local_action(&self, l: &DiscreteLoop, k: f64) -> f64 {
        self.action(l, k) + self.magnetic_action(l)
    }

    /// Gradient of `e` with respect to the vertices.
    fn kinetic_gradient(&self, l: &DiscreteLoop) -> Vec<Vec2> {
        let n = l.len();
        let nf = n as f64;
        let metric = &self.system.metric;
        let mut grad = vec![Vec2::zeros(); n];
        for i in 0..n {
            let d = l.edge(i);
            let j = (i + 1) % n;
            if metric.is_flat() {
                grad[i] -= d * nf;
                grad[j] += d * nf;
            } else {
                let mid = l.vertices()[i] + d * 0.5;
                let gd = metric.tensor(mid) * d;
                let dg = metric.derivatives(mid);
                let shared = Vec2::new(d.dot(&(dg[0] * d)), d.dot(&(dg[1] * d))) * (0.25 * nf);
                grad[i] += shared - gd * nf;
                grad[j] += shared + gd * nf;
            }
        }
        grad
    }

    /// Gradient of the magnetic part.
    fn magnetic_gradient(&self, l: &DiscreteLoop) -> Vec<Vec2> {
        let n = l.len();
        let c = self.decomposition.flux();
        let mut grad: Vec<Vec2> = (0..n as isize).map(|i| rot(l.vertex(i + 1) - l.vertex(i - 1)) * (0.5 * c)).collect();
        if self.decomposition.mode_count() > 0 {
            for i in 0..n {
                let d = l.edge(i);
                let (theta, jac) = self.decomposition.theta_with_jacobian(l.vertices()[i] + d * 0.5);
                let half = jac.transpose() * d * 0.5;
                grad[i] += half - theta;
                grad[(i + 1) % n] += half + theta;
            }
        }
        grad
    }

    /// The action 1-form at `l`: exact gradient of [`LoopSpace::local_action`].
    pub fn eta(&self, l: &DiscreteLoop, k: f64) -> ActionCovector {
        let t = l.period();
        let e = self.kinetic_energy(l);
        let kin = self.kinetic_gradient(l);
        let mag = self.magnetic_gradient(l);
        let dx: Vec<Vec2> = kin.iter().zip(&mag).map(|(a, b)| a / t + b).collect();
        let dt = -e / (t * t) + k;
        let mut out = ActionCovector { dx, dt, h1_norm: 0.0 };
        out.h1_norm = self.dual_norm(&out);
        out
    }

    /// Riesz representative of a covector in the loop metric.
    pub fn sharp(&self, eta: &ActionCovector) -> LoopTangent {
        let mut xs: Vec<f64> = eta.dx.iter().map(|v| v.x).collect();
        let mut ys: Vec<f64> = eta.dx.iter().map(|v| v.y).collect();
        self.metric.solve(&mut xs);
        self.metric.solve(&mut ys);
        LoopTangent { dx: xs.into_iter().zip(ys).map(|(x, y)| Vec2::new(x, y)).collect(), dt: eta.dt }
    }

    fn dual_norm(&self, eta: &ActionCovector) -> f64 {
        let s = self.sharp(eta);
        (eta.dx.iter().zip(&s.dx).map(|(a, b)| a.dot(b)).sum::<f64>() + eta.dt * eta.dt).max(0.0).sqrt()
    }

    /// Norm of a tangent vector in the loop metric.
    pub fn norm(&self, v: &LoopTangent) -> f64 {
        let xs: Vec<f64> = v.dx.iter().map(|d| d.x).collect();
        let ys: Vec<f64> = v.dx.iter().map(|d| d.y).collect();
        let mx = self.metric.apply(&xs);
        let my = self.metric.apply(&ys);
        let vv: f64 =
            xs.iter().zip(&mx).map(|(a, b)| a * b).sum::<f64>() + ys.iter().zip(&my).map(|(a, b)| a * b).sum::<f64>();
        (vv + v.dt * v.dt).max(0.0).sqrt()
    }

    /// Inner product of two tangent vectors in the loop metric.
    pub fn inner(&self, u: &LoopTangent, v: &LoopTangent) -> f64 {
        let ux: Vec<f64> = u.dx.iter().map(|d| d.x).collect();
        let uy: Vec<f64> = u.dx.iter().map(|d| d.y).collect();
        let mx = self.metric.apply(&ux);
        let my = self.metric.apply(&uy);
        v.dx.iter().enumerate().map(|(i, d)| d.x * mx[i] + d.y * my[i]).sum::<f64>() + u.dt * v.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MagneticDensity, MetricField, TrigPolynomial};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn larmor_space() -> LoopSpace {
        LoopSpace::new(TorusSystem::flat(MagneticDensity::constant(4.0 * PI)), 16).unwrap()
    }

    /// Clockwise circle of the Larmor orbit.
    fn larmor_loop(n: usize) -> DiscreteLoop {
        let r = 1.0 / (4.0 * PI);
        DiscreteLoop::from_fn(n, (0, 0), 0.5, |s| Vec2::new(0.5 + r * (TAU * s).cos(), 0.5 - r * (TAU * s).sin()))
            .unwrap()
    }

    fn rich_space() -> LoopSpace {
        let metric = MetricField::conformal(TrigPolynomial::constant(0.0).with_cos(0.15, 1, 0).with_sin(0.1, 1, 1));
        let density = MagneticDensity::trig(TrigPolynomial::constant(0.6).with_cos(-2.0, 1, 0).with_sin(0.5, 0, 1));
        LoopSpace::new(TorusSystem::new(metric, density).unwrap(), 32).unwrap()
    }

    #[test]
    fn kinetic_energy_examples() {
        let space = larmor_space();
        let c = DiscreteLoop::new(vec![Vec2::new(0.2, 0.3); 8], (0, 0), 2.0).unwrap();
        assert_eq!(space.kinetic_energy(&c), 0.0);
        assert!((space.action(&c, 0.5) - 1.0).abs() < 1e-15);
        assert!((space.local_action(&c, 0.5) - 1.0).abs() < 1e-12);
        assert!((space.kinetic_energy(&larmor_loop(256)) - 0.125).abs() < 1e-4);
        for n in [3, 7, 64] {
            let line = DiscreteLoop::from_fn(n, (1, 0), 1.0, |s| Vec2::new(s, 0.4)).unwrap();
            assert!((space.kinetic_energy(&line) - 0.5).abs() < 1e-14);
        }
        assert!((space.action(&larmor_loop(256), 0.5) - 0.5).abs() < 1e-4);
        assert!((space.local_action(&larmor_loop(256), 0.5) - 0.25).abs() < 1e-3);
    }

    #[test]
    fn optimal_period_identity() {
        let space = rich_space();
        let l = larmor_loop(32);
        let e = space.kinetic_energy(&l);
        let k = 0.3;
        let t_star = (e / k).sqrt();
        let at = |t: f64| {
            let mut m = l.clone();
            m.set_period(t);
            space.action(&m, k)
        };
        assert!((at(t_star) - 2.0 * (e * k).sqrt()).abs() < 1e-14);
        assert!(at(t_star * 1.01) > at(t_star) && at(t_star * 0.99) > at(t_star));
    }

    #[test]
    fn constant_loop_is_never_a_zero() {
        let space = rich_space();
        let c = DiscreteLoop::new(vec![Vec2::new(0.2, 0.3); 8], (0, 0), 1.0).unwrap();
        let eta = space.eta(&c, 0.25);
        assert_eq!(eta.dt, 0.25);
        assert!(eta.h1_norm > 0.0);
    }

    #[test]
    fn larmor_circle_is_an_approximate_zero() {
        let eta = larmor_space().eta(&larmor_loop(256), 0.5);
        assert!(eta.h1_norm < 1e-3, "{}", eta.h1_norm);
    }

    #[test]
    fn eta_matches_finite_differences_of_local_action() {
        let space = rich_space();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for winding in [(0, 0), (1, 0), (1, -2)] {
            let base = DiscreteLoop::from_fn(48, winding, 0.9, |s| {
                Vec2::new(
                    0.3 + 0.1 * (TAU * s).cos() + winding.0 as f64 * s,
                    0.4 + 0.1 * (TAU * s).sin() + winding.1 as f64 * s,
                )
            })
            .unwrap();
            let k = 0.2;
            let eta = space.eta(&base, k);
            for _ in 0..20 {
                let dir = LoopTangent {
                    dx: (0..base.len())
                        .map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect(),
                    dt: rng.gen_range(-1.0..1.0),
                };
                let h = 1e-5;
                let fd = (space.local_action(&dir.apply(&base, h), k) - space.local_action(&dir.apply(&base, -h), k))
                    / (2.0 * h);
                let exact = eta.pair(&dir);
                assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
            }
        }
    }

    #[test]
    fn sharp_and_norm_are_consistent() {
        let space = rich_space();
        let l = larmor_loop(40);
        let eta = space.eta(&l, 0.3);
        let s = space.sharp(&eta);
        assert!((space.norm(&s) - eta.h1_norm).abs() < 1e-10 * eta.h1_norm);
        assert!((eta.pair(&s) - eta.h1_norm * eta.h1_norm).abs() < 1e-10 * eta.h1_norm.powi(2));
    }
}
