//! Riemannian metric, magnetic density and Lorentz force on the flat two-torus `R^2 / Z^2`.
//!
//! Every evaluator is a pure function of the (lifted) point and is 1-periodic in
//! both coordinates. The magnetic form is `sigma = f mu_g`, so its coordinate
//! density is `f sqrt(det G)`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Central finite-difference step used when a metric has no analytic derivative.
pub const FD_STEP: f64 = 1e-5;
/// Side of the grid used to validate positivity and sign changes.
pub const VALIDATION_GRID: usize = 64;
/// Side of the midpoint panel rule used for the total flux.
pub const FLUX_QUADRATURE: usize = 256;

/// Rotation by -90 degrees, `J v = (v2, -v1)`.
#[inline]
pub fn rot(v: Vec2) -> Vec2 {
    Vec2::new(v.y, -v.x)
}

/// `u1 v2 - u2 v1`.
#[inline]
pub fn cross(u: Vec2, v: Vec2) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Reduce each coordinate to `[-1/2, 1/2)`.
pub fn minimal_difference(d: Vec2) -> Vec2 {
    d.map(|c| c - (c + 0.5).floor())
}

/// A point of the torus.
///
/// The stored coordinates are unreduced (a lift); [`TorusPoint::reduce`] gives
/// the canonical representative in `[0,1)^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub q1: f64,
    pub q2: f64,
}

impl TorusPoint {
    pub fn new(q1: f64, q2: f64) -> Self {
        Self { q1, q2 }
    }

    pub fn from_vec(v: Vec2) -> Self {
        Self { q1: v.x, q2: v.y }
    }

    pub fn to_vec(self) -> Vec2 {
        Vec2::new(self.q1, self.q2)
    }

    pub fn reduce(self) -> Self {
        let r = |c: f64| {
            let x = c - c.floor();
            // c slightly below an integer can round up to exactly 1.0
            if x >= 1.0 {
                0.0
            } else {
                x
            }
        };
        Self { q1: r(self.q1), q2: r(self.q2) }
    }

    /// Lift of the canonical representative into the fundamental domain shifted by `cell`.
    pub fn lift(self, cell: (i64, i64)) -> Self {
        let p = self.reduce();
        Self { q1: p.q1 + cell.0 as f64, q2: p.q2 + cell.1 as f64 }
    }

    /// Flat distance through the minimal representative.
    pub fn distance(self, other: Self) -> f64 {
        minimal_difference(self.to_vec() - other.to_vec()).norm()
    }
}

/// One term `amp * cos(2 pi (m1 q1 + m2 q2) + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amp: f64,
    pub m1: i32,
    pub m2: i32,
    pub phase: f64,
}

/// Real trigonometric polynomial on the torus.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub constant: f64,
    pub terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, terms: Vec::new() }
    }

    pub fn with_cos(mut self, amp: f64, m1: i32, m2: i32) -> Self {
        self.terms.push(TrigTerm { amp, m1, m2, phase: 0.0 });
        self
    }

    pub fn with_sin(mut self, amp: f64, m1: i32, m2: i32) -> Self {
        self.terms.push(TrigTerm { amp, m1, m2, phase: -std::f64::consts::FRAC_PI_2 });
        self
    }

    /// Parse `[c0, amp, m1, m2, phase, amp, m1, m2, phase, ...]`.
    pub fn from_params(params: &[f64]) -> Result<Self> {
        if params.is_empty() || !(params.len() - 1).is_multiple_of(4) {
            return Err(Error::Config(format!(
                "trigonometric params must be [c0, (amp, m1, m2, phase)*], got {} values",
                params.len()
            )));
        }
        let mut terms = Vec::new();
        for chunk in params[1..].chunks(4) {
            let as_int = |x: f64| -> Result<i32> {
                if x.fract() != 0.0 || x.abs() > 64.0 {
                    return Err(Error::Config(format!("mode number {x} is not a small integer")));
                }
                Ok(x as i32)
            };
            terms.push(TrigTerm { amp: chunk[0], m1: as_int(chunk[1])?, m2: as_int(chunk[2])?, phase: chunk[3] });
        }
        Ok(Self { constant: params[0], terms })
    }

    pub fn to_params(&self) -> Vec<f64> {
        let mut p = vec![self.constant];
        for t in &self.terms {
            p.extend([t.amp, t.m1 as f64, t.m2 as f64, t.phase]);
        }
        p
    }

    pub fn value(&self, q: Vec2) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, t| acc + t.amp * (TAU * (t.m1 as f64 * q.x + t.m2 as f64 * q.y) + t.phase).cos())
    }

    pub fn gradient(&self, q: Vec2) -> Vec2 {
        self.terms.iter().fold(Vec2::zeros(), |acc, t| {
            let s = -t.amp * TAU * (TAU * (t.m1 as f64 * q.x + t.m2 as f64 * q.y) + t.phase).sin();
            acc + Vec2::new(s * t.m1 as f64, s * t.m2 as f64)
        })
    }

    pub fn max_abs_bound(&self) -> f64 {
        self.constant.abs() + self.terms.iter().map(|t| t.amp.abs()).sum::<f64>()
    }
}

type MetricFn = Arc<dyn Fn(Vec2) -> Mat2 + Send + Sync>;
type ScalarFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;

#[derive(Clone)]
enum MetricKind {
    Flat,
    /// `G = exp(2u) I`.
    Conformal(TrigPolynomial),
    Custom(MetricFn),
}

/// Doubly periodic Riemannian metric `G(q)`.
#[derive(Clone)]
pub struct MetricField {
    kind: MetricKind,
    name: String,
    analytic: bool,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField").field("name", &self.name).field("analytic", &self.analytic).finish()
    }
}

impl MetricField {
    pub fn flat() -> Self {
        Self { kind: MetricKind::Flat, name: "flat".into(), analytic: true }
    }

    /// Conformal metric `exp(2u) delta`.
    pub fn conformal(u: TrigPolynomial) -> Self {
        Self { kind: MetricKind::Conformal(u), name: "conformal".into(), analytic: true }
    }

    /// Metric from an arbitrary evaluator; derivatives use finite differences.
    pub fn custom(name: &str, g: impl Fn(Vec2) -> Mat2 + Send + Sync + 'static) -> Self {
        Self { kind: MetricKind::Custom(Arc::new(g)), name: name.into(), analytic: false }
    }

    /// Same metric, but derivatives are always taken by central differences.
    pub fn with_finite_differences(mut self) -> Self {
        self.analytic = false;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.kind, MetricKind::Flat)
    }

    pub fn tensor(&self, q: Vec2) -> Mat2 {
        match &self.kind {
            MetricKind::Flat => Mat2::identity(),
            MetricKind::Conformal(u) => Mat2::identity() * (2.0 * u.value(q)).exp(),
            MetricKind::Custom(g) => g(q),
        }
    }

    /// `sqrt(det G)`, the coordinate density of the Riemannian area form.
    pub fn sqrt_det(&self, q: Vec2) -> f64 {
        match &self.kind {
            MetricKind::Flat => 1.0,
            MetricKind::Conformal(u) => (2.0 * u.value(q)).exp(),
            MetricKind::Custom(_) => self.tensor(q).determinant().max(0.0).sqrt(),
        }
    }

    /// Positive definite tensor at `q`, or a degenerate-metric error.
    pub fn checked_tensor(&self, q: Vec2) -> Result<Mat2> {
        let g = self.tensor(q);
        let sym = (g[(0, 1)] - g[(1, 0)]).abs() <= 1e-12 * (g[(0, 0)].abs() + g[(1, 1)].abs());
        if !(g.determinant() > 0.0 && g.trace() > 0.0 && sym) || !g.iter().all(|x| x.is_finite()) {
            return Err(Error::DegenerateMetric { q1: q.x, q2: q.y });
        }
        Ok(g)
    }

    /// `[d G / d q1, d G / d q2]`.
    pub fn derivatives(&self, q: Vec2) -> [Mat2; 2] {
        if self.analytic {
            match &self.kind {
                MetricKind::Flat => return [Mat2::zeros(); 2],
                MetricKind::Conformal(u) => {
                    let w = (2.0 * u.value(q)).exp();
                    let du = u.gradient(q);
                    return [Mat2::identity() * (2.0 * w * du.x), Mat2::identity() * (2.0 * w * du.y)];
                }
                MetricKind::Custom(_) => {}
            }
        }
        let h = FD_STEP;
        let dx = Vec2::new(h, 0.0);
        let dy = Vec2::new(0.0, h);
        [
            (self.tensor(q + dx) - self.tensor(q - dx)) / (2.0 * h),
            (self.tensor(q + dy) - self.tensor(q - dy)) / (2.0 * h),
        ]
    }

    /// Checks positive definiteness on the validation grid.
    pub fn validate(&self) -> Result<()> {
        let n = VALIDATION_GRID;
        for i in 0..n {
            for j in 0..n {
                let q = Vec2::new(i as f64 / n as f64, j as f64 / n as f64);
                self.checked_tensor(q)?;
            }
        }
        Ok(())
    }
}

/// Christoffel symbols `gamma[i][j][k] = Gamma^i_{jk}` of the Levi-Civita connection.
pub type Christoffel = [[[f64; 2]; 2]; 2];

pub fn christoffel(metric: &MetricField, q: Vec2) -> Result<Christoffel> {
    let g = metric.checked_tensor(q)?;
    let inv = g.try_inverse().ok_or(Error::DegenerateMetric { q1: q.x, q2: q.y })?;
    let dg = metric.derivatives(q);
    // lowered[l][j][k] = 1/2 (d_j g_lk + d_k g_lj - d_l g_jk)
    let mut lowered = [[[0.0; 2]; 2]; 2];
    for (l, low) in lowered.iter_mut().enumerate() {
        for j in 0..2 {
            for k in j..2 {
                let v = 0.5 * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]);
                low[j][k] = v;
                low[k][j] = v;
            }
        }
    }
    let mut gamma = [[[0.0; 2]; 2]; 2];
    for (i, gi) in gamma.iter_mut().enumerate() {
        for j in 0..2 {
            for k in j..2 {
                let v = inv[(i, 0)] * lowered[0][j][k] + inv[(i, 1)] * lowered[1][j][k];
                gi[j][k] = v;
                gi[k][j] = v;
            }
        }
    }
    Ok(gamma)
}

/// `Gamma^i_{jk} u^j w^k`.
pub fn contract(gamma: &Christoffel, u: Vec2, w: Vec2) -> Vec2 {
    let c = |i: usize| {
        gamma[i][0][0] * u.x * w.x
            + gamma[i][0][1] * u.x * w.y
            + gamma[i][1][0] * u.y * w.x
            + gamma[i][1][1] * u.y * w.y
    };
    Vec2::new(c(0), c(1))
}

#[derive(Clone)]
enum DensityKind {
    Constant(f64),
    Trig(TrigPolynomial),
    Custom(ScalarFn),
}

/// Density `f` of the magnetic form with respect to the Riemannian area form.
#[derive(Clone)]
pub struct MagneticDensity {
    kind: DensityKind,
    name: String,
}

impl fmt::Debug for MagneticDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MagneticDensity").field("name", &self.name).finish()
    }
}

impl MagneticDensity {
    pub fn constant(b: f64) -> Self {
        Self { kind: DensityKind::Constant(b), name: "constant".into() }
    }

    pub fn trig(p: TrigPolynomial) -> Self {
        Self { kind: DensityKind::Trig(p), name: "trig".into() }
    }

    pub fn custom(name: &str, f: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        Self { kind: DensityKind::Custom(Arc::new(f)), name: name.into() }
    }

    /// The reference oscillating field `1 - 2 cos(2 pi q1)`.
    pub fn strip_field() -> Self {
        Self::trig(TrigPolynomial::constant(1.0).with_cos(-2.0, 1, 0))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, q: Vec2) -> f64 {
        match &self.kind {
            DensityKind::Constant(b) => *b,
            DensityKind::Trig(p) => p.value(q),
            DensityKind::Custom(f) => f(q),
        }
    }

    pub fn negated(&self) -> Self {
        let kind = match &self.kind {
            DensityKind::Constant(b) => DensityKind::Constant(-b),
            DensityKind::Trig(p) => DensityKind::Trig(TrigPolynomial {
                constant: -p.constant,
                terms: p.terms.iter().map(|t| TrigTerm { amp: -t.amp, ..*t }).collect(),
            }),
            DensityKind::Custom(f) => {
                let f = f.clone();
                DensityKind::Custom(Arc::new(move |q| -f(q)))
            }
        };
        Self { kind, name: format!("-{}", self.name) }
    }

    /// Sign change on the validation grid.
    pub fn is_oscillating(&self) -> bool {
        let n = VALIDATION_GRID;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            for j in 0..n {
                let v = self.value(Vec2::new((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64));
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        lo < 0.0 && hi > 0.0
    }
}

/// Metric and magnetic density on the torus together with the cached total flux.
#[derive(Clone, Debug)]
pub struct TorusSystem {
    pub metric: MetricField,
    pub density: MagneticDensity,
    flux: f64,
    sup_density: f64,
    area: f64,
}

impl TorusSystem {
    pub fn new(metric: MetricField, density: MagneticDensity) -> Result<Self> {
        metric.validate()?;
        let n = FLUX_QUADRATURE;
        let (mut flux, mut area, mut sup) = (0.0, 0.0, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                let q = Vec2::new((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                let w = metric.sqrt_det(q);
                let f = density.value(q);
                flux += f * w;
                area += w;
                sup = sup.max(f.abs());
            }
        }
        let cell = 1.0 / (n * n) as f64;
        Ok(Self { metric, density, flux: flux * cell, sup_density: sup, area: area * cell })
    }

    pub fn flat(density: MagneticDensity) -> Self {
        Self::new(MetricField::flat(), density).expect("flat metric is valid")
    }

    /// `int_{T^2} sigma`.
    pub fn flux(&self) -> f64 {
        self.flux
    }

    /// Riemannian area of the torus.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// `max |f|` sampled on the quadrature grid.
    pub fn sup_density(&self) -> f64 {
        self.sup_density
    }

    pub fn is_oscillating(&self) -> bool {
        self.density.is_oscillating()
    }

    /// Coordinate density of `sigma`: `f sqrt(det G)`.
    pub fn sigma_density(&self, q: Vec2) -> f64 {
        self.density.value(q) * self.metric.sqrt_det(q)
    }

    pub fn with_density(&self, density: MagneticDensity) -> Self {
        Self::new(self.metric.clone(), density).expect("metric already validated")
    }

    /// Lorentz force `Y(q, v) = f sqrt(det G) G^{-1} J v`.
    pub fn lorentz(&self, q: Vec2, v: Vec2) -> Result<Vec2> {
        let g = self.metric.checked_tensor(q)?;
        let inv = g.try_inverse().ok_or(Error::DegenerateMetric { q1: q.x, q2: q.y })?;
        Ok(inv * rot(v) * self.sigma_density(q))
    }

    /// `E = 1/2 v^T G(q) v`.
    pub fn energy(&self, q: Vec2, v: Vec2) -> f64 {
        0.5 * v.dot(&(self.metric.tensor(q) * v))
    }
}

/// Signed geodesic curvature of a closed sampled curve.
///
/// `points` are lifted positions at uniformly spaced parameter values and
/// `closing` is the lift displacement after one period, so that the periodic
/// extension is `points[i + n] = points[i] + closing`. Derivatives use the
/// five-point periodic stencil; the result is reparametrization invariant.
pub fn geodesic_curvature(metric: &MetricField, points: &[Vec2], closing: Vec2) -> Result<Vec<f64>> {
    let n = points.len();
    if n < 5 {
        return Err(Error::InvalidInput(format!("curvature needs at least 5 samples, got {n}")));
    }
    let at = |i: isize| -> Vec2 {
        let wraps = i.div_euclid(n as isize);
        points[i.rem_euclid(n as isize) as usize] + closing * wraps as f64
    };
    let mut speeds = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    for i in 0..n as isize {
        let (m2, m1, p0, p1, p2) = (at(i - 2), at(i - 1), at(i), at(i + 1), at(i + 2));
        let d1 = (m2 - p2 + (p1 - m1) * 8.0) / 12.0;
        let d2 = (-m2 - p2 + (p1 + m1) * 16.0 - p0 * 30.0) / 12.0;
        let gamma = christoffel(metric, p0)?;
        let acc = d2 + contract(&gamma, d1, d1);
        let g = metric.tensor(p0);
        let speed = d1.dot(&(g * d1)).sqrt();
        speeds.push(speed);
        out.push((metric.sqrt_det(p0) * cross(d1, acc), speed));
    }
    let mean = speeds.iter().sum::<f64>() / n as f64;
    out.into_iter()
        .enumerate()
        .map(|(i, (num, s))| {
            if !(s > 1e-9 * mean.max(f64::MIN_POSITIVE)) {
                Err(Error::UndefinedCurvature { index: i })
            } else {
                Ok(num / (s * s * s))
            }
        })
        .collect()
}

/// `max_i |kappa_g + f / sqrt(2k)|` along a closed sampled curve.
pub fn curvature_law_defect(system: &TorusSystem, points: &[Vec2], closing: Vec2, k: f64) -> Result<f64> {
    let kappa = geodesic_curvature(&system.metric, points, closing)?;
    let s = (2.0 * k).sqrt();
    Ok(kappa.iter().zip(points).map(|(kap, p)| (kap + system.density.value(*p) / s).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn conformal(eps: f64) -> MetricField {
        MetricField::conformal(TrigPolynomial::constant(0.0).with_cos(eps, 1, 0))
    }

    #[test]
    fn flat_christoffel_vanishes() {
        let g = christoffel(&MetricField::flat(), Vec2::new(0.3, 0.7)).unwrap();
        assert!(g.iter().flatten().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn conformal_christoffel_matches_closed_form() {
        let eps = 0.2;
        let m = conformal(eps);
        for &(a, b) in &[(0.1, 0.2), (0.37, 0.9), (0.8, 0.55)] {
            let q = Vec2::new(a, b);
            let g = christoffel(&m, q).unwrap();
            let d1u = -eps * TAU * (TAU * a).sin();
            let d2u = 0.0;
            let expect = [[[d1u, d2u], [d2u, -d1u]], [[-d2u, d1u], [d1u, d2u]]];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        assert!((g[i][j][k] - expect[i][j][k]).abs() < 1e-8, "{i}{j}{k}");
                    }
                }
            }
            let fd = christoffel(&m.clone().with_finite_differences(), q).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        assert!((g[i][j][k] - fd[i][j][k]).abs() < 1e-6);
                        assert_eq!(fd[i][j][k], fd[i][k][j]);
                    }
                }
            }
        }
    }

    #[test]
    fn metric_compatibility_in_fd_mode() {
        // d_k g_ij = Gamma^l_{ki} g_lj + Gamma^l_{kj} g_il
        let p = TrigPolynomial::constant(0.0).with_cos(0.15, 1, 1).with_sin(0.1, 0, 2);
        let m = MetricField::conformal(p).with_finite_differences();
        let q = Vec2::new(0.21, 0.64);
        let gam = christoffel(&m, q).unwrap();
        let g = m.tensor(q);
        let dg = m.derivatives(q);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut rhs = 0.0;
                    for l in 0..2 {
                        rhs += gam[l][k][i] * g[(l, j)] + gam[l][k][j] * g[(i, l)];
                    }
                    assert!((dg[k][(i, j)] - rhs).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let m = MetricField::custom("bad", |q| Mat2::new(1.0, 0.0, 0.0, q.x - 0.5));
        assert!(matches!(christoffel(&m, Vec2::new(0.25, 0.0)), Err(Error::DegenerateMetric { .. })));
        assert!(m.validate().is_err());
        let sys = TorusSystem::new(MetricField::flat(), MagneticDensity::constant(1.0)).unwrap();
        let bad = TorusSystem { metric: m, ..sys };
        assert!(bad.lorentz(Vec2::new(0.1, 0.1), Vec2::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn flat_lorentz_rotates_velocity() {
        let b = 3.0;
        let sys = TorusSystem::flat(MagneticDensity::constant(b));
        let y = sys.lorentz(Vec2::new(0.4, 0.1), Vec2::new(0.3, -0.7)).unwrap();
        assert!((y - Vec2::new(b * -0.7, -b * 0.3)).norm() < 1e-15);
        assert_eq!(sys.lorentz(Vec2::new(0.4, 0.1), Vec2::zeros()).unwrap(), Vec2::zeros());
    }

    #[test]
    fn lorentz_defining_identity() {
        let metric = MetricField::conformal(TrigPolynomial::constant(0.1).with_cos(0.3, 1, 0).with_sin(0.2, 1, -1));
        let density = MagneticDensity::trig(TrigPolynomial::constant(0.5).with_cos(1.5, 0, 1));
        let sys = TorusSystem::new(metric, density).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let q = Vec2::new(rng.gen(), rng.gen());
            let u = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let v = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let y = sys.lorentz(q, v).unwrap();
            let lhs = u.dot(&(sys.metric.tensor(q) * y));
            let rhs = sys.sigma_density(q) * cross(u, v);
            assert!((lhs - rhs).abs() < 1e-10 * (1.0 + u.norm() * v.norm()));
        }
    }

    #[test]
    fn evaluators_are_periodic() {
        let p = TrigPolynomial::constant(0.2).with_cos(0.7, 2, -1).with_sin(0.4, 1, 3);
        let m = MetricField::conformal(p.clone());
        let f = MagneticDensity::trig(p);
        let q = Vec2::new(0.123, 0.456);
        for e in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)] {
            assert!((f.value(q + e) - f.value(q)).abs() < 1e-12);
            assert!((m.tensor(q + e) - m.tensor(q)).norm() < 1e-12);
        }
    }

    #[test]
    fn flux_matches_analytic_values() {
        let sys = TorusSystem::flat(MagneticDensity::strip_field());
        assert!((sys.flux() - 1.0).abs() < 1e-8);
        assert!(sys.is_oscillating());
        assert!(!TorusSystem::flat(MagneticDensity::constant(2.0)).is_oscillating());
        // int exp(2 eps cos(2 pi x)) dx = I0(2 eps)
        let eps = 0.3;
        let sys = TorusSystem::new(conformal(eps), MagneticDensity::constant(1.0)).unwrap();
        let z = 2.0 * eps;
        let mut term = 1.0;
        let mut i0 = 1.0;
        for j in 1..30 {
            term *= (z / 2.0) * (z / 2.0) / (j * j) as f64;
            i0 += term;
        }
        assert!((sys.flux() - i0).abs() < 1e-8 * i0);
    }

    #[test]
    fn torus_point_reduction() {
        let p = TorusPoint::new(-0.25, 3.5);
        let r = p.reduce();
        assert_eq!(r, TorusPoint::new(0.75, 0.5));
        assert_eq!(r.lift((2, -1)).reduce(), r);
        assert!((TorusPoint::new(0.95, 0.0).distance(TorusPoint::new(0.05, 0.0)) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn circle_and_line_curvature() {
        let n = 256;
        let r = 0.1;
        let pts: Vec<Vec2> = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                Vec2::new(0.5 + r * t.cos(), 0.5 + r * t.sin())
            })
            .collect();
        let kappa = geodesic_curvature(&MetricField::flat(), &pts, Vec2::zeros()).unwrap();
        assert!(kappa.iter().all(|k| ((k - 1.0 / r) * r).abs() < 1e-3));
        let rev: Vec<Vec2> = pts.iter().rev().copied().collect();
        let kappa = geodesic_curvature(&MetricField::flat(), &rev, Vec2::zeros()).unwrap();
        assert!(kappa.iter().all(|k| ((k + 1.0 / r) * r).abs() < 1e-3));

        let line: Vec<Vec2> = (0..64).map(|i| Vec2::new(i as f64 / 64.0, 0.3)).collect();
        let kappa = geodesic_curvature(&MetricField::flat(), &line, Vec2::new(1.0, 0.0)).unwrap();
        assert!(kappa.iter().all(|k| k.abs() < 1e-8));

        let constant = vec![Vec2::new(0.1, 0.1); 8];
        assert!(matches!(
            geodesic_curvature(&MetricField::flat(), &constant, Vec2::zeros()),
            Err(Error::UndefinedCurvature { .. })
        ));
        assert!(geodesic_curvature(&MetricField::flat(), &line[..4], Vec2::zeros()).is_err());
    }
}
