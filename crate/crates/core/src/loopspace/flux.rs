use std::f64::consts::TAU;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geometry::{Mat2, TorusSystem, Vec2, VALIDATION_GRID};

/// One retained Fourier mode of the stream function, `a cos(phi) + b sin(phi)`
/// with `phi = 2 pi (k1 q1 + k2 q2)`.
#[derive(Clone, Copy, Debug)]
struct Mode {
    k1: f64,
    k2: f64,
    a: f64,
    b: f64,
}

/// Splitting `sigma = c dq1 ^ dq2 + d theta0` with `c` the total flux.
///
/// `theta0 = (-d2 psi, d1 psi)` where `Laplace psi = f sqrt(det G) - c` is
/// solved spectrally on a `grid_n x grid_n` grid. `theta0` and its Jacobian are
/// evaluated off-grid from the trigonometric interpolant, so they are smooth
/// everywhere.
#[derive(Clone, Debug)]
pub struct FluxDecomposition {
    flux: f64,
    modes: Vec<Mode>,
    grid_n: usize,
}

impl FluxDecomposition {
    pub fn new(system: &TorusSystem, grid_n: usize) -> Result<Self> {
        if !grid_n.is_power_of_two() || grid_n < 4 {
            return Err(Error::InvalidInput(format!("grid_n must be a power of two >= 4, got {grid_n}")));
        }
        let n = grid_n;
        let flux = system.flux();
        let mut data: Vec<Complex<f64>> = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                let q = Vec2::new(i as f64 / n as f64, j as f64 / n as f64);
                Complex::new(system.sigma_density(q) - flux, 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(n);
        // rows (along q2), then columns (along q1)
        for row in data.chunks_mut(n) {
            fft.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            fft.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
        let scale = 1.0 / (n * n) as f64;
        let threshold = 1e-14 * (1.0 + system.sup_density());
        let signed = |i: usize| if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
        let mut modes = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (k1, k2) = (signed(i), signed(j));
                // one representative per conjugate pair; Nyquist modes dropped
                let keep = (k1 > 0 || (k1 == 0 && k2 > 0)) && k1 != -(n as i64) / 2 && k2 != -(n as i64) / 2;
                if !keep {
                    continue;
                }
                let c = data[i * n + j] * scale;
                if c.norm() <= threshold {
                    continue;
                }
                let lap = -(TAU * TAU) * (k1 * k1 + k2 * k2) as f64;
                let psi = c / lap;
                modes.push(Mode { k1: k1 as f64, k2: k2 as f64, a: 2.0 * psi.re, b: -2.0 * psi.im });
            }
        }
        Ok(Self { flux, modes, grid_n })
    }

    pub fn flux(&self) -> f64 {
        self.flux
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn psi(&self, q: Vec2) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let (s, c) = (TAU * (m.k1 * q.x + m.k2 * q.y)).sin_cos();
                m.a * c + m.b * s
            })
            .sum()
    }

    /// `theta0(q)` and its Jacobian `D[(a, b)] = d theta0_a / d q_b`.
    pub fn theta_with_jacobian(&self, q: Vec2) -> (Vec2, Mat2) {
        if self.modes.is_empty() {
            return (Vec2::zeros(), Mat2::zeros());
        }
        let (mut d1, mut d2) = (0.0, 0.0);
        let (mut d11, mut d12, mut d22) = (0.0, 0.0, 0.0);
        for m in &self.modes {
            let (s, c) = (TAU * (m.k1 * q.x + m.k2 * q.y)).sin_cos();
            let first = TAU * (m.b * c - m.a * s);
            let second = -(TAU * TAU) * (m.a * c + m.b * s);
            d1 += m.k1 * first;
            d2 += m.k2 * first;
            d11 += m.k1 * m.k1 * second;
            d12 += m.k1 * m.k2 * second;
            d22 += m.k2 * m.k2 * second;
        }
        let theta = Vec2::new(-d2, d1);
        let jac = Mat2::new(-d12, -d22, d11, d12);
        (theta, jac)
    }

    pub fn theta(&self, q: Vec2) -> Vec2 {
        self.theta_with_jacobian(q).0
    }

    /// `max |d1 theta0_2 - d2 theta0_1 - (f sqrt(det G) - c)|` on the validation grid.
    pub fn curl_residual(&self, system: &TorusSystem) -> f64 {
        let n = VALIDATION_GRID;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let q = Vec2::new((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                let (_, d) = self.theta_with_jacobian(q);
                let curl = d[(1, 0)] - d[(0, 1)];
                worst = worst.max((curl - (system.sigma_density(q) - self.flux)).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MagneticDensity, MetricField, TrigPolynomial};
    use std::f64::consts::PI;

    #[test]
    fn constant_field_has_no_primitive() {
        let sys = TorusSystem::flat(MagneticDensity::constant(3.0));
        let d = FluxDecomposition::new(&sys, 32).unwrap();
        assert!((d.flux() - 3.0).abs() < 1e-12);
        assert_eq!(d.mode_count(), 0);
        assert_eq!(d.theta(Vec2::new(0.3, 0.4)), Vec2::zeros());
    }

    #[test]
    fn single_mode_poisson_solution() {
        let sys = TorusSystem::flat(MagneticDensity::strip_field());
        let d = FluxDecomposition::new(&sys, 64).unwrap();
        assert!((d.flux() - 1.0).abs() < 1e-10);
        for &(a, b) in &[(0.1, 0.2), (0.77, 0.31), (0.5, 0.9)] {
            let q = Vec2::new(a, b);
            let expect_psi = 2.0 * (TAU * a).cos() / (TAU * TAU);
            assert!((d.psi(q) - expect_psi).abs() < 1e-10);
            let th = d.theta(q);
            assert!(th.x.abs() < 1e-10);
            assert!((th.y + (TAU * a).sin() / PI).abs() < 1e-10);
        }
    }

    #[test]
    fn curl_residual_is_spectrally_small() {
        let metric = MetricField::conformal(TrigPolynomial::constant(0.0).with_cos(0.2, 1, 0).with_sin(0.1, 1, 1));
        let density = MagneticDensity::trig(TrigPolynomial::constant(0.4).with_cos(-1.5, 1, 0).with_sin(0.7, 0, 2));
        let sys = TorusSystem::new(metric, density).unwrap();
        let d = FluxDecomposition::new(&sys, 64).unwrap();
        assert!(d.curl_residual(&sys) < 1e-6, "{}", d.curl_residual(&sys));
        let flat = TorusSystem::flat(MagneticDensity::trig(TrigPolynomial::constant(1.0).with_cos(0.5, 2, 3)));
        assert!(FluxDecomposition::new(&flat, 16).unwrap().curl_residual(&flat) < 1e-10);
    }

    #[test]
    fn rejects_bad_grid() {
        let sys = TorusSystem::flat(MagneticDensity::constant(1.0));
        assert!(FluxDecomposition::new(&sys, 48).is_err());
    }
}
