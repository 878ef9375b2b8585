//! Newton polishing of approximate zeros of the action form.
//!
//! The Jacobian of the discrete action form is the (symmetric) Hessian of the
//! discrete local action, indefinite at saddles and nearly singular along the
//! discrete circle action. Each Newton system is solved by preconditioned
//! MINRES with the loop metric as preconditioner and Jacobian-vector products
//! from central differences of `eta`.

use crate::geometry::Vec2;
use crate::loopspace::{ActionCovector, DiscreteLoop, LoopSpace, LoopTangent};

#[derive(Clone, Copy, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_newton: usize,
    pub max_krylov: usize,
    pub krylov_rtol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_newton: 25, max_krylov: 400, krylov_rtol: 1e-9 }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub loop_: DiscreteLoop,
    pub residual: f64,
    pub steps: usize,
}

fn flatten_co(eta: &ActionCovector) -> Vec<f64> {
    let mut v: Vec<f64> = eta.dx.iter().flat_map(|d| [d.x, d.y]).collect();
    v.push(eta.dt);
    v
}

fn tangent(v: &[f64]) -> LoopTangent {
    let n = (v.len() - 1) / 2;
    LoopTangent { dx: (0..n).map(|i| Vec2::new(v[2 * i], v[2 * i + 1])).collect(), dt: v[2 * n] }
}

fn precondition(space: &LoopSpace, r: &[f64]) -> Vec<f64> {
    let n = (r.len() - 1) / 2;
    let co =
        ActionCovector { dx: (0..n).map(|i| Vec2::new(r[2 * i], r[2 * i + 1])).collect(), dt: r[2 * n], h1_norm: 0.0 };
    let s = space.sharp(&co);
    let mut out: Vec<f64> = s.dx.iter().flat_map(|d| [d.x, d.y]).collect();
    out.push(s.dt);
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned MINRES for a symmetric operator (Paige-Saunders recurrences).
fn minres(
    op: impl Fn(&[f64]) -> Vec<f64>,
    psolve: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    max_iter: usize,
    rtol: f64,
) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut y = psolve(b);
    let beta1 = dot(b, &y).max(0.0).sqrt();
    if beta1 == 0.0 {
        return x;
    }
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|t| t * s).collect();
        y = op(&v);
        if itn >= 2 {
            let f = beta / oldb;
            y.iter_mut().zip(&r1).for_each(|(a, r)| *a -= f * r);
        }
        let alfa = dot(&v, &y);
        let f = alfa / beta;
        y.iter_mut().zip(&r2).for_each(|(a, r)| *a -= f * r);
        r1 = std::mem::replace(&mut r2, y.clone());
        y = psolve(&r2);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = std::mem::replace(&mut w2, w.clone());
        for i in 0..n {
            w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) / gamma;
            x[i] += phi * w[i];
        }
        if phibar < rtol * beta1 || beta == 0.0 {
            break;
        }
    }
    x
}

/// Damped Newton iteration towards a zero of `eta` near `start`.
pub fn refine_zero(space: &LoopSpace, k: f64, start: &DiscreteLoop, opts: &NewtonOptions) -> NewtonOutcome {
    let mut current = start.clone();
    let mut eta = space.eta(&current, k);
    let mut steps = 0;
    while eta.h1_norm >= opts.tol && steps < opts.max_newton {
        let scale = 1.0 + current.vertices().iter().map(|v| v.amax()).fold(0.0, f64::max).max(current.period());
        let base = current.clone();
        let jv = |v: &[f64]| -> Vec<f64> {
            let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if vmax == 0.0 {
                return vec![0.0; v.len()];
            }
            let eps = 1e-7 * scale / vmax;
            let t = tangent(v);
            let plus = flatten_co(&space.eta(&t.apply(&base, eps), k));
            let minus = flatten_co(&space.eta(&t.apply(&base, -eps), k));
            plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * eps)).collect()
        };
        let rhs: Vec<f64> = flatten_co(&eta).iter().map(|x| -x).collect();
        let delta = minres(jv, |r| precondition(space, r), &rhs, opts.max_krylov, opts.krylov_rtol);
        let step = tangent(&delta);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let trial = step.apply(&current, alpha);
            if trial.period() > 0.0 {
                let e = space.eta(&trial, k);
                if e.h1_norm.is_finite() && e.h1_norm < eta.h1_norm {
                    current = trial;
                    eta = e;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        steps += 1;
        log::debug!("newton step {steps}: residual {:.3e} damping {alpha:.3e} accepted {accepted}", eta.h1_norm);
        if !accepted {
            break;
        }
    }
    NewtonOutcome { residual: eta.h1_norm, loop_: current, steps }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minres_solves_indefinite_system() {
        // diag(3, -2, 0.5) coupled by a symmetric off-diagonal term
        let a = [[3.0, 0.4, 0.0], [0.4, -2.0, 0.1], [0.0, 0.1, 0.5]];
        let op = |v: &[f64]| (0..3).map(|i| (0..3).map(|j| a[i][j] * v[j]).sum()).collect::<Vec<f64>>();
        let b = [1.0, -1.0, 2.0];
        let x = minres(op, |r| r.to_vec(), &b, 50, 1e-14);
        let ax = op(&x);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-10);
        }
    }
}
