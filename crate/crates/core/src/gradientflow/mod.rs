//! Normalized descent field `X_k = -#eta_k / sqrt(1 + |eta_k|^2)` and its semi-flow.
//!
//! The flow is stepped explicitly. A step is accepted only when the
//! trapezoidal line integral of `eta` along it is non-positive; this certifies
//! descent without evaluating a global primitive.

mod newton;

use serde::{Deserialize, Serialize};

pub use newton::{refine_zero, NewtonOptions, NewtonOutcome};

use crate::loopspace::{ActionCovector, DiscreteLoop, LoopSpace, LoopTangent};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowParams {
    /// Initial step size.
    pub step: f64,
    pub max_step: f64,
    pub tol_eta: f64,
    pub max_iters: usize,
    #[serde(rename = "T_min")]
    pub t_min: f64,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    /// Arc-length redistribution period (0 disables it).
    pub redistribute_every: usize,
    /// Switch to Newton polishing once the residual drops below this value (0 disables it).
    pub polish_below: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            step: 0.1,
            max_step: 0.5,
            tol_eta: 1e-6,
            max_iters: 20_000,
            t_min: 1e-3,
            t_max: 50.0,
            redistribute_every: 50,
            polish_below: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    MaxIters,
    ShrankToPoint,
    PeriodExceeded,
    NumericFailure,
}

impl FlowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowStatus::Converged => "converged",
            FlowStatus::MaxIters => "max_iters",
            FlowStatus::ShrankToPoint => "shrank_to_point",
            FlowStatus::PeriodExceeded => "period_exceeded",
            FlowStatus::NumericFailure => "numeric_failure",
        }
    }
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub final_loop: DiscreteLoop,
    pub residual: f64,
    pub iterations: usize,
    pub status: FlowStatus,
    /// Cumulative line integral of `eta` after each accepted flow step.
    pub descent: Vec<f64>,
    /// Newton steps spent polishing.
    pub newton_steps: usize,
}

/// The normalized descent field at a loop, together with `eta` there.
pub fn xk(space: &LoopSpace, l: &DiscreteLoop, k: f64) -> (LoopTangent, ActionCovector) {
    let eta = space.eta(l, k);
    let field = space.sharp(&eta).scaled(-1.0 / (1.0 + eta.h1_norm * eta.h1_norm).sqrt());
    (field, eta)
}

fn finite(l: &DiscreteLoop) -> bool {
    l.period().is_finite() && l.vertices().iter().all(|v| v.x.is_finite() && v.y.is_finite())
}

/// Follows the semi-flow of `X_k` from `start` until a terminal status.
pub fn flow_to_zero(space: &LoopSpace, k: f64, start: &DiscreteLoop, params: &FlowParams) -> FlowResult {
    let mut current = start.clone();
    let (mut field, mut eta) = xk(space, &current, k);
    let mut step = params.step;
    let mut streak = 0usize;
    let mut descent = Vec::new();
    let mut total = 0.0;
    let mut newton_steps = 0usize;
    let mut polish_cooldown = 0usize;

    let finish = |l: DiscreteLoop, residual, iterations, status, descent, newton_steps| FlowResult {
        final_loop: l,
        residual,
        iterations,
        status,
        descent,
        newton_steps,
    };

    for iter in 0..=params.max_iters {
        if !eta.h1_norm.is_finite() || !finite(&current) {
            return finish(current, eta.h1_norm, iter, FlowStatus::NumericFailure, descent, newton_steps);
        }
        if eta.h1_norm < params.tol_eta {
            return finish(current, eta.h1_norm, iter, FlowStatus::Converged, descent, newton_steps);
        }
        if current.period() < params.t_min {
            return finish(current, eta.h1_norm, iter, FlowStatus::ShrankToPoint, descent, newton_steps);
        }
        if current.period() > params.t_max {
            return finish(current, eta.h1_norm, iter, FlowStatus::PeriodExceeded, descent, newton_steps);
        }
        if iter == params.max_iters {
            break;
        }

        if params.polish_below > 0.0 && eta.h1_norm < params.polish_below && polish_cooldown == 0 {
            let opts = NewtonOptions { tol: params.tol_eta, ..NewtonOptions::default() };
            let out = refine_zero(space, k, &current, &opts);
            newton_steps += out.steps;
            if out.residual < params.tol_eta && out.loop_.period() >= params.t_min {
                return finish(out.loop_, out.residual, iter, FlowStatus::Converged, descent, newton_steps);
            }
            polish_cooldown = 200;
        }
        polish_cooldown = polish_cooldown.saturating_sub(1);

        if params.redistribute_every > 0 && iter > 0 && iter % params.redistribute_every == 0 {
            if let Ok(r) = current.resampled(&space.system().metric, current.len()) {
                current = r;
                (field, eta) = xk(space, &current, k);
            }
        }

        loop {
            let trial = field.apply(&current, step);
            let (trial_field, trial_eta) = xk(space, &trial, k);
            let delta = field.scaled(step);
            let integral = 0.5 * (eta.pair(&delta) + trial_eta.pair(&delta));
            if integral <= 0.0 && trial.period() > 0.0 && trial_eta.h1_norm.is_finite() {
                total += integral;
                descent.push(total);
                current = trial;
                field = trial_field;
                eta = trial_eta;
                streak += 1;
                if streak >= 5 {
                    step = (step * 2.0).min(params.max_step);
                    streak = 0;
                }
                break;
            }
            step *= 0.5;
            streak = 0;
            if step < 1e-14 {
                return finish(current, eta.h1_norm, iter, FlowStatus::NumericFailure, descent, newton_steps);
            }
        }
    }
    finish(current, eta.h1_norm, params.max_iters, FlowStatus::MaxIters, descent, newton_steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MagneticDensity, TorusSystem, Vec2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn larmor_space() -> LoopSpace {
        LoopSpace::new(TorusSystem::flat(MagneticDensity::constant(4.0 * PI)), 16).unwrap()
    }

    fn circle(n: usize, r: f64, period: f64) -> DiscreteLoop {
        DiscreteLoop::from_fn(n, (0, 0), period, |s| Vec2::new(0.5 + r * (TAU * s).cos(), 0.5 - r * (TAU * s).sin()))
            .unwrap()
    }

    #[test]
    fn field_normalization() {
        let space = larmor_space();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let r = rng.gen_range(0.01..0.2);
            let l = circle(32, r, rng.gen_range(0.1..2.0)).translated(Vec2::new(rng.gen(), rng.gen()));
            let (x, eta) = xk(&space, &l, 0.5);
            let norm = space.norm(&x);
            assert!(norm <= 1.0);
            let expect = eta.h1_norm / (1.0 + eta.h1_norm.powi(2)).sqrt();
            assert!((norm - expect).abs() < 1e-9 * expect.max(1.0));
            assert!(eta.pair(&x) < 0.0);
        }
    }

    #[test]
    fn perturbed_larmor_circle_converges() {
        let space = larmor_space();
        let r = 1.0 / (4.0 * PI);
        let mut seed = crate::config::noisy_circle(256, Vec2::new(0.5, 0.5), r, 0.01, 5).unwrap();
        seed.set_period(0.5);
        let out = flow_to_zero(&space, 0.5, &seed, &FlowParams::default());
        assert_eq!(out.status, FlowStatus::Converged, "{:?} {}", out.status, out.residual);
        assert!(out.residual < 1e-6);
        let centre = out.final_loop.vertices().iter().sum::<Vec2>() / 256.0;
        for v in out.final_loop.vertices() {
            assert!(((v - centre).norm() - r).abs() < 1e-3);
        }
        assert!(out.descent.windows(2).all(|w| w[1] <= w[0]));
        let again = flow_to_zero(&space, 0.5, &out.final_loop, &FlowParams::default());
        assert_eq!(again.status, FlowStatus::Converged);
        assert!(again.iterations <= 2);
    }

    #[test]
    fn small_contractible_seed_shrinks() {
        let space = larmor_space();
        let seed = circle(64, 0.005, 0.01);
        let params = FlowParams { polish_below: 0.0, ..FlowParams::default() };
        let out = flow_to_zero(&space, 0.5, &seed, &params);
        assert_eq!(out.status, FlowStatus::ShrankToPoint, "{:?}", out.status);
        assert!(space.kinetic_energy(&out.final_loop) < 1e-4);
        assert_eq!(out.final_loop.winding(), (0, 0));
    }

    #[test]
    fn wavy_loop_straightens_in_its_class() {
        let space = LoopSpace::new(TorusSystem::flat(MagneticDensity::constant(0.0)), 16).unwrap();
        let seed = DiscreteLoop::from_fn(128, (1, 2), 8.0, |s| {
            Vec2::new(s + 0.04 * (3.0 * TAU * s).sin(), 2.0 * s + 0.03 * (5.0 * TAU * s).cos())
        })
        .unwrap();
        let k = 0.02;
        let out = flow_to_zero(&space, k, &seed, &FlowParams::default());
        assert_eq!(out.status, FlowStatus::Converged);
        assert_eq!(out.final_loop.winding(), (1, 2));
        assert!((out.final_loop.length(&space.system().metric) - 5f64.sqrt()).abs() < 1e-6);
        assert!(out.descent.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn strip_field_line_keeps_winding() {
        let space = LoopSpace::new(TorusSystem::flat(MagneticDensity::strip_field()), 32).unwrap();
        let seed = DiscreteLoop::from_fn(128, (0, 1), 20.0, |s| Vec2::new(0.1 + 0.02 * (TAU * s).sin(), s)).unwrap();
        let out = flow_to_zero(&space, 0.005, &seed, &FlowParams::default());
        assert_eq!(out.status, FlowStatus::Converged, "{}", out.residual);
        assert_eq!(out.final_loop.winding(), (0, 1));
        let defect = crate::geometry::curvature_law_defect(
            space.system(),
            out.final_loop.vertices(),
            out.final_loop.closing(),
            0.005,
        )
        .unwrap();
        assert!(defect < 5e-3, "{defect}");
    }
}
