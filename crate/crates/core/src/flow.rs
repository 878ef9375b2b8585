//! Fixed-step integration of the magnetic geodesic equation
//! `q'' = -Gamma(q)(q', q') + Y(q, q')` and closed-orbit detection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{christoffel, contract, minimal_difference, TorusSystem, Vec2};

/// Position (lifted) and velocity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentState {
    pub q: Vec2,
    pub v: Vec2,
}

impl TangentState {
    pub fn new(q: Vec2, v: Vec2) -> Self {
        Self { q, v }
    }

    fn is_finite(&self) -> bool {
        self.q.iter().chain(self.v.iter()).all(|x| x.is_finite())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<TangentState>,
    /// `max |E(t) - E(0)| / E(0)`.
    pub energy_drift: f64,
    pub energies: Vec<f64>,
}

/// Right-hand side `(dq, dv)` of the first-order system.
pub fn ode_rhs(system: &TorusSystem, s: &TangentState) -> Result<(Vec2, Vec2)> {
    let gamma = christoffel(&system.metric, s.q)?;
    let dv = system.lorentz(s.q, s.v)? - contract(&gamma, s.v, s.v);
    Ok((s.v, dv))
}

/// One classical fourth-order Runge-Kutta step of size `h` (negative `h` integrates backwards).
pub fn rk4_step(system: &TorusSystem, s: &TangentState, h: f64) -> Result<TangentState> {
    let shift =
        |base: &TangentState, d: &(Vec2, Vec2), c: f64| TangentState { q: base.q + d.0 * c, v: base.v + d.1 * c };
    let k1 = ode_rhs(system, s)?;
    let k2 = ode_rhs(system, &shift(s, &k1, 0.5 * h))?;
    let k3 = ode_rhs(system, &shift(s, &k2, 0.5 * h))?;
    let k4 = ode_rhs(system, &shift(s, &k3, h))?;
    Ok(TangentState {
        q: s.q + (k1.0 + (k2.0 + k3.0) * 2.0 + k4.0) * (h / 6.0),
        v: s.v + (k1.1 + (k2.1 + k3.1) * 2.0 + k4.1) * (h / 6.0),
    })
}

fn rescale_to_energy(system: &TorusSystem, s: &mut TangentState, energy: f64) {
    let e = system.energy(s.q, s.v);
    if e > 0.0 && energy > 0.0 {
        s.v *= (energy / e).sqrt();
    }
}

/// Integrate on `[0, t_end]` with `round(t_end / dt)` equal steps.
///
/// With `project_energy` the velocity is rescaled after every step to the
/// initial energy shell.
pub fn integrate(
    system: &TorusSystem,
    s0: TangentState,
    t_end: f64,
    dt: f64,
    project_energy: bool,
) -> Result<Trajectory> {
    if !(t_end > 0.0 && dt > 0.0) {
        return Err(Error::InvalidInput(format!("need t_end > 0 and dt > 0, got {t_end}, {dt}")));
    }
    let steps = ((t_end / dt).round() as usize).max(1);
    let h = t_end / steps as f64;
    let e0 = system.energy(s0.q, s0.v);
    let scale = if e0 > 0.0 { e0 } else { 1.0 };

    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut energies = Vec::with_capacity(steps + 1);
    let mut drift = 0.0f64;
    let mut s = s0;
    times.push(0.0);
    states.push(s);
    energies.push(e0);
    for i in 1..=steps {
        let mut next = rk4_step(system, &s, h)?;
        if project_energy {
            rescale_to_energy(system, &mut next, e0);
        }
        if !next.is_finite() {
            return Err(Error::BlowUp { last_time: (i - 1) as f64 * h });
        }
        s = next;
        let e = system.energy(s.q, s.v);
        drift = drift.max((e - e0).abs() / scale);
        times.push(i as f64 * h);
        states.push(s);
        energies.push(e);
    }
    Ok(Trajectory { times, states, energy_drift: drift, energies })
}

/// A detected closed orbit.
#[derive(Clone, Debug)]
pub struct ClosedOrbit {
    pub period: f64,
    /// `samples[j]` is the state at time `j * period / samples.len()`.
    pub samples: Vec<TangentState>,
    pub winding: (i64, i64),
    /// State mismatch at the refined period.
    pub mismatch: f64,
}

impl ClosedOrbit {
    pub fn positions(&self) -> Vec<Vec2> {
        self.samples.iter().map(|s| s.q).collect()
    }

    pub fn closing(&self) -> Vec2 {
        Vec2::new(self.winding.0 as f64, self.winding.1 as f64)
    }
}

fn mismatch(s0: &TangentState, s: &TangentState) -> (Vec2, Vec2) {
    (minimal_difference(s.q - s0.q), s.v - s0.v)
}

/// First return of the trajectory to its initial state within `tol`.
///
/// Position is compared in reduced coordinates and velocity in the tangent
/// space. Candidates are local minima of the sampled mismatch; the return
/// time is started at the quadratic-interpolation vertex and then refined by
/// Newton steps on `d/dt |mismatch|^2 / 2`, evaluating intermediate states with
/// a single fitted Runge-Kutta step from the nearest sample. The orbit is
/// re-integrated with `samples` equal steps over one period.
pub fn detect_closure(system: &TorusSystem, traj: &Trajectory, tol: f64, samples: usize) -> Option<ClosedOrbit> {
    let states = &traj.states;
    if states.len() < 3 {
        return None;
    }
    let s0 = states[0];
    let dist2 = |s: &TangentState| {
        let (dq, dv) = mismatch(&s0, s);
        dq.norm_squared() + dv.norm_squared()
    };
    let d: Vec<f64> = states.iter().map(dist2).collect();
    let h = traj.times[1] - traj.times[0];
    for j in 1..states.len() - 1 {
        if !(d[j] <= d[j - 1] && d[j] < d[j + 1]) {
            continue;
        }
        let denom = d[j - 1] - 2.0 * d[j] + d[j + 1];
        let mut offset = if denom > 0.0 { 0.5 * (d[j - 1] - d[j + 1]) / denom * h } else { 0.0 };
        let mut state = None;
        for _ in 0..12 {
            let Ok(s) = rk4_step(system, &states[j], offset) else { break };
            let Ok((dq, dv)) = ode_rhs(system, &s) else { break };
            let (mq, mv) = mismatch(&s0, &s);
            let g = mq.dot(&dq) + mv.dot(&dv);
            let gp = dq.norm_squared() + dv.norm_squared();
            state = Some(s);
            if gp <= 0.0 {
                break;
            }
            let step = g / gp;
            offset -= step;
            if step.abs() < 1e-15 * (traj.times[j] + 1.0) {
                break;
            }
        }
        let Some(_) = state else { continue };
        let Ok(end) = rk4_step(system, &states[j], offset) else { continue };
        let miss = dist2(&end).sqrt();
        if miss >= tol {
            continue;
        }
        let period = traj.times[j] + offset;
        if period <= 0.0 {
            continue;
        }
        let disp = end.q - s0.q;
        let winding = (disp.x.round() as i64, disp.y.round() as i64);
        let n = samples.max(5);
        let dt = period / n as f64;
        let mut out = Vec::with_capacity(n);
        let mut s = s0;
        for _ in 0..n {
            out.push(s);
            s = rk4_step(system, &s, dt).ok()?;
        }
        return Some(ClosedOrbit { period, samples: out, winding, mismatch: miss });
    }
    None
}
