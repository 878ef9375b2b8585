//! String-method mountain pass with a Newton finish at the max node.

use serde::{Deserialize, Serialize};

use super::{eta_line_integral, hausdorff_on_torus, path_action, transgression, LoopPath};
use crate::error::{Error, Result};
use crate::gradientflow::{refine_zero, xk, NewtonOptions};
use crate::loopspace::{DiscreteLoop, LoopSpace, LoopTangent};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimaxParams {
    /// Path segments (the path has `nodes + 1` loops).
    pub nodes: usize,
    pub max_outer: usize,
    /// Flow step of a node at the top of the profile.
    pub step: f64,
    pub tol_eta: f64,
    /// Attempt Newton at the max node once its residual is below this value.
    pub polish_below: f64,
    #[serde(rename = "T_min")]
    pub t_min: f64,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    /// Critical loops closer than this (Hausdorff) to an endpoint are rejected.
    pub distinct_tol: f64,
}

impl Default for MinimaxParams {
    fn default() -> Self {
        Self {
            nodes: 32,
            max_outer: 400,
            step: 0.02,
            tol_eta: 1e-6,
            polish_below: 5e-2,
            t_min: 1e-3,
            t_max: 50.0,
            distinct_tol: 1e-2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimaxRecord {
    pub n: usize,
    pub k: f64,
    /// Path action at the final max node.
    pub c: f64,
    /// The same value from the midpoint-rule line integral of `eta` along the path.
    pub c_line_integral: f64,
    #[serde(skip)]
    pub critical_loop: DiscreteLoop,
    pub residual: f64,
    pub converged: bool,
    pub outer_iterations: usize,
    pub transgression: f64,
    /// Profile maximum after each accepted outer iteration.
    pub max_history: Vec<f64>,
    #[serde(skip)]
    pub path: LoopPath,
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// The same vertices with the period `sqrt(e / k)` minimizing `e / T + k T`.
///
/// The period direction is very soft near closed orbits, so it is solved
/// exactly instead of being left to the flow.
fn with_optimal_period(space: &LoopSpace, l: &DiscreteLoop, k: f64) -> DiscreteLoop {
    let e = space.kinetic_energy(l);
    let mut out = l.clone();
    if e > 0.0 {
        out.set_period((e / k).sqrt());
    }
    out
}

/// Loop at the vertex of the parabola through the profile around `top`,
/// with the local node spacing in the loop metric.
fn interpolated_top(space: &LoopSpace, path: &LoopPath, profile: &[f64], top: usize) -> (DiscreteLoop, f64) {
    let nodes = path.nodes();
    let curvature = profile[top + 1] - 2.0 * profile[top] + profile[top - 1];
    let slope = 0.5 * (profile[top + 1] - profile[top - 1]);
    let t = if curvature < 0.0 { (-slope / curvature).clamp(-0.5, 0.5) } else { 0.0 };
    let (towards, t) = if t >= 0.0 { (top + 1, t) } else { (top - 1, -t) };
    let d = LoopTangent::between(&nodes[top], &nodes[towards]);
    (d.apply(&nodes[top], t), space.norm(&d))
}

/// Redistributes interior nodes at equal loop-metric spacing.
fn respace(space: &LoopSpace, path: &LoopPath) -> LoopPath {
    let nodes = path.nodes();
    let mut cumulative = vec![0.0];
    for w in nodes.windows(2) {
        let d = space.norm(&LoopTangent::between(&w[0], &w[1]));
        cumulative.push(cumulative[cumulative.len() - 1] + d);
    }
    let total = cumulative[cumulative.len() - 1];
    if !(total > 0.0) {
        return path.clone();
    }
    let m = nodes.len() - 1;
    let mut out = Vec::with_capacity(nodes.len());
    out.push(nodes[0].clone());
    let mut seg = 0;
    for j in 1..m {
        let target = total * j as f64 / m as f64;
        while seg + 1 < m && cumulative[seg + 1] < target {
            seg += 1;
        }
        let len = cumulative[seg + 1] - cumulative[seg];
        let t = if len > 0.0 { (target - cumulative[seg]) / len } else { 0.0 };
        out.push(LoopTangent::between(&nodes[seg], &nodes[seg + 1]).apply(&nodes[seg], t));
    }
    out.push(nodes[m].clone());
    LoopPath { nodes: out }
}

/// Forced re-spacing threshold: longest segment over mean segment length.
/// A long segment can hide a barrier between its end nodes.
const MAX_SEGMENT_RATIO: f64 = 2.0;

fn max_segment_ratio(space: &LoopSpace, path: &LoopPath) -> f64 {
    let lengths: Vec<f64> = path.nodes().windows(2).map(|w| space.norm(&LoopTangent::between(&w[0], &w[1]))).collect();
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    if mean > 0.0 {
        lengths.iter().copied().fold(0.0, f64::max) / mean
    } else {
        1.0
    }
}

fn check_periods(path: &LoopPath, params: &MinimaxParams) -> Result<()> {
    for l in path.nodes() {
        if !(l.period() >= params.t_min && l.period() <= params.t_max) {
            return Err(Error::Numeric(format!(
                "period guard: T = {} outside [{}, {}]",
                l.period(),
                params.t_min,
                params.t_max
            )));
        }
    }
    Ok(())
}

/// Unit tangent of the path at interior node `j` (central chord).
fn path_tangent(space: &LoopSpace, path: &LoopPath, j: usize) -> LoopTangent {
    let nodes = path.nodes();
    let chord = LoopTangent::between(&nodes[j - 1], &nodes[j + 1]);
    let norm = space.norm(&chord);
    if norm > 0.0 {
        chord.scaled(1.0 / norm)
    } else {
        chord
    }
}

fn add_scaled(u: &LoopTangent, v: &LoopTangent, s: f64) -> LoopTangent {
    LoopTangent { dx: u.dx.iter().zip(&v.dx).map(|(a, b)| a + b * s).collect(), dt: u.dt + s * v.dt }
}

/// Climbing-image flow from `start`: descend along `X_k` except along the
/// unstable direction `v`, which is climbed. Stops below `target` residual.
fn climb(
    space: &LoopSpace,
    k: f64,
    start: &DiscreteLoop,
    v: &LoopTangent,
    target: f64,
    iterations: usize,
) -> DiscreteLoop {
    let mut x = start.clone();
    let mut v = v.clone();
    let mut h = 0.02;
    let mut residual = space.eta(&x, k).h1_norm;
    for _ in 0..iterations {
        if residual < target {
            break;
        }
        let (field, _) = xk(space, &x, k);
        let along = space.inner(&field, &v);
        let dir = add_scaled(&field, &v, -2.0 * along);
        let trial = with_optimal_period(space, &dir.apply(&x, h), k);
        let r = space.eta(&trial, k).h1_norm;
        if r.is_finite() && r < 1.5 * residual {
            // follow the drift of the unstable direction
            let moved = LoopTangent::between(&x, &trial);
            let sign = if space.inner(&moved, &v) >= 0.0 { 1.0 } else { -1.0 };
            let norm = space.norm(&moved);
            if norm > 0.0 && along.abs() > 0.5 * space.norm(&field) {
                v = add_scaled(&v, &moved, 0.1 * sign / norm);
                let nv = space.norm(&v);
                v = v.scaled(1.0 / nv);
            }
            x = trial;
            residual = r;
            h = (h * 1.1).min(0.1);
        } else {
            h *= 0.5;
            if h < 1e-6 {
                break;
            }
        }
    }
    x
}

/// Lowers the maximum of the path action along `path0` and returns the
/// critical loop found at the top. Endpoints stay fixed.
///
/// Interior nodes follow the component of `X_k` normal to the path with a
/// step proportional to their action excess. The path is re-spaced after a
/// step when that does not raise the profile maximum, and always once one
/// segment grows past [`MAX_SEGMENT_RATIO`] times the mean. Once the interpolated top of the
/// profile is nearly critical it is refined by climbing-image flow and Newton.
pub fn mountain_pass(
    space: &LoopSpace,
    path0: &LoopPath,
    k: f64,
    n: usize,
    params: &MinimaxParams,
) -> Result<MinimaxRecord> {
    let class = transgression(path0);
    let check_class = |p: &LoopPath| {
        let after = transgression(p);
        if (after - class).abs() > 1e-8 {
            Err(Error::ClassEscape { before: class, after })
        } else {
            Ok(())
        }
    };
    let mut path = path0.clone();
    let mut profile = path_action(space, &path, k);
    let mut max_history = vec![profile[argmax(&profile)]];
    let mut step = params.step;
    let newton = NewtonOptions { tol: params.tol_eta, ..NewtonOptions::default() };
    let mut outer = 0;
    let mut last_attempt = f64::INFINITY;
    let mut stalled = false;

    loop {
        check_periods(&path, params)?;
        let top = argmax(&profile);
        if top > 0 && top + 1 < path.len() {
            let (start, spacing) = interpolated_top(space, &path, &profile, top);
            let start = with_optimal_period(space, &start, k);
            let residual = space.eta(&start, k).h1_norm;
            log::debug!("outer {outer}: top {top} max {:.12} residual {residual:.3e} step {step:.2e}", profile[top]);
            if stalled || (residual < params.polish_below && residual < 0.5 * last_attempt) {
                last_attempt = residual;
                let tangent = path_tangent(space, &path, top);
                let climbed = climb(space, k, &start, &tangent, 1e-2 * params.polish_below, 2000);
                let polished = refine_zero(space, k, &climbed, &newton);
                let drift = hausdorff_on_torus(&start, &polished.loop_);
                log::debug!("refine: residual {:.3e} drift {drift:.3e} spacing {spacing:.3e}", polished.residual);
                let ends = [path.first(), path.last()];
                let is_endpoint = ends.iter().any(|e| hausdorff_on_torus(e, &polished.loop_) < params.distinct_tol);
                if polished.residual < params.tol_eta && !is_endpoint && drift < 0.1 {
                    let mut candidate = path.clone();
                    candidate.nodes_mut()[top] = polished.loop_.clone();
                    check_class(&candidate)?;
                    let final_profile = path_action(space, &candidate, k);
                    return Ok(MinimaxRecord {
                        n,
                        k,
                        c: final_profile[top],
                        c_line_integral: eta_line_integral(space, &candidate, k)[top],
                        critical_loop: polished.loop_,
                        residual: polished.residual,
                        converged: true,
                        outer_iterations: outer,
                        transgression: transgression(&candidate),
                        max_history,
                        path: candidate,
                    });
                }
            }
        }
        if stalled {
            break;
        }
        if outer >= params.max_outer {
            // one last refinement attempt before giving up
            stalled = true;
            continue;
        }
        outer += 1;

        let lo = profile.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = profile[top];
        let span = (hi - lo).max(f64::MIN_POSITIVE);
        let tolerance = 1e-13 * hi.abs().max(1.0);
        let mut accepted = false;
        while step > 1e-8 {
            let mut trial = path.clone();
            for j in 1..trial.len() - 1 {
                let excess = ((profile[j] - lo) / span).clamp(0.0, 1.0);
                let (x, _) = xk(space, &path.nodes()[j], k);
                let t = path_tangent(space, &path, j);
                let normal = add_scaled(&x, &t, -space.inner(&x, &t));
                trial.nodes_mut()[j] = with_optimal_period(space, &normal.apply(&path.nodes()[j], step * excess), k);
            }
            check_class(&trial)?;
            let trial_profile = path_action(space, &trial, k);
            let new_max = trial_profile[argmax(&trial_profile)];
            if new_max.is_finite() && trial_profile.iter().all(|v| v.is_finite()) && new_max <= hi + tolerance {
                path = trial;
                profile = trial_profile;
                let respaced = respace(space, &path);
                check_class(&respaced)?;
                let respaced_profile = path_action(space, &respaced, k);
                let respaced_max = respaced_profile[argmax(&respaced_profile)];
                if respaced_max <= new_max + tolerance || max_segment_ratio(space, &path) > MAX_SEGMENT_RATIO {
                    path = respaced;
                    profile = respaced_profile;
                }
                max_history.push(profile[argmax(&profile)]);
                step = (step * 1.5).min(params.step * 4.0);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        stalled = !accepted;
    }

    let top = argmax(&profile);
    let residual = space.eta(&path.nodes()[top], k).h1_norm;
    Ok(MinimaxRecord {
        n,
        k,
        c: profile[top],
        c_line_integral: eta_line_integral(space, &path, k)[top],
        critical_loop: path.nodes()[top].clone(),
        residual,
        converged: residual < params.tol_eta,
        outer_iterations: outer,
        transgression: transgression(&path),
        max_history,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MagneticDensity, TorusSystem, Vec2};
    use crate::minimax::build_class_representative;

    #[test]
    fn flat_geodesic_machinery() {
        let space = LoopSpace::new(TorusSystem::flat(MagneticDensity::constant(0.0)), 16).unwrap();
        let k = 0.02;
        let t = (0.5f64 / k).sqrt();
        let alpha = DiscreteLoop::from_fn(64, (0, 1), t, |s| Vec2::new(0.3, s)).unwrap();
        let path = build_class_representative(&alpha, 1, (1, 0), 16).unwrap();
        let rec = mountain_pass(&space, &path, k, 1, &MinimaxParams::default()).unwrap();
        assert!(rec.converged);
        assert!((rec.c - 2.0 * (0.5 * k).sqrt()).abs() < 1e-3, "{}", rec.c);
        assert!((rec.transgression - 1.0).abs() < 1e-10);
    }

    #[test]
    fn strip_saddle_is_the_opposite_line() {
        let space = LoopSpace::new(TorusSystem::flat(MagneticDensity::strip_field()), 32).unwrap();
        let k = 0.005;
        let alpha = DiscreteLoop::from_fn(128, (0, 1), 10.0, |s| Vec2::new(1.0 / 6.0, s)).unwrap();
        let path = build_class_representative(&alpha, 1, (1, 0), 32).unwrap();
        let rec = mountain_pass(&space, &path, k, 1, &MinimaxParams::default()).unwrap();
        assert!(
            rec.converged,
            "{} {} {} {:?}",
            rec.residual,
            rec.outer_iterations,
            rec.c,
            &rec.max_history[rec.max_history.len().saturating_sub(5)..]
        );
        let mean = rec.critical_loop.vertices().iter().map(|v| v.x).sum::<f64>() / 128.0;
        assert!((mean - 5.0 / 6.0).abs() < 1e-6, "{mean}");
        assert!(rec.max_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        // saddle level: minimizer action plus the flux between the two lines
        let gap = 2.0 / 3.0 + 3f64.sqrt() / std::f64::consts::PI;
        let c_alpha = space.local_action(&alpha, k);
        assert!((rec.c - c_alpha - gap).abs() < 1e-3, "{} {}", rec.c, c_alpha + gap);
    }
}
