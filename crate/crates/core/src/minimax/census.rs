//! Energy scans: Taimanov seeds, relaxed minimizers, mountain passes over
//! their iterates, and a census of geometrically distinct orbits.

use std::collections::BTreeMap;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{build_class_representative, default_direction, mountain_pass, MinimaxParams};
use crate::error::Result;
use crate::geometry::{curvature_law_defect, minimal_difference, TorusSystem, Vec2};
use crate::gradientflow::{flow_to_zero, FlowParams, FlowStatus};
use crate::loopspace::{DiscreteLoop, LoopSpace};
use crate::taimanov::{boundary_to_seed, minimize_taimanov};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanParams {
    pub k_grid: Vec<f64>,
    pub n_list: Vec<usize>,
    /// Side of the Taimanov cell grid.
    pub grid_m: usize,
    /// Vertices per seed loop.
    pub vertices: usize,
    /// Side of the spectral grid for the magnetic primitive.
    pub spectral_grid: usize,
    /// Hausdorff distance above which two orbits count as distinct.
    pub distinct_tol: f64,
    pub flow: FlowParams,
    pub minimax: MinimaxParams,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            k_grid: vec![0.002, 0.003, 0.004, 0.005],
            n_list: vec![1, 2],
            grid_m: 128,
            vertices: 256,
            spectral_grid: 64,
            distinct_tol: 1e-2,
            flow: FlowParams::default(),
            minimax: MinimaxParams::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    Minimizer,
    Saddle,
}

/// One row of `scan.csv`.
#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub k: f64,
    pub n: usize,
    pub c: f64,
    pub residual: f64,
    #[serde(rename = "T")]
    pub period: f64,
    pub winding_a: i64,
    pub winding_b: i64,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CensusOrbit {
    pub id: usize,
    pub k: f64,
    pub kind: OrbitKind,
    pub hash: String,
    #[serde(rename = "T")]
    pub period: f64,
    pub winding: (i64, i64),
    pub residual: f64,
    pub curvature_defect: f64,
    #[serde(skip)]
    pub orbit: DiscreteLoop,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Census {
    /// Orbit ids found at each energy, keyed by the shortest decimal form of `k`.
    #[serde(rename = "k")]
    pub by_energy: BTreeMap<String, Vec<usize>>,
    pub orbits: Vec<CensusOrbit>,
}

impl Census {
    /// Largest number of distinct orbits found at one energy.
    pub fn max_distinct(&self) -> usize {
        self.by_energy.values().map(Vec::len).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub census: Census,
}

/// Symmetric Hausdorff distance of the vertex images on the flat torus.
pub fn hausdorff_on_torus(a: &DiscreteLoop, b: &DiscreteLoop) -> f64 {
    let one_sided = |x: &[Vec2], y: &[Vec2]| {
        x.iter()
            .map(|p| y.iter().map(|q| minimal_difference(p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_sided(a.vertices(), b.vertices()).max(one_sided(b.vertices(), a.vertices()))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn primitive(w: (i64, i64)) -> (i64, i64) {
    let g = gcd(w.0, w.1);
    if g == 0 {
        w
    } else {
        (w.0 / g, w.1 / g)
    }
}

/// Same image within `tol` and the same orientation. Iterates of an orbit
/// have a multiple of its winding and the same image, so they match it.
pub fn same_orbit(a: &DiscreteLoop, b: &DiscreteLoop, tol: f64) -> bool {
    let oriented = if a.is_contractible() && b.is_contractible() {
        a.signed_area().signum() == b.signed_area().signum()
    } else {
        primitive(a.winding()) == primitive(b.winding())
    };
    oriented && hausdorff_on_torus(a, b) <= tol
}

/// Translates the lift so the vertex centroid lies in `[0, 1)^2`.
fn normalize_lift(l: &DiscreteLoop) -> DiscreteLoop {
    let c = l.vertices().iter().sum::<Vec2>() / l.len() as f64;
    l.translated(-c.map(f64::floor))
}

fn loop_hash(l: &DiscreteLoop) -> String {
    let digest = Sha256::digest(l.to_csv().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

struct Found {
    kind: OrbitKind,
    orbit: DiscreteLoop,
    residual: f64,
    defect: f64,
}

fn scan_energy(system: &TorusSystem, space: &LoopSpace, k: f64, params: &ScanParams) -> (Vec<ScanRow>, Vec<Found>) {
    let mut rows = Vec::new();
    let mut found: Vec<Found> = Vec::new();
    let region = match minimize_taimanov(system, k, params.grid_m) {
        Ok(r) => r,
        Err(e) => {
            warn!("k = {k}: taimanov failed: {e}");
            return (rows, found);
        }
    };
    if region.value >= -1e-12 || region.boundary.is_empty() {
        info!("k = {k}: Taimanov minimum {} is not negative, no seeds", region.value);
        return (rows, found);
    }
    let seeds = boundary_to_seed(system, k, &region, params.vertices).unwrap_or_default();
    let defect = |l: &DiscreteLoop| curvature_law_defect(system, l.vertices(), l.closing(), k).unwrap_or(f64::INFINITY);
    let admit = |found: &mut Vec<Found>, f: Found| {
        if !found.iter().any(|g| same_orbit(&g.orbit, &f.orbit, params.distinct_tol)) {
            found.push(f);
        }
    };

    for seed in seeds {
        let out = flow_to_zero(space, k, &seed, &params.flow);
        if out.status != FlowStatus::Converged {
            warn!("k = {k}: seed with winding {:?} ended {}", seed.winding(), out.status.as_str());
            continue;
        }
        let alpha = normalize_lift(&out.final_loop);
        let d = defect(&alpha);
        admit(&mut found, Found { kind: OrbitKind::Minimizer, orbit: alpha, residual: out.residual, defect: d });
    }

    let minimizers: Vec<DiscreteLoop> = found.iter().map(|f| f.orbit.clone()).collect();
    for alpha in minimizers.iter().filter(|a| !a.is_contractible()) {
        let direction = default_direction(alpha.winding()).expect("non-contractible winding");
        for &n in &params.n_list {
            let (a, b) = (alpha.winding().0 * n as i64, alpha.winding().1 * n as i64);
            let record = build_class_representative(alpha, n, direction, params.minimax.nodes)
                .and_then(|path| mountain_pass(space, &path, k, n, &params.minimax));
            match record {
                Ok(rec) => {
                    let status = if rec.converged { "converged" } else { "not_converged" };
                    rows.push(ScanRow {
                        k,
                        n,
                        c: rec.c,
                        residual: rec.residual,
                        period: rec.critical_loop.period(),
                        winding_a: a,
                        winding_b: b,
                        status: status.into(),
                    });
                    if rec.converged {
                        let d = defect(&rec.critical_loop);
                        let orbit = normalize_lift(&rec.critical_loop);
                        admit(&mut found, Found { kind: OrbitKind::Saddle, orbit, residual: rec.residual, defect: d });
                    }
                }
                Err(e) => {
                    warn!("k = {k}, n = {n}: {e}");
                    rows.push(ScanRow {
                        k,
                        n,
                        c: f64::NAN,
                        residual: f64::NAN,
                        period: f64::NAN,
                        winding_a: a,
                        winding_b: b,
                        status: e.kind().into(),
                    });
                }
            }
        }
    }
    (rows, found)
}

/// Runs the seed, relax and mountain-pass pipeline at every energy of the grid.
///
/// Energies are processed in parallel; results are assembled in grid order so
/// the output does not depend on scheduling.
pub fn energy_scan(system: &TorusSystem, params: &ScanParams) -> Result<ScanResult> {
    let space = LoopSpace::new(system.clone(), params.spectral_grid)?;
    if !system.is_oscillating() {
        info!("field is not oscillating; the scan has no seeds");
        return Ok(ScanResult::default());
    }
    let cells: Vec<_> = params.k_grid.par_iter().map(|&k| (k, scan_energy(system, &space, k, params))).collect();
    let mut result = ScanResult::default();
    for (k, (rows, found)) in cells {
        result.rows.extend(rows);
        let ids = result.census.by_energy.entry(format!("{k}")).or_default();
        for f in found {
            let id = result.census.orbits.len();
            ids.push(id);
            result.census.orbits.push(CensusOrbit {
                id,
                k,
                kind: f.kind,
                hash: loop_hash(&f.orbit),
                period: f.orbit.period(),
                winding: f.orbit.winding(),
                residual: f.residual,
                curvature_defect: f.defect,
                orbit: f.orbit,
            });
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MagneticDensity;

    fn vertical(n: usize, x: f64, up: bool) -> DiscreteLoop {
        let w = if up { (0, 1) } else { (0, -1) };
        let sign = if up { 1.0 } else { -1.0 };
        DiscreteLoop::from_fn(n, w, 1.0, |s| Vec2::new(x, sign * s)).unwrap()
    }

    #[test]
    fn orbit_equivalence() {
        let a = vertical(64, 0.2, true);
        assert!(same_orbit(&a, &a.reindexed(7), 1e-2));
        assert!(same_orbit(&a, &a.translated(Vec2::new(1.0, 0.0)), 1e-2));
        assert!(same_orbit(&a, &a.iterate(2).unwrap(), 1e-2));
        assert!(!same_orbit(&a, &vertical(64, 0.2, false), 1e-2));
        assert!(!same_orbit(&a, &vertical(64, 0.25, true), 1e-2));
        assert!((hausdorff_on_torus(&a, &vertical(64, 0.95, true)) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn symplectic_scan_is_empty() {
        let sys = TorusSystem::flat(MagneticDensity::constant(1.0));
        let out = energy_scan(&sys, &ScanParams { k_grid: vec![0.01], ..ScanParams::default() }).unwrap();
        assert!(out.rows.is_empty());
        assert!(out.census.orbits.is_empty());
    }

    #[test]
    fn strip_scan_finds_two_images() {
        let sys = TorusSystem::flat(MagneticDensity::strip_field());
        let params =
            ScanParams { k_grid: vec![0.005], n_list: vec![1], grid_m: 64, vertices: 128, ..ScanParams::default() };
        let out = energy_scan(&sys, &params).unwrap();
        assert!(out.census.max_distinct() >= 2, "{:?}", out.rows);
        for o in &out.census.orbits {
            assert!(o.curvature_defect < 5e-3);
        }
        let again = energy_scan(&sys, &params).unwrap();
        let hashes = |r: &ScanResult| r.census.orbits.iter().map(|o| o.hash.clone()).collect::<Vec<_>>();
        assert_eq!(hashes(&out), hashes(&again));
    }
}
