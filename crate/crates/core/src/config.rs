//! Experiment configuration: one strict JSON document per run.
//!
//! Unknown keys are rejected at every level. [`ExperimentConfig::to_json`]
//! writes the normalized form (all defaults filled in), which reloads to an
//! equal value.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::TangentState;
use crate::geometry::{MagneticDensity, MetricField, TorusSystem, TrigPolynomial, Vec2};
use crate::gradientflow::FlowParams;
use crate::loopspace::{DiscreteLoop, LoopMetric, LoopSpace};
use crate::minimax::{MinimaxParams, ScanParams};

/// Names accepted by [`ExperimentConfig::builtin`].
pub const SCENARIOS: [&str; 5] = ["larmor", "strip", "oscillating", "symplectic", "flat"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    /// `flat`, or `conformal` with `G = exp(2u) I` and `u` given as trigonometric params.
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    /// `constant` with `[B]`, or `trig` with `[c0, (amp, m1, m2, phase)*]`.
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergySpec {
    /// Energy of single-energy commands.
    pub k: f64,
    /// Energies of `scan`.
    pub k_grid: Vec<f64>,
    /// Iterates used by `mountainpass` and `scan`.
    pub n_list: Vec<usize>,
    /// Bracket and resolution of the Taimanov critical value estimate.
    pub k_lo: f64,
    pub k_hi: f64,
    pub tol_k: f64,
}

impl Default for EnergySpec {
    fn default() -> Self {
        Self {
            k: 0.005,
            k_grid: vec![0.002, 0.003, 0.004, 0.005],
            n_list: vec![1, 2],
            k_lo: 1e-4,
            k_hi: 0.1,
            tol_k: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeSpec {
    pub dt: f64,
    pub t_end: f64,
    pub project_energy: bool,
    pub closure_tol: f64,
    /// Initial point of `simulate`.
    pub q0: [f64; 2],
    /// Initial direction of `simulate`; the speed is fixed by the energy `k`.
    pub direction: [f64; 2],
}

impl Default for OdeSpec {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 10.0, project_energy: false, closure_tol: 1e-5, q0: [0.5, 0.5], direction: [1.0, 0.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Vertices of relaxed loops.
    pub vertices: usize,
    /// Side of the Taimanov cell grid.
    pub taimanov_m: usize,
    /// Side of the spectral grid of the magnetic primitive.
    pub spectral: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { vertices: 256, taimanov_m: 128, spectral: 64 }
    }
}

/// Where `relax` and `mountainpass` take their starting loops from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    /// Boundary curves of the discrete Taimanov minimizer.
    Taimanov,
    /// Clockwise circle with band-limited relative noise drawn from the config seed.
    Circle { center: [f64; 2], radius: f64, noise: f64 },
    /// Straight loop of the given winding through `offset`.
    Line { winding: [i64; 2], offset: [f64; 2] },
    /// Loop CSV file.
    File { path: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub metric: MetricSpec,
    pub field: FieldSpec,
    pub energy: EnergySpec,
    pub flow: OdeSpec,
    pub grids: GridSpec,
    pub loop_metric: LoopMetric,
    pub seed_loop: SeedSpec,
    pub flow2zero: FlowParams,
    pub minimax: MinimaxParams,
    /// Translation direction of minimax paths; the default pairs positively with the winding.
    pub direction: Option<[i64; 2]>,
    /// Hausdorff distance above which two orbits count as distinct.
    pub distinct_tol: f64,
    pub output_dir: String,
    /// Seed of the perturbations in seed loops; nothing else is random.
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            metric: MetricSpec { kind: "flat".into(), params: Vec::new() },
            field: FieldSpec { kind: "constant".into(), params: vec![1.0] },
            energy: EnergySpec::default(),
            flow: OdeSpec::default(),
            grids: GridSpec::default(),
            loop_metric: LoopMetric::H1,
            seed_loop: SeedSpec::Taimanov,
            flow2zero: FlowParams::default(),
            minimax: MinimaxParams::default(),
            direction: None,
            distinct_tol: 1e-2,
            output_dir: "out".into(),
            seed: 0,
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    check(x > 0.0 && x.is_finite(), || format!("{name} must be positive, got {x}"))
}

fn in_range(name: &str, x: usize, lo: usize, hi: usize) -> Result<()> {
    check((lo..=hi).contains(&x), || format!("{name} = {x} outside [{lo}, {hi}]"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Normalized form: every field written out, pretty-printed.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let base = Self::default();
        let cfg = match name {
            "larmor" => Self {
                field: FieldSpec { kind: "constant".into(), params: vec![4.0 * std::f64::consts::PI] },
                energy: EnergySpec { k: 0.5, k_grid: vec![0.5], n_list: vec![1], ..EnergySpec::default() },
                flow: OdeSpec { t_end: 100.0, ..OdeSpec::default() },
                seed_loop: SeedSpec::Circle { center: [0.5, 0.5], radius: 0.25 / std::f64::consts::PI, noise: 0.01 },
                ..base
            },
            "strip" => {
                Self { field: FieldSpec { kind: "trig".into(), params: vec![1.0, -2.0, 1.0, 0.0, 0.0] }, ..base }
            }
            "oscillating" => Self {
                metric: MetricSpec { kind: "conformal".into(), params: vec![0.0, 0.1, 0.0, 1.0, 0.0] },
                field: FieldSpec { kind: "trig".into(), params: vec![1.0, -2.0, 0.0, 1.0, 0.0] },
                energy: EnergySpec {
                    k: 0.004,
                    k_grid: (3..13).map(|i| i as f64 / 2000.0).collect(),
                    ..EnergySpec::default()
                },
                ..base
            },
            "symplectic" => Self {
                field: FieldSpec { kind: "constant".into(), params: vec![1.0] },
                energy: EnergySpec { k: 0.01, k_grid: vec![0.01], ..EnergySpec::default() },
                ..base
            },
            "flat" => Self {
                field: FieldSpec { kind: "constant".into(), params: vec![0.0] },
                energy: EnergySpec { k: 0.02, k_grid: vec![0.02], n_list: vec![1], ..EnergySpec::default() },
                seed_loop: SeedSpec::Line { winding: [0, 1], offset: [0.3, 0.0] },
                flow: OdeSpec { direction: [1.0, 2.0], ..OdeSpec::default() },
                ..base
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown scenario {other:?}; expected one of {}",
                    SCENARIOS.join(", ")
                )))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.metric_field()?;
        self.density()?;
        let e = &self.energy;
        positive("energy.k", e.k)?;
        check(!e.k_grid.is_empty(), || "energy.k_grid is empty".into())?;
        for &k in &e.k_grid {
            positive("energy.k_grid entry", k)?;
        }
        check(!e.n_list.is_empty() && e.n_list.iter().all(|&n| (1..=16).contains(&n)), || {
            format!("energy.n_list entries must lie in [1, 16], got {:?}", e.n_list)
        })?;
        positive("energy.k_lo", e.k_lo)?;
        check(e.k_hi > e.k_lo, || format!("energy.k_hi = {} must exceed k_lo = {}", e.k_hi, e.k_lo))?;
        positive("energy.tol_k", e.tol_k)?;

        positive("flow.dt", self.flow.dt)?;
        positive("flow.t_end", self.flow.t_end)?;
        positive("flow.closure_tol", self.flow.closure_tol)?;
        check(self.flow.direction.iter().any(|&x| x != 0.0), || "flow.direction must be nonzero".into())?;

        in_range("grids.vertices", self.grids.vertices, 8, 8192)?;
        in_range("grids.taimanov_m", self.grids.taimanov_m, 2, 1024)?;
        in_range("grids.spectral", self.grids.spectral, 4, 1024)?;

        let f = &self.flow2zero;
        positive("flow2zero.step", f.step)?;
        positive("flow2zero.max_step", f.max_step)?;
        positive("flow2zero.tol_eta", f.tol_eta)?;
        check(f.max_iters > 0, || "flow2zero.max_iters must be positive".into())?;
        positive("flow2zero.T_min", f.t_min)?;
        check(f.t_max > f.t_min, || "flow2zero.T_max must exceed T_min".into())?;
        check(f.polish_below >= 0.0, || "flow2zero.polish_below must be non-negative".into())?;

        let m = &self.minimax;
        in_range("minimax.nodes", m.nodes, 2, 1024)?;
        positive("minimax.step", m.step)?;
        positive("minimax.tol_eta", m.tol_eta)?;
        positive("minimax.polish_below", m.polish_below)?;
        positive("minimax.T_min", m.t_min)?;
        check(m.t_max > m.t_min, || "minimax.T_max must exceed T_min".into())?;
        positive("minimax.distinct_tol", m.distinct_tol)?;
        positive("distinct_tol", self.distinct_tol)?;

        match &self.seed_loop {
            SeedSpec::Circle { radius, noise, .. } => {
                positive("seed_loop.radius", *radius)?;
                check(*noise >= 0.0, || "seed_loop.noise must be non-negative".into())?;
            }
            SeedSpec::Line { winding, .. } => check(*winding != [0, 0], || "seed_loop.winding must be nonzero".into())?,
            SeedSpec::File { path } => check(!path.is_empty(), || "seed_loop.path is empty".into())?,
            SeedSpec::Taimanov => {}
        }
        if let Some([p, q]) = self.direction {
            check(p != 0 || q != 0, || "direction must be nonzero".into())?;
        }
        check(!self.output_dir.is_empty(), || "output_dir is empty".into())
    }

    pub fn metric_field(&self) -> Result<MetricField> {
        match self.metric.kind.as_str() {
            "flat" => {
                check(self.metric.params.is_empty(), || "flat metric takes no params".into())?;
                Ok(MetricField::flat())
            }
            "conformal" => Ok(MetricField::conformal(TrigPolynomial::from_params(&self.metric.params)?)),
            other => Err(Error::Config(format!("unknown metric kind {other:?}; expected flat or conformal"))),
        }
    }

    pub fn density(&self) -> Result<MagneticDensity> {
        match self.field.kind.as_str() {
            "constant" => {
                check(self.field.params.len() == 1, || "constant field takes exactly one param".into())?;
                Ok(MagneticDensity::constant(self.field.params[0]))
            }
            "trig" => Ok(MagneticDensity::trig(TrigPolynomial::from_params(&self.field.params)?)),
            other => Err(Error::Config(format!("unknown field kind {other:?}; expected constant or trig"))),
        }
    }

    pub fn system(&self) -> Result<TorusSystem> {
        TorusSystem::new(self.metric_field()?, self.density()?)
    }

    pub fn loop_space(&self) -> Result<LoopSpace> {
        Ok(LoopSpace::new(self.system()?, self.grids.spectral)?.with_metric(self.loop_metric))
    }

    /// Initial state of `simulate`: `q0` with speed `sqrt(2k)` along `direction`.
    pub fn initial_state(&self, system: &TorusSystem) -> Result<TangentState> {
        let q = Vec2::new(self.flow.q0[0], self.flow.q0[1]);
        let d = Vec2::new(self.flow.direction[0], self.flow.direction[1]);
        let g = system.metric.checked_tensor(q)?;
        let norm = d.dot(&(g * d)).sqrt();
        Ok(TangentState::new(q, d * ((2.0 * self.energy.k).sqrt() / norm)))
    }

    pub fn scan_params(&self) -> ScanParams {
        ScanParams {
            k_grid: self.energy.k_grid.clone(),
            n_list: self.energy.n_list.clone(),
            grid_m: self.grids.taimanov_m,
            vertices: self.grids.vertices,
            spectral_grid: self.grids.spectral,
            distinct_tol: self.distinct_tol,
            flow: self.flow2zero.clone(),
            minimax: self.minimax.clone(),
        }
    }

    /// Explicit seed loops (`circle`, `line`, `file`) at energy `k`. `None` for `taimanov` seeds.
    pub fn explicit_seed(&self, space: &LoopSpace, k: f64) -> Result<Option<DiscreteLoop>> {
        let n = self.grids.vertices;
        let l = match &self.seed_loop {
            SeedSpec::Taimanov => return Ok(None),
            SeedSpec::Circle { center, radius, noise } => {
                noisy_circle(n, Vec2::new(center[0], center[1]), *radius, *noise, self.seed)?
            }
            SeedSpec::Line { winding, offset } => {
                let w = Vec2::new(winding[0] as f64, winding[1] as f64);
                let o = Vec2::new(offset[0], offset[1]);
                DiscreteLoop::from_fn(n, (winding[0], winding[1]), 1.0, |s| o + w * s)?
            }
            SeedSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read seed loop {path}: {e}")))?;
                DiscreteLoop::from_csv(&text)?
            }
        };
        Ok(Some(with_best_period(space, l, k)))
    }
}

/// Sets the period to `sqrt(e / k)`, the minimizer of `e / T + k T`.
fn with_best_period(space: &LoopSpace, mut l: DiscreteLoop, k: f64) -> DiscreteLoop {
    let e = space.kinetic_energy(&l);
    if e > 0.0 {
        l.set_period((e / k).sqrt());
    }
    l
}

/// Clockwise circle (the orientation of Larmor orbits for positive fields)
/// with radial noise in Fourier modes 2..8 of relative size at most `noise`.
pub fn noisy_circle(n: usize, center: Vec2, radius: f64, noise: f64, seed: u64) -> Result<DiscreteLoop> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64)> = (2..=8).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let scale = noise / modes.iter().map(|(c, d)| c.abs() + d.abs()).sum::<f64>();
    DiscreteLoop::from_fn(n, (0, 0), 1.0, |s| {
        let a = -std::f64::consts::TAU * s;
        let bump: f64 = modes
            .iter()
            .enumerate()
            .map(|(j, (c, d))| {
                let m = (j + 2) as f64;
                c * (m * a).cos() + d * (m * a).sin()
            })
            .sum();
        center + Vec2::new(a.cos(), a.sin()) * radius * (1.0 + scale * bump)
    })
}
