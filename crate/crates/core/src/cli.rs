//! The `magneto` command line.
//!
//! Every subcommand reads one [`ExperimentConfig`] (a JSON file or a built-in
//! scenario), writes its files into the output directory at the end and
//! prints one JSON record per result on stdout. Failures print a single line
//! `error: kind=<kind> reason="<message>"` on stderr and exit with 1 for
//! domain errors or 2 for configuration errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::flow::{detect_closure, integrate, TangentState};
use crate::geometry::{christoffel, cross, curvature_law_defect, Vec2};
use crate::gradientflow::{flow_to_zero, FlowStatus};
use crate::io::{census_json, orbits_csv, scan_csv, svg_fundamental_domain, trajectory_csv, write_output};
use crate::loopspace::{DiscreteLoop, LoopSpace, LoopTangent};
use crate::minimax::{
    build_class_representative, default_direction, energy_scan, eta_line_integral, mountain_pass, transgression,
    LoopPath,
};
use crate::taimanov::{boundary_to_seed, minimize_taimanov, tau_plus_estimate};

#[derive(Parser, Debug)]
#[command(name = "magneto", version, about = "Closed magnetic geodesics on the two-torus")]
struct Cli {
    #[command(flatten)]
    source: Source,
    /// Output directory (overrides `output_dir` of the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Source {
    /// JSON experiment config.
    #[arg(long, global = true, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario: larmor, strip, oscillating, symplectic or flat.
    #[arg(long, global = true)]
    scenario: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the magnetic geodesic equation and look for a closed orbit.
    Simulate,
    /// Minimize the discrete Taimanov functional and estimate its critical energy.
    Taimanov,
    /// Relax seed loops to zeros of the action form.
    Relax,
    /// Mountain pass over translated iterates of a relaxed minimizer.
    Mountainpass,
    /// Seeds, relaxation and mountain passes over the energy grid, with an orbit census.
    Scan,
    /// Run the invariant suite on the configured system.
    Verify,
    /// Print the normalized config.
    Config,
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: kind={} reason=\"{}\"", e.kind(), e.to_string().replace('"', "'"));
            e.exit_code()
        }
    }
}

/// `MAGNETO_THREADS` caps the worker pool.
fn configure_threads() {
    if let Some(n) = std::env::var("MAGNETO_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn load(source: &Source) -> Result<ExperimentConfig> {
    match (&source.config, &source.scenario) {
        (Some(p), _) => ExperimentConfig::load(p),
        (None, Some(name)) => ExperimentConfig::builtin(name),
        (None, None) => Err(Error::Config("pass --config <file> or --scenario <name>".into())),
    }
}

fn run(cli: Cli) -> Result<i32> {
    let cfg = load(&cli.source)?;
    let out = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output_dir));
    match cli.command {
        Command::Simulate => simulate(&cfg, &out),
        Command::Taimanov => taimanov(&cfg, &out),
        Command::Relax => relax(&cfg, &out),
        Command::Mountainpass => mountainpass(&cfg, &out),
        Command::Scan => scan(&cfg, &out),
        Command::Verify => verify(&cfg),
        Command::Config => {
            println!("{}", cfg.to_json());
            Ok(0)
        }
    }
}

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let sys = cfg.system()?;
    let s0 = cfg.initial_state(&sys)?;
    let traj = integrate(&sys, s0, cfg.flow.t_end, cfg.flow.dt, cfg.flow.project_energy)?;
    let closed = detect_closure(&sys, &traj, cfg.flow.closure_tol, cfg.grids.vertices);
    write_output(out, "trajectory.csv", &trajectory_csv(&traj))?;
    let mut record = json!({
        "t_end": cfg.flow.t_end,
        "steps": traj.times.len() - 1,
        "energy_drift": traj.energy_drift,
        "closed": closed.is_some(),
    });
    if let Some(orbit) = &closed {
        let defect = curvature_law_defect(&sys, &orbit.positions(), orbit.closing(), cfg.energy.k)?;
        record["period"] = json!(orbit.period);
        record["winding"] = json!(orbit.winding);
        record["curvature_defect"] = json!(defect);
        let l = DiscreteLoop::new(orbit.positions(), orbit.winding, orbit.period)?;
        write_output(out, "orbits.csv", &orbits_csv([(0, &l)]))?;
        write_output(out, "orbit.svg", &svg_fundamental_domain(&sys, &[&l], None))?;
    }
    println!("{record}");
    Ok(0)
}

fn taimanov(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let sys = cfg.system()?;
    if !sys.is_oscillating() {
        return Err(Error::NotOscillating);
    }
    let region = minimize_taimanov(&sys, cfg.energy.k, cfg.grids.taimanov_m)?;
    let tau = tau_plus_estimate(&sys, cfg.energy.k_lo, cfg.energy.k_hi, cfg.energy.tol_k, cfg.grids.taimanov_m)?;
    let seeds = if region.value < 0.0 {
        boundary_to_seed(&sys, cfg.energy.k, &region, cfg.grids.vertices)?
    } else {
        Vec::new()
    };
    let mut record = region.summary_json();
    record["tau_plus"] = json!(tau);
    record["seeds"] = json!(seeds.iter().map(|s| s.winding()).collect::<Vec<_>>());
    write_output(out, "region.pbm", &region.to_pbm())?;
    write_output(out, "region.json", &serde_json::to_string_pretty(&record)?)?;
    let refs: Vec<&DiscreteLoop> = seeds.iter().collect();
    write_output(out, "region.svg", &svg_fundamental_domain(&sys, &refs, Some(&region)))?;
    println!("{record}");
    Ok(0)
}

/// Seed loops at energy `k`: the explicit seed, or Taimanov boundary curves.
fn seeds(cfg: &ExperimentConfig, space: &LoopSpace, k: f64) -> Result<Vec<DiscreteLoop>> {
    if let Some(l) = cfg.explicit_seed(space, k)? {
        return Ok(vec![l]);
    }
    let sys = space.system();
    if !sys.is_oscillating() {
        return Err(Error::NotOscillating);
    }
    let region = minimize_taimanov(sys, k, cfg.grids.taimanov_m)?;
    if region.value >= 0.0 {
        return Err(Error::InvalidInput(format!("Taimanov minimum {} at k = {k} is not negative", region.value)));
    }
    boundary_to_seed(sys, k, &region, cfg.grids.vertices)
}

struct Relaxed {
    loop_: DiscreteLoop,
    status: FlowStatus,
}

fn relax_all(cfg: &ExperimentConfig, space: &LoopSpace, k: f64) -> Result<Vec<Relaxed>> {
    let mut found = Vec::new();
    for seed in seeds(cfg, space, k)? {
        let r = flow_to_zero(space, k, &seed, &cfg.flow2zero);
        let l = &r.final_loop;
        let defect = curvature_law_defect(space.system(), l.vertices(), l.closing(), k).unwrap_or(f64::NAN);
        println!(
            "{}",
            json!({
                "status": r.status.as_str(),
                "residual": r.residual,
                "iterations": r.iterations,
                "T": l.period(),
                "winding": l.winding(),
                "energy": k,
                "curvature_defect": defect,
            })
        );
        found.push(Relaxed { loop_: r.final_loop, status: r.status });
    }
    Ok(found)
}

fn relax(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let space = cfg.loop_space()?;
    let found = relax_all(cfg, &space, cfg.energy.k)?;
    let loops: Vec<&DiscreteLoop> = found.iter().map(|r| &r.loop_).collect();
    write_output(out, "orbits.csv", &orbits_csv(loops.iter().copied().enumerate()))?;
    write_output(out, "relax.svg", &svg_fundamental_domain(space.system(), &loops, None))?;
    if found.iter().all(|r| r.status == FlowStatus::Converged) {
        Ok(0)
    } else {
        Err(Error::Numeric("a seed did not converge".into()))
    }
}

fn mountainpass(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let space = cfg.loop_space()?;
    let k = cfg.energy.k;
    let alpha = relax_all(cfg, &space, k)?
        .into_iter()
        .find(|r| r.status == FlowStatus::Converged && !r.loop_.is_contractible())
        .map(|r| r.loop_)
        .ok_or_else(|| Error::Numeric("no converged non-contractible minimizer to start from".into()))?;
    let direction = match cfg.direction {
        Some([p, q]) => (p, q),
        None => default_direction(alpha.winding()).expect("non-contractible winding"),
    };
    let mut loops = vec![alpha.clone()];
    let mut converged = true;
    for &n in &cfg.energy.n_list {
        let path = build_class_representative(&alpha, n, direction, cfg.minimax.nodes)?;
        let rec = mountain_pass(&space, &path, k, n, &cfg.minimax)?;
        let l = &rec.critical_loop;
        let defect = curvature_law_defect(space.system(), l.vertices(), l.closing(), k).unwrap_or(f64::NAN);
        let mut record = serde_json::to_value(&rec)?;
        record["T"] = json!(l.period());
        record["winding"] = json!(l.winding());
        record["curvature_defect"] = json!(defect);
        record["max_history"] = json!(rec.max_history.len());
        println!("{record}");
        converged &= rec.converged;
        loops.push(rec.critical_loop);
    }
    let refs: Vec<&DiscreteLoop> = loops.iter().collect();
    write_output(out, "orbits.csv", &orbits_csv(refs.iter().copied().enumerate()))?;
    write_output(out, "mountainpass.svg", &svg_fundamental_domain(space.system(), &refs, None))?;
    if converged {
        Ok(0)
    } else {
        Err(Error::Numeric("mountain pass did not converge".into()))
    }
}

fn scan(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let sys = cfg.system()?;
    let result = energy_scan(&sys, &cfg.scan_params())?;
    let orbits = &result.census.orbits;
    // picture at the grid energy closest to `energy.k` that has orbits
    let shown_k =
        orbits.iter().map(|o| o.k).min_by(|a, b| (a - cfg.energy.k).abs().total_cmp(&(b - cfg.energy.k).abs()));
    let shown: Vec<&DiscreteLoop> = orbits.iter().filter(|o| Some(o.k) == shown_k).map(|o| &o.orbit).collect();
    write_output(out, "scan.csv", &scan_csv(&result.rows))?;
    write_output(out, "census.json", &census_json(&result.census))?;
    write_output(out, "orbits.csv", &orbits_csv(orbits.iter().map(|o| (o.id, &o.orbit))))?;
    write_output(out, "scan.svg", &svg_fundamental_domain(&sys, &shown, None))?;
    println!(
        "{}",
        json!({
            "rows": result.rows.len(),
            "orbits": orbits.len(),
            "max_distinct": result.census.max_distinct(),
            "svg_k": shown_k,
        })
    );
    Ok(0)
}

/// One line of the `verify` table.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn row(name: &'static str, value: f64, bound: f64) -> Check {
    Check { name, passed: value < bound, detail: format!("{value:.3e} < {bound:.0e}") }
}

fn random_loop(rng: &mut ChaCha8Rng, n: usize, winding: (i64, i64)) -> Result<DiscreteLoop> {
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.05..0.05)).collect();
    let (o, t) = (Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)), rng.gen_range(0.5..2.0));
    let w = Vec2::new(winding.0 as f64, winding.1 as f64);
    DiscreteLoop::from_fn(n, winding, t, |s| {
        let a = std::f64::consts::TAU * s;
        let base = if winding == (0, 0) { Vec2::new(0.2 * a.cos(), -0.2 * a.sin()) } else { w * s };
        o + base
            + Vec2::new(
                c[0] * a.sin() + c[1] * (2.0 * a).cos() + c[2] * (3.0 * a).sin(),
                c[3] * a.cos() + c[4] * (2.0 * a).sin() + c[5] * (3.0 * a).cos(),
            )
    })
}

/// The invariant suite behind `verify`.
pub fn invariant_suite(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let sys = cfg.system()?;
    let space = cfg.loop_space()?;
    let k = cfg.energy.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    let point = |rng: &mut ChaCha8Rng| Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));

    // Lorentz force: g(u, Y(q, v)) = sigma_q(u, v)
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (q, u, v) = (point(&mut rng), point(&mut rng) * 2.0, point(&mut rng) * 2.0);
        let lhs = u.dot(&(sys.metric.tensor(q) * sys.lorentz(q, v)?));
        worst = worst.max((lhs - sys.sigma_density(q) * cross(u, v)).abs() / (1.0 + u.norm() * v.norm()));
    }
    checks.push(row("lorentz_identity", worst, 1e-10));

    let mut worst = 0.0f64;
    for _ in 0..100 {
        let q = point(&mut rng);
        for e in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)] {
            worst = worst.max((sys.density.value(q + e) - sys.density.value(q)).abs());
            worst = worst.max((sys.metric.tensor(q + e) - sys.metric.tensor(q)).amax());
        }
        let g = christoffel(&sys.metric, q)?;
        worst = worst.max((0..2).map(|i| (g[i][0][1] - g[i][1][0]).abs()).fold(0.0, f64::max));
    }
    checks.push(row("periodicity_and_symmetry", worst, 1e-12));

    let s0: TangentState = cfg.initial_state(&sys)?;
    let traj = integrate(&sys, s0, cfg.flow.t_end.min(10.0), cfg.flow.dt, false)?;
    checks.push(row("energy_conservation", traj.energy_drift, 1e-6));

    // eta against finite differences of the local action
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let winding = if trial % 2 == 0 { (0, 0) } else { (1, trial % 3 - 1) };
        let l = random_loop(&mut rng, 64, winding)?;
        let dir = LoopTangent {
            dx: (0..64).map(|_| point(&mut rng) - Vec2::new(0.5, 0.5)).collect(),
            dt: rng.gen_range(-1.0..1.0),
        };
        let exact = space.eta(&l, k).pair(&dir);
        // fourth-order stencil: truncation and rounding both stay near 1e-10
        let h = 1e-3;
        let s = |t: f64| space.local_action(&dir.apply(&l, t), k);
        let fd = (8.0 * (s(h) - s(-h)) - (s(2.0 * h) - s(-2.0 * h))) / (12.0 * h);
        worst = worst.max((exact - fd).abs() / exact.abs().max(1e-3));
    }
    checks.push(row("eta_gradient", worst, 1e-6));

    // S_{k+} - S_{k-} = (k+ - k-) T along stored paths
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let nodes = (0..8).map(|_| random_loop(&mut rng, 32, (0, 1))).collect::<Result<Vec<_>>>()?;
        let path = LoopPath::new(nodes)?;
        let (lo, hi) = (k * rng.gen_range(0.2..1.0), k * rng.gen_range(1.0..3.0));
        let (a, b) = (eta_line_integral(&space, &path, lo), eta_line_integral(&space, &path, hi));
        for ((sa, sb), l) in a.iter().zip(&b).zip(path.nodes()) {
            let expected = (hi - lo) * l.period();
            worst = worst.max((sb - sa - expected).abs() / sb.abs().max(sa.abs()).max(1.0));
        }
    }
    checks.push(row("energy_variation_identity", worst, 1e-12));

    let mut worst = 0.0f64;
    for (a, b, p, q) in [(0, 1, 1, 0), (1, 2, 1, 0), (2, -1, 0, 1), (-1, 3, 2, 1)] {
        let l = random_loop(&mut rng, 32, (a, b))?;
        let path = build_class_representative(&l, 1, (p, q), 8)?;
        worst = worst.max((transgression(&path) - (p * b - q * a) as f64).abs());
    }
    checks.push(row("transgression_pairing", worst, 1e-8));

    match cfg.explicit_seed(&space, k)? {
        Some(seed) => {
            let r = flow_to_zero(&space, k, &seed, &cfg.flow2zero);
            let l = &r.final_loop;
            checks.push(Check {
                name: "relaxation_converges",
                passed: r.status == FlowStatus::Converged,
                detail: format!("{} residual {:.3e}", r.status.as_str(), r.residual),
            });
            if r.status == FlowStatus::Converged {
                let d = curvature_law_defect(&sys, l.vertices(), l.closing(), k)?;
                checks.push(row("curvature_law", d, 5e-3));
            }
        }
        None if sys.is_oscillating() => {
            let lo = minimize_taimanov(&sys, 0.5 * k, cfg.grids.taimanov_m)?.value;
            let hi = minimize_taimanov(&sys, k, cfg.grids.taimanov_m)?.value;
            checks.push(Check {
                name: "taimanov_monotone_in_k",
                passed: lo <= hi + 1e-12 && hi <= 0.0,
                detail: format!("{lo:.6} <= {hi:.6} <= 0"),
            });
        }
        None => {}
    }
    Ok(checks)
}

fn print_table(checks: &[Check]) {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!("{mark}  {:width$}  {}", c.name, c.detail);
    }
}

fn verify(cfg: &ExperimentConfig) -> Result<i32> {
    let checks = invariant_suite(cfg)?;
    print_table(&checks);
    if checks.iter().all(|c| c.passed) {
        Ok(0)
    } else {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(Error::Numeric(format!("invariants failed: {}", failed.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn help_and_bad_arguments() {
        assert_eq!(run_command(["magneto", "--help"]), 0);
        assert_eq!(run_command(["magneto", "frobnicate"]), 2);
        assert_eq!(run_command(["magneto", "verify"]), 2);
        assert_eq!(run_command(["magneto", "--scenario", "nowhere", "verify"]), 2);
    }

    #[test]
    fn larmor_suite_passes() {
        let checks = invariant_suite(&ExperimentConfig::builtin("larmor").unwrap()).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
        assert!(checks.iter().any(|c| c.name == "curvature_law"));
    }
}
