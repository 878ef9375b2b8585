//! Mountain pass in the built-in oscillating scenario: relax a Taimanov seed to
//! a local minimizer `alpha`, translate its `n`-th iterate once around the
//! torus and push the path down until its top is a second closed orbit.

use magneto::config::ExperimentConfig;
use magneto::geometry::curvature_law_defect;
use magneto::gradientflow::flow_to_zero;
use magneto::minimax::{build_class_representative, default_direction, hausdorff_on_torus, mountain_pass};
use magneto::taimanov::{boundary_to_seed, minimize_taimanov};

fn main() -> magneto::Result<()> {
    let cfg = ExperimentConfig::builtin("oscillating")?;
    let system = cfg.system()?;
    let space = cfg.loop_space()?;
    let k = cfg.energy.k;
    let region = minimize_taimanov(&system, k, cfg.grids.taimanov_m)?;
    let seed = boundary_to_seed(&system, k, &region, cfg.grids.vertices)?.remove(0);
    let alpha = flow_to_zero(&space, k, &seed, &cfg.flow2zero).final_loop;
    let base = space.local_action(&alpha, k);
    println!("alpha: winding {:?} T {:.6} S {:.9}", alpha.winding(), alpha.period(), base);

    let direction = default_direction(alpha.winding()).expect("non-contractible minimizer");
    for n in [1, 2] {
        let start = std::time::Instant::now();
        let path = build_class_representative(&alpha, n, direction, cfg.minimax.nodes)?;
        let rec = mountain_pass(&space, &path, k, n, &cfg.minimax)?;
        let l = &rec.critical_loop;
        let defect = curvature_law_defect(&system, l.vertices(), l.closing(), k)?;
        println!(
            "n {n}: converged {} c {:.9} (line integral {:.9}) residual {:.2e} defect {:.2e} T {:.6} distance to alpha {:.4} ({:.2?})",
            rec.converged, rec.c, rec.c_line_integral, rec.residual, defect, l.period(), hausdorff_on_torus(&alpha, l), start.elapsed()
        );
    }
    Ok(())
}
