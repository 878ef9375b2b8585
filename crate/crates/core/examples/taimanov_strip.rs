//! Minimize the Taimanov functional for the strip field, turn the boundary
//! into seed loops and relax each seed to a closed magnetic geodesic.

use magneto::geometry::{curvature_law_defect, MagneticDensity, TorusSystem};
use magneto::gradientflow::{flow_to_zero, FlowParams};
use magneto::loopspace::LoopSpace;
use magneto::taimanov::{boundary_to_seed, minimize_taimanov};

fn main() -> magneto::Result<()> {
    let system = TorusSystem::flat(MagneticDensity::strip_field());
    let k = 0.005;
    let region = minimize_taimanov(&system, k, 128)?;
    println!(
        "value {:.6} perimeter {:.6} flux {:.6} curves {}",
        region.value,
        region.perimeter,
        region.flux,
        region.boundary.len()
    );
    let space = LoopSpace::new(system.clone(), 64)?;
    for seed in boundary_to_seed(&system, k, &region, 256)? {
        let start = std::time::Instant::now();
        let out = flow_to_zero(&space, k, &seed, &FlowParams::default());
        let l = &out.final_loop;
        let defect = curvature_law_defect(&system, l.vertices(), l.closing(), k)?;
        let mean_q1 = l.vertices().iter().map(|v| v.x).sum::<f64>() / l.len() as f64;
        println!(
            "winding {:?} status {} residual {:.2e} iterations {} newton {} T {:.6} mean q1 {:.6} curvature defect {:.2e} ({:.2?})",
            l.winding(), out.status.as_str(), out.residual, out.iterations, out.newton_steps, l.period(), mean_q1, defect, start.elapsed()
        );
    }
    Ok(())
}
