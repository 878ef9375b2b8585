//! Translating a loop of class (a, b) once around the torus in direction
//! (p, q) sweeps the signed area `p b - q a`. The local action of the lifted
//! end loop exceeds that of the start by the flux times this area, although
//! both project to the same loop.

use magneto::config::ExperimentConfig;
use magneto::geometry::Vec2;
use magneto::loopspace::DiscreteLoop;
use magneto::minimax::{build_class_representative, path_action, transgression};

fn main() -> magneto::Result<()> {
    let cfg = ExperimentConfig::builtin("oscillating")?;
    let space = cfg.loop_space()?;
    let k = cfg.energy.k;
    println!("flux {:.12}", space.system().flux());
    println!("  (a, b)   (p, q)  transgression  p b - q a   action jump / flux");
    for (a, b) in [(1, 0), (0, 1), (2, -1), (1, 3)] {
        let l = DiscreteLoop::from_fn(64, (a, b), 5.0, |s| {
            let w = std::f64::consts::TAU * s;
            Vec2::new(0.2 + a as f64 * s + 0.05 * w.sin(), 0.6 + b as f64 * s + 0.03 * (2.0 * w).cos())
        })?;
        for (p, q) in [(1, 0), (0, 1), (-1, 2)] {
            if p * b - q * a == 0 {
                continue;
            }
            let path = build_class_representative(&l, 1, (p, q), 16)?;
            let profile = path_action(&space, &path, k);
            let jump = profile.last().unwrap() - profile[0];
            println!(
                "  ({a:2}, {b:2})  ({p:2}, {q:2})  {:13.9}  {:9}   {:.9}",
                transgression(&path),
                p * b - q * a,
                jump / space.system().flux()
            );
        }
    }
    Ok(())
}
