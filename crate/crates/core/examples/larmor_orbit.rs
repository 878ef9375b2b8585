//! Constant field on the flat torus: the orbit through any point is a circle
//! of radius `sqrt(2k)/B` traversed in time `2 pi / B`.

use std::f64::consts::PI;

use magneto::flow::{detect_closure, integrate, TangentState};
use magneto::geometry::{MagneticDensity, TorusSystem, Vec2};

fn main() -> magneto::Result<()> {
    let b = 4.0 * PI;
    let system = TorusSystem::flat(MagneticDensity::constant(b));
    let start = std::time::Instant::now();
    let traj = integrate(&system, TangentState::new(Vec2::new(0.5, 0.5), Vec2::new(1.0, 0.0)), 100.0, 1e-3, false)?;
    println!("steps {} energy drift {:.2e} ({:.2?})", traj.states.len() - 1, traj.energy_drift, start.elapsed());
    match detect_closure(&system, &traj, 1e-6, 256) {
        Some(orbit) => {
            let center = orbit.positions().iter().sum::<Vec2>() / orbit.samples.len() as f64;
            let radius =
                orbit.positions().iter().map(|q| (q - center).norm()).sum::<f64>() / orbit.samples.len() as f64;
            println!("period {:.9} (expected {:.9})", orbit.period, 2.0 * PI / b);
            println!("radius {:.9} (expected {:.9})", radius, 1.0 / b);
            println!("winding {:?} mismatch {:.2e}", orbit.winding, orbit.mismatch);
        }
        None => println!("no closure found"),
    }
    Ok(())
}
