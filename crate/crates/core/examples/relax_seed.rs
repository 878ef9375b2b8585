//! Without a magnetic field the zeros of the action form are closed geodesics.
//! A wavy loop in the class (1, 2) on the flat torus relaxes to a straight
//! line of length `sqrt(5)` with period `sqrt(5) / sqrt(2k)`.

use std::f64::consts::TAU;

use magneto::geometry::{MagneticDensity, TorusSystem, Vec2};
use magneto::gradientflow::{flow_to_zero, FlowParams};
use magneto::loopspace::{DiscreteLoop, LoopSpace};

fn main() -> magneto::Result<()> {
    let k: f64 = 0.02;
    let system = TorusSystem::flat(MagneticDensity::constant(0.0));
    let space = LoopSpace::new(system.clone(), 32)?;
    let seed = DiscreteLoop::from_fn(256, (1, 2), 10.0, |s| {
        Vec2::new(s + 0.04 * (TAU * 3.0 * s).sin(), 2.0 * s + 0.03 * (TAU * 5.0 * s).cos())
    })?;
    println!(
        "seed: length {:.6} T {:.3} residual {:.2e}",
        seed.length(&system.metric),
        seed.period(),
        space.eta(&seed, k).h1_norm
    );

    let start = std::time::Instant::now();
    let out = flow_to_zero(&space, k, &seed, &FlowParams::default());
    let l = &out.final_loop;
    println!(
        "{} after {} steps and {} Newton steps ({:.2?})",
        out.status.as_str(),
        out.iterations,
        out.newton_steps,
        start.elapsed()
    );
    println!("length {:.9} (expected {:.9})", l.length(&system.metric), 5f64.sqrt());
    println!("T {:.9} (expected {:.9})", l.period(), 5f64.sqrt() / (2.0 * k).sqrt());
    println!("residual {:.2e}, action decreased by {:.6}", out.residual, -out.descent.last().copied().unwrap_or(0.0));
    Ok(())
}
