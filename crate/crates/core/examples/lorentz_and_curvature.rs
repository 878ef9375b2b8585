//! Pointwise geometry on a conformal torus: the Lorentz force is orthogonal
//! to the velocity with length `|f| |v|`, and a closed orbit found by
//! Newton iteration satisfies the curvature law `kappa = -f / sqrt(2k)`.

use std::f64::consts::PI;

use magneto::config::noisy_circle;
use magneto::geometry::{curvature_law_defect, MagneticDensity, MetricField, TorusSystem, TrigPolynomial, Vec2};
use magneto::gradientflow::{refine_zero, NewtonOptions};
use magneto::loopspace::LoopSpace;

fn main() -> magneto::Result<()> {
    let metric = MetricField::conformal(TrigPolynomial::constant(0.0).with_cos(0.1, 1, 0).with_cos(0.05, 1, 1));
    let density = MagneticDensity::trig(TrigPolynomial::constant(4.0 * PI).with_cos(0.4 * PI, 0, 1));
    let system = TorusSystem::new(metric, density)?;

    for (q, v) in [((0.1, 0.7), (0.3, -1.2)), ((0.55, 0.2), (-2.0, 0.4))] {
        let (q, v) = (Vec2::new(q.0, q.1), Vec2::new(v.0, v.1));
        let g = system.metric.tensor(q);
        let y = system.lorentz(q, v)?;
        let inner = (v.transpose() * g * y)[0];
        let ratio =
            (y.transpose() * g * y)[0].sqrt() / ((v.transpose() * g * v)[0].sqrt() * system.density.value(q).abs());
        println!("q {:?}: <v, Y> {inner:.2e}, |Y| / (|f| |v|) {ratio:.12}", (q.x, q.y));
    }

    // Small circles drift across a non-constant field, so the seed is centred
    // on the fixed point of q -> -q, where the drift vanishes by symmetry. The
    // radius is a maximum of the action along the family of circles, so descent
    // would shrink or inflate the loop; Newton converges to the orbit instead.
    let k: f64 = 0.5;
    let space = LoopSpace::new(system.clone(), 64)?;
    let c = Vec2::new(0.5, 0.5);
    let f = system.density.value(c);
    let radius = (2.0 * k).sqrt() / f / system.metric.sqrt_det(c).sqrt();
    let mut seed = noisy_circle(256, c, radius, 0.0, 0)?;
    seed.set_period(2.0 * PI / f);
    let out = refine_zero(&space, k, &seed, &NewtonOptions { tol: 1e-9, ..NewtonOptions::default() });
    let l = &out.loop_;
    let defect = curvature_law_defect(&system, l.vertices(), l.closing(), k)?;
    println!(
        "newton steps {} residual {:.2e} T {:.6} curvature defect {defect:.2e}",
        out.steps,
        out.residual,
        l.period()
    );
    Ok(())
}
