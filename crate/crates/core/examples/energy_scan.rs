//! Energy scan below the Taimanov threshold: at every energy collect the
//! relaxed Taimanov seeds and the mountain passes over them, then report the
//! census of distinct closed orbits.

use magneto::config::ExperimentConfig;
use magneto::minimax::energy_scan;
use magneto::taimanov::tau_plus_estimate;

fn main() -> magneto::Result<()> {
    let cfg = ExperimentConfig::builtin("oscillating")?;
    let system = cfg.system()?;
    let tau = tau_plus_estimate(&system, cfg.energy.k_lo, cfg.energy.k_hi, cfg.energy.tol_k, cfg.grids.taimanov_m)?;
    println!("threshold estimate {tau:.6}");

    let start = std::time::Instant::now();
    let out = energy_scan(&system, &cfg.scan_params())?;
    println!("{:>8} {:>2} {:>12} {:>9} {:>10} {:>8}  status", "k", "n", "c", "residual", "T", "winding");
    for r in &out.rows {
        println!(
            "{:8.5} {:2} {:12.8} {:9.2e} {:10.5} {:>8}  {}",
            r.k,
            r.n,
            r.c,
            r.residual,
            r.period,
            format!("{},{}", r.winding_a, r.winding_b),
            r.status
        );
    }
    for (k, ids) in &out.census.by_energy {
        let kinds: Vec<String> = ids.iter().map(|&i| format!("{:?}", out.census.orbits[i].kind)).collect();
        println!("k {k}: {} orbits {kinds:?}", ids.len());
    }
    println!("at most {} distinct orbits at one energy ({:.2?})", out.census.max_distinct(), start.elapsed());
    Ok(())
}
