//! Bistatic RCS of a meshed sphere against the Mie series.
//!
//! `cargo run --release --example mie_rcs -- [subdivisions] [ka]`

use efie_spectral::experiments::{rcs_check, ExperimentConfig, Formulation, Geometry};

fn main() -> efie_spectral::Result<()> {
    let mut args = std::env::args().skip(1);
    let sub: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let ka: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let config = ExperimentConfig::new(Geometry::icosphere(sub), vec![1.0], vec![Formulation::Spectral]);
    let r = rcs_check(&config, ka, 19)?;
    println!("{:>8} {:>10} {:>12} {:>12}", "cut", "theta_deg", "solver", "mie");
    for (i, ((d, s), m)) in r.directions.iter().zip(&r.solver_rcs).zip(&r.mie_rcs).enumerate() {
        let cut = if i < r.directions.len() / 2 { "E-plane" } else { "H-plane" };
        let theta = d.dot(config.wave.direction).clamp(-1.0, 1.0).acos().to_degrees();
        println!("{cut:>8} {theta:>10.1} {s:>12.6} {m:>12.6}");
    }
    println!("relative L2 error {:.4}, {} GMRES iterations", r.relative_l2, r.outcome.report.iterations);
    Ok(())
}
