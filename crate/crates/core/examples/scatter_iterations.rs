//! GMRES iteration counts of loop-star and spectral formulations for a
//! low-frequency scattering problem, on an icosphere or a mesh file.
//!
//! `cargo run --release --example scatter_iterations -- [geometry] [freq_hz]`
//!
//! `geometry` is `icosphere:<subdivisions>` or a path such as
//! `crates/core/data/aircraft_like.off`.

use efie_spectral::experiments::{scattering_run, to_csv_string, ExperimentConfig, Formulation};

fn main() -> efie_spectral::Result<()> {
    let mut args = std::env::args().skip(1);
    let geometry = args.next().unwrap_or_else(|| "icosphere:2".into()).parse()?;
    let freq: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1e3);
    let config = ExperimentConfig::new(geometry, vec![freq], vec![Formulation::LoopStar, Formulation::Spectral]);
    let result = scattering_run(&config)?;
    print!("{}", to_csv_string(&result.records)?);
    Ok(())
}
