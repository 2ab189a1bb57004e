//! Condition number of loop-star and spectral systems under icosphere
//! refinement at 1 Hz, with log-log slopes against 1/h.
//!
//! `cargo run --release --example condition_vs_refinement -- [max_subdivisions]`

use efie_spectral::experiments::{cond_vs_refinement, to_csv_string, ExperimentConfig, Formulation, Geometry};

fn main() -> efie_spectral::Result<()> {
    let max: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let geometries: Vec<Geometry> = (1..=max).map(Geometry::icosphere).collect();
    let config = ExperimentConfig::new(geometries[0].clone(), vec![1.0], vec![Formulation::LoopStar, Formulation::Spectral]);
    let result = cond_vs_refinement(&config, &geometries)?;
    print!("{}", to_csv_string(&result.records)?);
    for fit in &result.fits {
        eprintln!("{}: slope {:.3}, growth {:.3}", fit.formulation, fit.slope, fit.growth);
    }
    Ok(())
}
