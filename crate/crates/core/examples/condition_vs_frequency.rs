//! Condition number of the raw, loop-star and spectral systems across
//! frequency on an icosphere, as CSV.
//!
//! `cargo run --release --example condition_vs_frequency -- [subdivisions]`

use efie_spectral::experiments::{cond_vs_frequency, to_csv_string, ExperimentConfig, Formulation, Geometry};

fn main() -> efie_spectral::Result<()> {
    let sub: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let config = ExperimentConfig::new(
        Geometry::icosphere(sub),
        vec![1.0, 1e2, 1e4, 1e6],
        vec![Formulation::Raw, Formulation::LoopStar, Formulation::Spectral],
    );
    print!("{}", to_csv_string(&cond_vs_frequency(&config)?)?);
    Ok(())
}
