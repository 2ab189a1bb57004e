//! Filter bank on a face Laplacian: band layout, multipliers and a
//! comparison with dense eigendecomposition.
//!
//! `cargo run --release --example spectral_filters -- [subdivisions] [sharpness]`

use efie_spectral::filters::{FilterBank, FilterOptions};
use efie_spectral::mesh::generate_icosphere;
use efie_spectral::qh::build_maps;
use num_complex::Complex64;

fn main() -> efie_spectral::Result<()> {
    let mut args = std::env::args().skip(1);
    let sub: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let n: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let maps = build_maps(&generate_icosphere(sub, 1.0)?)?;
    let lap = maps.lap_sigma();
    let bank = FilterBank::new(lap, &FilterOptions { sharpness: n, ..Default::default() })?;
    println!("lambda_max ~ {:.6}, bands 0..={}", bank.lambda_max(), bank.top_band());
    for (i, b) in bank.bands().iter().enumerate() {
        println!("  band {i}: cutoff {:>6} normalizer {:>6}", b.cutoff, b.normalizer);
    }
    for l in [0.0, 0.5, 1.0, 2.0, 4.0, 6.0] {
        println!("  q({l}) = {:.6}", bank.q_multiplier(l));
    }

    let evd = lap.to_dense().self_adjoint_eigen(faer::Side::Lower).map_err(|e| efie_spectral::Error::Linalg(format!("{e:?}")))?;
    let m = lap.nrows();
    let x: Vec<Complex64> = (0..m).map(|i| Complex64::new((0.3 * i as f64).cos(), (0.7 * i as f64).sin())).collect();
    let mut oracle = vec![Complex64::default(); m];
    for j in 0..m {
        let c: Complex64 = (0..m).map(|i| x[i] * evd.U()[(i, j)]).sum::<Complex64>() * bank.q_multiplier(evd.S()[j]);
        for i in 0..m {
            oracle[i] += c * evd.U()[(i, j)];
        }
    }
    let qx = bank.apply_q(&x)?;
    let err: f64 = qx.iter().zip(&oracle).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    println!("||Qx - dense oracle|| / ||x|| = {:e}", err / efie_spectral::krylov::norm(&x));
    Ok(())
}
