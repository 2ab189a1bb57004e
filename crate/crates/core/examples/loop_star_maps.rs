//! Build loop and star maps on an icosphere and check their identities.
//!
//! `cargo run --release --example loop_star_maps -- [subdivisions]`

use efie_spectral::dense;
use efie_spectral::em::{assemble_operators, PhysicsParams, PlaneWave, QuadratureConfig, RwgSpace};
use efie_spectral::mesh::generate_icosphere;
use efie_spectral::qh::build_maps;
use num_complex::Complex64;

fn main() -> efie_spectral::Result<()> {
    let sub: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let mesh = generate_icosphere(sub, 1.0)?;
    let maps = build_maps(&mesh)?;
    println!("Lambda {}x{}, Sigma {}x{}", maps.lambda().nrows(), maps.lambda().ncols(), maps.sigma().nrows(), maps.sigma().ncols());
    println!("dropped loop {:?}, dropped star {:?}", maps.dropped_loops(), maps.dropped_stars());
    let max_row = |v: Vec<f64>| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    println!("max |row sum| LapSigma {:e}, LapLambda {:e}", max_row(maps.lap_sigma().row_sums()), max_row(maps.lap_lambda().row_sums()));
    println!("loop divergence nonzeros: {}", maps.loop_divergence().nnz());

    let space = RwgSpace::new(&mesh);
    let ops = assemble_operators(&space, &PhysicsParams::from_wavenumber(1.0)?, &QuadratureConfig::default(), &PlaneWave::default_incidence(1.0))?;
    let lam = dense::from_real(&maps.lambda().to_dense());
    let prod = dense::matmul(&ops.tphi, &lam);
    println!(
        "||Tphi Lambda|| / (||Tphi|| ||Lambda||) = {:e}",
        dense::frobenius(&prod) / (dense::frobenius(&ops.tphi) * dense::frobenius(&lam))
    );
    let x: Vec<Complex64> = (0..mesh.num_triangles()).map(|i| Complex64::new((i as f64).sin(), 0.0)).collect();
    let y = maps.apply_sigma_tilde(&x)?;
    println!("Sigma-tilde applied to a face vector: ||y|| = {:.6}", efie_spectral::krylov::norm(&y));
    Ok(())
}
