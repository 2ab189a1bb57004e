//! Assemble the EFIE blocks on an icosphere and report timing and symmetry.
//!
//! `cargo run --release --example assemble_operators -- [subdivisions] [wavenumber]`

use std::time::Instant;

use efie_spectral::em::{assemble_operators, PhysicsParams, PlaneWave, QuadratureConfig, RwgSpace};
use efie_spectral::mesh::generate_icosphere;

fn main() -> efie_spectral::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let sub: u32 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let k: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let mesh = generate_icosphere(sub, 1.0)?;
    let space = RwgSpace::new(&mesh);
    let params = PhysicsParams::from_wavenumber(k)?;
    let start = Instant::now();
    let ops = assemble_operators(&space, &params, &QuadratureConfig::default(), &PlaneWave::default_incidence(1.0))?;
    println!(
        "icosphere({sub}): {} unknowns, {} triangles, assembled in {:.2} s",
        ops.size(),
        mesh.num_triangles(),
        start.elapsed().as_secs_f64()
    );
    println!("Ta[0,0] = {:.6e}", ops.ta[(0, 0)]);
    println!("Tphi[0,0] = {:.6e}", ops.tphi[(0, 0)]);
    println!("e[0] = {:.6e}", ops.e[0]);
    Ok(())
}
