//! Solve with the spectral preconditioner and compare the currents with a
//! dense direct solve of the RWG system.
//!
//! `cargo run --release --example preconditioned_solve -- [subdivisions] [ka]`

use efie_spectral::dense::lu_solve;
use efie_spectral::em::{assemble_operators, PhysicsParams, PlaneWave, QuadratureConfig, RwgSpace};
use efie_spectral::filters::{precondition_system, FilterOptions};
use efie_spectral::krylov::{gmres, norm, SolverOptions};
use efie_spectral::mesh::generate_icosphere;
use efie_spectral::qh::{build_maps, condition_number};

fn main() -> efie_spectral::Result<()> {
    let mut args = std::env::args().skip(1);
    let sub: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let ka: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let mesh = generate_icosphere(sub, 1.0)?;
    let space = RwgSpace::new(&mesh);
    let maps = build_maps(&mesh)?;
    let ops = assemble_operators(&space, &PhysicsParams::from_wavenumber(ka)?, &QuadratureConfig::default(), &PlaneWave::default_incidence(1.0))?;
    let sys = precondition_system(&ops, &maps, &FilterOptions::default())?;
    println!("{} stars + {} loops, cond {:.4}", sys.num_stars(), sys.num_loops(), condition_number(&sys, false)?.value);
    let sol = gmres(&sys, &sys.rhs(&ops.e), &SolverOptions { tol: 1e-12, ..Default::default() })?;
    let j = sys.recover_currents(&sol.x);
    let direct = lu_solve(&ops.system_matrix(), &ops.e)?;
    let diff: Vec<_> = j.iter().zip(&direct).map(|(a, b)| a - b).collect();
    println!("{} GMRES iterations, ||j - j_direct|| / ||j_direct|| = {:e}", sol.report.iterations, norm(&diff) / norm(&direct));
    Ok(())
}
