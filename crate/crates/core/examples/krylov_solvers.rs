//! GMRES and CGNR on a dense complex system, with the Lanczos singular
//! value estimate against a dense SVD.
//!
//! `cargo run --release --example krylov_solvers -- [size]`

use efie_spectral::dense::{singular_values, CMat};
use efie_spectral::krylov::{cgnr, estimate_extremal_singular_values, gmres, DenseOperator, SolverOptions};
use num_complex::Complex64;

fn main() -> efie_spectral::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let a = CMat::from_fn(n, n, |i, j| {
        let d = if i == j { Complex64::new(3.0 + (i as f64 / n as f64), 0.5) } else { Complex64::default() };
        d + Complex64::new(0.3 / (1.0 + (i as f64 - j as f64).powi(2)), 0.1 * ((i * j) as f64).sin() / n as f64)
    });
    let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0, (i as f64).cos())).collect();
    let op = DenseOperator(&a);
    let opts = SolverOptions { tol: 1e-10, ..Default::default() };
    for (name, sol) in [("gmres", gmres(&op, &b, &opts)?), ("cgnr", cgnr(&op, &b, &opts)?)] {
        println!("{name}: {} iterations, {} matvecs, residual {:e}", sol.report.iterations, sol.report.matvecs, sol.report.residual);
    }
    let (smax, smin) = estimate_extremal_singular_values(&op, 60)?;
    let s = singular_values(&a)?;
    println!("Lanczos cond {:.6}, dense cond {:.6}", smax / smin, s[0] / s[n - 1]);
    Ok(())
}
