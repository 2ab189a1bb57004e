//! Acceptance checks 1-7. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use efie_spectral::dense::{self, frobenius, lu_solve, transpose, CMat};
use efie_spectral::em::{assemble_operators, OperatorSet, PhysicsParams, PlaneWave, QuadratureConfig, RwgSpace};
use efie_spectral::experiments::{
    cond_vs_frequency, cond_vs_refinement, frequency_for_ka, rcs_check, scattering_run, solve_formulation,
    to_csv_string, ExperimentConfig, Formulation, Geometry, SolverMethod,
};
use efie_spectral::filters::{lowpass, FilterBank, FilterOptions};
use efie_spectral::krylov::{gmres, norm, SolverOptions};
use efie_spectral::mesh::{generate_icosphere, TriangleMesh};
use efie_spectral::filters::precondition_system;
use efie_spectral::qh::{build_maps, QuasiHelmholtzMaps};
use efie_spectral::sparse::CsrMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn operators(mesh: &TriangleMesh, params: &PhysicsParams) -> OperatorSet {
    let space = RwgSpace::new(mesh);
    assemble_operators(&space, params, &QuadratureConfig::default(), &PlaneWave::default_incidence(1.0)).unwrap()
}

fn asymmetry(m: &CMat) -> f64 {
    let t = transpose(m);
    frobenius(&CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - t[(i, j)])) / frobenius(m)
}

fn criterion_1() -> Check {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for sub in 0..=2 {
        let mesh = generate_icosphere(sub, 1.0).unwrap();
        let (v, e, f) = (mesh.num_vertices() as i64, mesh.num_edges() as i64, mesh.num_triangles() as i64);
        if 2 * e != 3 * f || v - e + f != 2 {
            return Err(format!("icosphere({sub}) counts V={v} E={e} F={f}"));
        }
        let maps = build_maps(&mesh).unwrap();
        let sigma_t = maps.sigma().transpose();
        for c in 0..sigma_t.nrows() {
            let entries: Vec<f64> = sigma_t.row(c).map(|(_, v)| v).collect();
            if entries.len() != 3 || entries.iter().any(|v| v.abs() != 1.0) {
                return Err(format!("icosphere({sub}) Sigma column {c} has entries {entries:?}"));
            }
        }
        if maps.lap_sigma().row_sums().iter().any(|&s| s != 0.0) {
            return Err(format!("icosphere({sub}) LapSigma row sums nonzero"));
        }
        let scale = maps.lap_lambda().norm_inf();
        let rs = maps.lap_lambda().row_sums().iter().fold(0.0f64, |a, s| a.max(s.abs())) / scale;
        if rs > 1e-14 {
            return Err(format!("icosphere({sub}) LapLambda relative row sum {rs:e}"));
        }
        let ops = operators(&mesh, &PhysicsParams::from_wavenumber(1.0).unwrap());
        let lam = dense::from_real(&maps.lambda().to_dense());
        let tl = frobenius(&dense::matmul(&ops.tphi, &lam)) / (frobenius(&ops.tphi) * frobenius(&lam));
        worst.0 = worst.0.max(tl);
        worst.1 = worst.1.max(asymmetry(&ops.ta));
        worst.2 = worst.2.max(asymmetry(&ops.tphi));
    }
    ensure(
        worst.0 < 1e-12 && worst.1 < 1e-10 && worst.2 < 1e-10,
        format!(
            "topology, Sigma columns, Laplacian row sums exact; |Tphi Lambda| rel {:.1e}, asym Ta {:.1e}, Tphi {:.1e}",
            worst.0, worst.1, worst.2
        ),
    )
}

/// Apply a spectral multiplier through a dense eigendecomposition.
fn spectral_oracle(evals: &[f64], evecs: &faer::Mat<f64>, x: &[Complex64], m: impl Fn(f64) -> f64) -> Vec<Complex64> {
    let n = x.len();
    let mut out = vec![Complex64::default(); n];
    for (j, &l) in evals.iter().enumerate() {
        let c: Complex64 = (0..n).map(|i| x[i] * evecs[(i, j)]).sum::<Complex64>() * m(l);
        for i in 0..n {
            out[i] += c * evecs[(i, j)];
        }
    }
    out
}

fn rel_err(a: &[Complex64], b: &[Complex64], scale: f64) -> f64 {
    norm(&a.iter().zip(b).map(|(u, v)| u - v).collect::<Vec<_>>()) / scale
}

fn criterion_2() -> Check {
    let mut laplacians: Vec<(String, CsrMatrix, f64)> = Vec::new();
    for sub in 0..=2 {
        let maps = build_maps(&generate_icosphere(sub, 1.0).unwrap()).unwrap();
        for (name, lap) in [("Sigma", maps.lap_sigma()), ("Lambda", maps.lap_lambda())] {
            if lap.nrows() <= 200 {
                laplacians.push((format!("icosphere({sub}) {name}"), lap.clone(), 1.0));
                let unit = efie_spectral::filters::estimate_lambda_min_nonzero(
                    lap,
                    if name == "Sigma" { maps.sigma_pinv() } else { maps.lambda_pinv() },
                )
                .unwrap();
                laplacians.push((format!("icosphere({sub}) {name} rescaled"), lap.clone(), unit));
            }
        }
    }
    let mut worst_apply = 0.0f64;
    let mut worst_tele = 0.0f64;
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    for (name, lap, unit) in &laplacians {
        let evd = lap.to_dense().self_adjoint_eigen(faer::Side::Lower).unwrap();
        let evals: Vec<f64> = (0..lap.nrows()).map(|i| evd.S()[i]).collect();
        let evecs = evd.U().to_owned();
        for n in [2, 4] {
            let opts = FilterOptions { sharpness: n, ..Default::default() };
            let bank = FilterBank::build(lap, *unit, if *unit == 1.0 { 0 } else { 1 }, &opts).unwrap();
            let x: Vec<Complex64> = (0..lap.nrows()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let xn = norm(&x);
            for i in 0..=bank.top_band() {
                let lp = bank.apply_lowpass(i, &x).unwrap();
                worst_apply = worst_apply.max(rel_err(&lp, &spectral_oracle(&evals, &evecs, &x, |l| bank.lowpass_multiplier(i, l)), xn));
                let bd = bank.apply_band(i, &x).unwrap();
                worst_apply = worst_apply.max(rel_err(&bd, &spectral_oracle(&evals, &evecs, &x, |l| bank.band_multiplier(i, l)), xn));
            }
            let q = bank.apply_q(&x).unwrap();
            worst_apply = worst_apply.max(rel_err(&q, &spectral_oracle(&evals, &evecs, &x, |l| bank.q_multiplier(l)), xn));
            let top = bank.top_band();
            let mut sum = vec![Complex64::default(); x.len()];
            for i in 1..=top {
                for (s, v) in sum.iter_mut().zip(bank.apply_band_response(i, &x).unwrap()) {
                    *s += v;
                }
            }
            let pn = bank.apply_lowpass(top, &x).unwrap();
            let p0 = bank.apply_lowpass(0, &x).unwrap();
            let diff: Vec<Complex64> = pn.iter().zip(&p0).map(|(a, b)| a - b).collect();
            worst_tele = worst_tele.max(rel_err(&sum, &diff, xn));
        }
        let _ = name;
    }
    let mut bound_failures = 0;
    for _ in 0..1000 {
        let l: f64 = rng.gen_range(0.0..1e4);
        let n = [2u32, 4, 6, 8][rng.gen_range(0..4)];
        let mut prev = 0.0;
        for i in 0..16 {
            let p = lowpass(l, 2f64.powi(i), n);
            if !(p > 0.0 && p <= 1.0 && p >= prev) {
                bound_failures += 1;
            }
            prev = p;
        }
    }
    ensure(
        worst_apply < 1e-8 && worst_tele < 1e-9 && bound_failures == 0,
        format!(
            "{} Laplacians <= 200 rows: max oracle error {worst_apply:.1e}, telescoping {worst_tele:.1e}, multiplier bound violations {bound_failures}/1000 samples",
            laplacians.len()
        ),
    )
}

fn conds(records: &[efie_spectral::experiments::Record], f: Formulation) -> Vec<f64> {
    records.iter().filter(|r| r.formulation == Some(f)).filter_map(|r| r.cond).collect()
}

fn spread(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn criterion_3() -> Check {
    let config = ExperimentConfig::new(
        Geometry::icosphere(2),
        vec![1.0, 1e2, 1e4, 1e6],
        vec![Formulation::Raw, Formulation::LoopStar, Formulation::Spectral],
    );
    let records = cond_vs_frequency(&config).map_err(|e| e.to_string())?;
    let raw = conds(&records, Formulation::Raw);
    let ls = conds(&records, Formulation::LoopStar);
    let sp = conds(&records, Formulation::Spectral);
    let below = sp.iter().zip(&ls).all(|(s, l)| s <= l);
    ensure(
        spread(&raw) >= 1e6 && spread(&sp) <= 2.0 && below,
        format!(
            "raw cond varies {:.2e}x, spectral {:.4}x, spectral <= loop-star at all 4 frequencies: {below} (spectral {:.3}..{:.3}, loop-star {:.0})",
            spread(&raw),
            spread(&sp),
            sp.iter().cloned().fold(f64::INFINITY, f64::min),
            sp.iter().cloned().fold(0.0, f64::max),
            ls[0]
        ),
    )
}

fn criterion_4() -> Check {
    let geometries: Vec<Geometry> = (1..=3).map(Geometry::icosphere).collect();
    let config = ExperimentConfig::new(geometries[0].clone(), vec![1.0], vec![Formulation::LoopStar, Formulation::Spectral]);
    let result = cond_vs_refinement(&config, &geometries).map_err(|e| e.to_string())?;
    let ls = result.fits[0];
    let sp = result.fits[1];
    let sp_conds = conds(&result.records, Formulation::Spectral);
    let growth = spread(&sp_conds);
    ensure(
        (2.0..=3.5).contains(&ls.slope) && (-0.3..=0.5).contains(&sp.slope) && growth < 2.0,
        format!(
            "loop-star slope {:.3}, spectral slope {:.3}, spectral max/min over subdivisions 1-3 {:.3} (conds {:?})",
            ls.slope,
            sp.slope,
            growth,
            sp_conds.iter().map(|c| (c * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn criterion_5() -> Check {
    let config = ExperimentConfig::new(Geometry::icosphere(3), vec![1e3], vec![Formulation::LoopStar, Formulation::Spectral]);
    let result = scattering_run(&config).map_err(|e| e.to_string())?;
    let ls = &result.outcomes[0].report;
    let sp = &result.outcomes[1].report;
    ensure(
        ls.converged && sp.converged && (sp.iterations as f64) <= 0.5 * ls.iterations as f64,
        format!(
            "icosphere(3), 1 kHz (ka = {:.2e}), GMRES tol 1e-6: spectral {} vs loop-star {} iterations",
            2.0 * std::f64::consts::PI * 1e3 / efie_spectral::em::SPEED_OF_LIGHT,
            sp.iterations,
            ls.iterations
        ),
    )
}

fn criterion_6() -> Check {
    let mesh = generate_icosphere(1, 1.0).unwrap();
    let maps: QuasiHelmholtzMaps = build_maps(&mesh).unwrap();
    let ops = operators(&mesh, &PhysicsParams::from_wavenumber(1.0).unwrap());
    let sys = precondition_system(&ops, &maps, &FilterOptions::default()).map_err(|e| e.to_string())?;
    let sol = gmres(&sys, &sys.rhs(&ops.e), &SolverOptions { tol: 1e-12, ..Default::default() }).map_err(|e| e.to_string())?;
    let j = sys.recover_currents(&sol.x);
    let direct = lu_solve(&ops.system_matrix(), &ops.e).map_err(|e| e.to_string())?;
    let err = rel_err(&j, &direct, norm(&direct));
    let via_lib = solve_formulation(
        Formulation::Spectral,
        &ops,
        &maps,
        &FilterOptions::default(),
        SolverMethod::Gmres,
        &SolverOptions { tol: 1e-12, ..Default::default() },
    )
    .map_err(|e| e.to_string())?;
    let err_lib = rel_err(&via_lib.currents, &direct, norm(&direct));

    let config = ExperimentConfig::new(Geometry::icosphere(3), vec![frequency_for_ka(1.0, 1.0)], vec![Formulation::Spectral]);
    let rcs = rcs_check(&config, 1.0, 37).map_err(|e| e.to_string())?;
    ensure(
        err < 1e-8 && err_lib < 1e-8 && rcs.relative_l2 < 0.05,
        format!(
            "icosphere(1) ka=1 currents vs dense LU: {err:.1e}; icosphere(3) ka=1 RCS vs Mie relative L2 {:.4}",
            rcs.relative_l2
        ),
    )
}

fn criterion_7() -> Check {
    let run_lib = || -> Result<String, String> {
        let mut config = ExperimentConfig::new(
            Geometry::icosphere(1),
            vec![1.0, 1e6],
            vec![Formulation::Raw, Formulation::LoopStar, Formulation::Spectral],
        );
        let mut records = cond_vs_frequency(&config).map_err(|e| e.to_string())?;
        config.frequencies = vec![1e3];
        records.extend(scattering_run(&config).map_err(|e| e.to_string())?.records);
        to_csv_string(&records).map_err(|e| e.to_string())
    };
    let a = run_lib()?;
    let b = run_lib()?;
    let cli = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_efie-spectral"))
            .args(["run", "cond-freq", "--geometry", "icosphere:1", "--freqs", "1,1000000"])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
        Ok(out.stdout)
    };
    let c = cli()?;
    let d = cli()?;
    ensure(
        a == b && c == d && !a.is_empty(),
        format!("library CSV ({} bytes) and CLI CSV ({} bytes) identical across two runs", a.len(), c.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("structural identities", criterion_1),
        ("filter correctness", criterion_2),
        ("low-frequency stability", criterion_3),
        ("h-refinement stability", criterion_4),
        ("iteration reduction", criterion_5),
        ("solution correctness", criterion_6),
        ("determinism", criterion_7),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS criterion {id} ({name}, {secs:.1} s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}, {secs:.1} s): {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
