//! Spectral filter banks and the filtered system, checked against dense
//! eigendecompositions and direct solves.

use efie_spectral::dense::{frobenius, lu_solve, transpose, CMat};
use efie_spectral::em::{assemble_operators, PhysicsParams, PlaneWave, QuadratureConfig, RwgSpace};
use efie_spectral::filters::{
    estimate_lambda_max, precondition_system, FilterBank, FilterOptions, InnerSolver,
};
use efie_spectral::krylov::{gmres, LinearOperator, SolverOptions};
use efie_spectral::mesh::generate_icosphere;
use efie_spectral::qh::{build_maps, condition_number, make_scaled_system};
use efie_spectral::sparse::CsrMatrix;
use faer::Mat;
use num_complex::Complex64;
use proptest::prelude::*;

fn vec_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn lap_sigma(subdivisions: u32) -> CsrMatrix {
    let mesh = generate_icosphere(subdivisions, 1.0).unwrap();
    build_maps(&mesh).unwrap().lap_sigma().clone()
}

/// `U f(Λ) Uᵀ x` from a dense symmetric eigendecomposition.
struct SpectralOracle {
    u: Mat<f64>,
    eig: Vec<f64>,
}

impl SpectralOracle {
    fn new(lap: &CsrMatrix) -> Self {
        let d = lap.to_dense();
        let e = d.self_adjoint_eigen(faer::Side::Lower).unwrap();
        let n = d.nrows();
        let s = e.S().column_vector();
        Self {
            u: Mat::from_fn(n, n, |i, j| e.U()[(i, j)]),
            eig: (0..n).map(|i| s[i]).collect(),
        }
    }

    fn apply(&self, f: impl Fn(f64) -> f64, x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        let coeff: Vec<Complex64> = (0..n)
            .map(|j| (0..n).map(|i| x[i] * self.u[(i, j)]).sum::<Complex64>() * f(self.eig[j].max(0.0)))
            .collect();
        (0..n).map(|i| (0..n).map(|j| coeff[j] * self.u[(i, j)]).sum()).collect()
    }
}

fn sample(n: usize, seed: u64) -> Vec<Complex64> {
    (0..n)
        .map(|i| {
            let t = (i as u64 * 2654435761 + seed * 97) as f64;
            Complex64::new((t * 1e-3).sin(), (t * 7e-4).cos())
        })
        .collect()
}

fn opts(sharpness: u32, solver: InnerSolver) -> FilterOptions {
    FilterOptions {
        sharpness,
        solver,
        ..Default::default()
    }
}

#[test]
fn lambda_max_bounds_and_dense_agreement() {
    let lam = estimate_lambda_max(&lap_sigma(0)).unwrap();
    assert!(lam <= 6.0 + 1e-12);
    let mesh = generate_icosphere(2, 1.0).unwrap();
    let maps = build_maps(&mesh).unwrap();
    let lap = maps.lap_lambda();
    let oracle = efie_spectral::dense::symmetric_eigenvalues(&lap.to_dense()).unwrap();
    let top = *oracle.last().unwrap();
    let est = estimate_lambda_max(lap).unwrap();
    assert!((est / top - 1.0).abs() < 1e-3, "{est} vs {top}");
}

#[test]
fn filters_match_dense_spectral_evaluation() {
    for s in 0..=1 {
        let lap = lap_sigma(s);
        let oracle = SpectralOracle::new(&lap);
        for n in [2, 4] {
            for solver in [InnerSolver::Cholesky, InnerSolver::ConjugateGradient] {
                let bank = FilterBank::new(&lap, &opts(n, solver)).unwrap();
                let x = sample(lap.nrows(), u64::from(n));
                for i in 0..=bank.top_band() {
                    let got = bank.apply_lowpass(i, &x).unwrap();
                    let want = oracle.apply(|l| bank.lowpass_multiplier(i, l), &x);
                    assert!(vec_rel(&got, &want) < 1e-8, "lowpass {i}, n={n}, {solver:?}");
                    let got = bank.apply_band(i, &x).unwrap();
                    let want = oracle.apply(|l| bank.band_multiplier(i, l), &x);
                    assert!(vec_rel(&got, &want) < 1e-8, "band {i}, n={n}, {solver:?}");
                }
                let got = bank.apply_q(&x).unwrap();
                let want = oracle.apply(|l| bank.q_multiplier(l), &x);
                assert!(vec_rel(&got, &want) < 1e-8, "Q, n={n}, {solver:?}");
            }
        }
    }
}

#[test]
fn default_bank_uses_dyadic_bands() {
    let lap = lap_sigma(1);
    let bank = FilterBank::new(&lap, &FilterOptions::default()).unwrap();
    let lmax = estimate_lambda_max(&lap).unwrap();
    assert_eq!(bank.top_band(), lmax.log2().ceil() as usize);
    for (i, b) in bank.bands().iter().enumerate() {
        assert_eq!(b.cutoff, 2f64.powi(i as i32));
        assert_eq!(b.normalizer, 2f64.powi(i as i32));
    }
}

#[test]
fn scalar_band_multiplier_matches_hand_arithmetic() {
    let lap = CsrMatrix::from_triplets(1, 1, vec![(0, 0, 2.0)]);
    let bank = FilterBank::new(&lap, &opts(2, InnerSolver::Cholesky)).unwrap();
    assert_eq!(bank.top_band(), 1);
    assert!((bank.lowpass_multiplier(1, 2.0) - 0.5).abs() < 1e-15);
    let want = (0.5 - 0.2) / 2f64.sqrt();
    assert!((bank.band_multiplier(1, 2.0) - want).abs() < 1e-12);
    let y = bank.apply_band(1, &[Complex64::from(1.0)]).unwrap();
    assert!((y[0].re - want).abs() < 1e-12);
}

#[test]
fn constant_vector_passes_only_band_zero() {
    let lap = lap_sigma(1);
    let bank = FilterBank::new(&lap, &FilterOptions::default()).unwrap();
    let ones = vec![Complex64::from(1.0); lap.nrows()];
    for i in 0..=bank.top_band() {
        assert!(vec_rel(&bank.apply_lowpass(i, &ones).unwrap(), &ones) < 1e-12);
        if i > 0 {
            assert!(bank.apply_band(i, &ones).unwrap().iter().all(|v| v.norm() < 1e-12));
        }
    }
    let p0 = bank.apply_lowpass(0, &ones).unwrap();
    assert!(vec_rel(&bank.apply_q(&ones).unwrap(), &p0) < 1e-12);
}

#[test]
fn invalid_sharpness_is_rejected() {
    let lap = lap_sigma(0);
    for n in [0, 1, 3, 10] {
        assert!(FilterBank::new(&lap, &opts(n, InnerSolver::Cholesky)).is_err());
    }
}

fn ka_one_system(subdivisions: u32) -> (efie_spectral::mesh::TriangleMesh, efie_spectral::em::OperatorSet) {
    let mesh = generate_icosphere(subdivisions, 1.0).unwrap();
    let ops = {
        let space = RwgSpace::new(&mesh);
        let params = PhysicsParams::from_wavenumber(1.0).unwrap();
        assemble_operators(&space, &params, &QuadratureConfig::default(), &PlaneWave::default_incidence(1.0)).unwrap()
    };
    (mesh, ops)
}

#[test]
fn filtered_system_is_complex_symmetric() {
    let (mesh, ops) = ka_one_system(0);
    let maps = build_maps(&mesh).unwrap();
    let sys = precondition_system(&ops, &maps, &FilterOptions::default()).unwrap();
    let m = sys.to_dense();
    let t = transpose(&m);
    let d = CMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - t[(i, j)]);
    assert!(frobenius(&d) < 1e-10 * frobenius(&m));
    let n = sys.size();
    let applied = CMat::from_fn(n, n, |i, j| {
        let mut e = vec![Complex64::default(); n];
        e[j] = 1.0.into();
        sys.apply(&e)[i]
    });
    let diff = CMat::from_fn(n, n, |i, j| applied[(i, j)] - m[(i, j)]);
    assert!(frobenius(&diff) < 1e-12 * frobenius(&m));
}

#[test]
fn filtered_solve_recovers_direct_currents() {
    let (mesh, ops) = ka_one_system(1);
    let maps = build_maps(&mesh).unwrap();
    let direct = lu_solve(&ops.system_matrix(), &ops.e).unwrap();
    for solver in [InnerSolver::Cholesky, InnerSolver::ConjugateGradient] {
        let filter = FilterOptions {
            solver,
            tol: 1e-13,
            ..Default::default()
        };
        let sys = precondition_system(&ops, &maps, &filter).unwrap();
        let opts = SolverOptions {
            tol: 1e-12,
            max_iterations: 500,
            restart: None,
        };
        let sol = gmres(&sys, &sys.rhs(&ops.e), &opts).unwrap();
        let j = sys.recover_currents(&sol.x);
        assert!(vec_rel(&j, &direct) < 1e-8, "{solver:?}: {}", vec_rel(&j, &direct));
    }
}

#[test]
fn filtered_conditioning_is_refinement_stable() {
    let mut spectral = Vec::new();
    let mut loop_star = Vec::new();
    for s in 1..=2 {
        let mesh = generate_icosphere(s, 1.0).unwrap();
        let space = RwgSpace::new(&mesh);
        let params = PhysicsParams::free_space(1.0).unwrap();
        let ops =
            assemble_operators(&space, &params, &QuadratureConfig::default(), &PlaneWave::default_incidence(1.0))
                .unwrap();
        let maps = build_maps(&mesh).unwrap();
        let sys = precondition_system(&ops, &maps, &FilterOptions::default()).unwrap();
        spectral.push(condition_number(&sys, false).unwrap().value);
        loop_star.push(condition_number(&make_scaled_system(&ops, &maps).unwrap(), false).unwrap().value);
    }
    let rs = spectral[1] / spectral[0];
    let rl = loop_star[1] / loop_star[0];
    assert!(rs.max(1.0 / rs) < 2.0, "spectral {spectral:?}");
    assert!(rl > 4.0, "loop-star {loop_star:?}");
}

fn bank_strategy() -> impl Strategy<Value = (u32, u32, u64)> {
    (0u32..=2, prop::sample::select(vec![2u32, 4, 6]), 0u64..1000)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn multipliers_are_bounded_and_monotone(lambda in 0.0f64..1e4, n in prop::sample::select(vec![2u32, 4, 6, 8])) {
        let lap = lap_sigma(1);
        let bank = FilterBank::new(&lap, &opts(n, InnerSolver::Cholesky)).unwrap();
        for i in 0..=bank.top_band() {
            let p = bank.lowpass_multiplier(i, lambda);
            prop_assert!(p > 0.0 && p <= 1.0);
            if i > 0 {
                prop_assert!(p >= bank.lowpass_multiplier(i - 1, lambda));
            }
            prop_assert!(bank.band_multiplier(i, lambda) >= 0.0);
        }
    }

    #[test]
    fn bands_telescope((s, n, seed) in bank_strategy()) {
        let lap = lap_sigma(s);
        let bank = FilterBank::new(&lap, &opts(n, InnerSolver::Cholesky)).unwrap();
        let x = sample(lap.nrows(), seed);
        let top = bank.top_band();
        let mut sum = vec![Complex64::default(); x.len()];
        for i in 1..=top {
            for (a, b) in sum.iter_mut().zip(bank.apply_band_response(i, &x).unwrap()) {
                *a += b;
            }
        }
        let pn = bank.apply_lowpass(top, &x).unwrap();
        let p0 = bank.apply_lowpass(0, &x).unwrap();
        let want: Vec<Complex64> = pn.iter().zip(&p0).map(|(a, b)| a - b).collect();
        for (g, w) in sum.iter().zip(&want) {
            prop_assert!((g - w).norm() < 1e-9 * (1.0 + w.norm()));
        }
    }

    #[test]
    fn lowpass_commutes_with_laplacian((s, n, seed) in bank_strategy(), cg in any::<bool>()) {
        let lap = lap_sigma(s);
        let solver = if cg { InnerSolver::ConjugateGradient } else { InnerSolver::Cholesky };
        let bank = FilterBank::new(&lap, &opts(n, solver)).unwrap();
        let x = sample(lap.nrows(), seed);
        let xn: f64 = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let lnorm = estimate_lambda_max(&lap).unwrap();
        for i in 0..=bank.top_band() {
            let a = bank.apply_lowpass(i, &lap.mul_vec(&x)).unwrap();
            let b = lap.mul_vec(&bank.apply_lowpass(i, &x).unwrap());
            let err: f64 = a.iter().zip(&b).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-8 * lnorm * xn);
        }
    }

    #[test]
    fn q_is_linear((s, n, seed) in bank_strategy(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let lap = lap_sigma(s);
        let bank = FilterBank::new(&lap, &opts(n, InnerSolver::Cholesky)).unwrap();
        let x = sample(lap.nrows(), seed);
        let y = sample(lap.nrows(), seed + 1);
        let comb: Vec<Complex64> = x.iter().zip(&y).map(|(a, b)| a * alpha + b * beta).collect();
        let qx = bank.apply_q(&x).unwrap();
        let qy = bank.apply_q(&y).unwrap();
        let got = bank.apply_q(&comb).unwrap();
        for ((g, a), b) in got.iter().zip(&qx).zip(&qy) {
            let w = a * alpha + b * beta;
            prop_assert!((g - w).norm() < 1e-12 * (1.0 + w.norm()));
        }
    }
}
