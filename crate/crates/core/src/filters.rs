//! Dyadic spectral filters on graph Laplacians and the filtered
//! quasi-Helmholtz preconditioned system.
//!
//! For a Laplacian `Δ` with eigenvalue unit `u` (so `Δ_s = Δ/u`), the
//! low-pass filter of band `i` has multiplier `p_i(λ) = 1/(1 + (λ_s/2^i)^n)`.
//! Band filters are `W_0 = P_0` and `W_i = P_i − P_{i−1}`, and the combined
//! filter is `Q = Σ_i W_i/√σ_i` with per-band normalizers `σ_i`.
//!
//! Low-pass filters are applied by solving with the sparse SPD matrix
//! `I + (Δ_s/2^i)^n`, either by sparse Cholesky or by Jacobi-preconditioned
//! conjugate gradient.

use num_complex::Complex64;

use crate::dense::{self, CMat};
use crate::em::OperatorSet;
use crate::error::{Error, Result};
use crate::krylov::{conjugate_gradient, estimate_extremal_singular_values, symmetric_adjoint, LinearOperator};
use crate::qh::{assemble_blocks, dense_blocks, ComplementBasis, LaplacianPinv, QuasiHelmholtzMaps};
use crate::sparse::{CsrMatrix, SparseCholesky};

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Linear solver used for `I + (Δ_s/2^i)^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerSolver {
    #[default]
    Cholesky,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOptions {
    /// Filter sharpness `n`, an even integer in `2..=8`.
    pub sharpness: u32,
    /// Relative tolerance of the conjugate-gradient backend.
    pub tol: f64,
    /// Fixed highest band index instead of the one derived from `λ_max`.
    pub bands_override: Option<usize>,
    pub solver: InnerSolver,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            sharpness: 2,
            tol: 1e-10,
            bands_override: None,
            solver: InnerSolver::Cholesky,
        }
    }
}

impl FilterOptions {
    pub fn validate(&self) -> Result<()> {
        if self.sharpness < 2 || self.sharpness > 8 || self.sharpness % 2 != 0 {
            return Err(Error::Config(format!(
                "filter sharpness must be an even integer in 2..=8, got {}",
                self.sharpness
            )));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Config(format!("filter tolerance must lie in (0, 1), got {}", self.tol)));
        }
        Ok(())
    }
}

/// Largest eigenvalue of a symmetric nonnegative matrix by power iteration.
///
/// Starts from the normalized all-ones vector, or from the first canonical
/// vector when the all-ones vector is annihilated.
pub fn estimate_lambda_max(lap: &CsrMatrix) -> Result<f64> {
    const MAX_ITERATIONS: usize = 10_000;
    let n = lap.nrows();
    if n == 0 {
        return Err(Error::Config("empty matrix".into()));
    }
    let scale = lap.norm_inf();
    if scale == 0.0 {
        return Err(Error::Config("matrix has no positive eigenvalue".into()));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = lap.mul_vec(&x);
    if l2(&y) <= 1e-12 * scale {
        x = vec![0.0; n];
        x[0] = 1.0;
        y = lap.mul_vec(&x);
    }
    let mut lambda = dot(&x, &y);
    for _ in 0..MAX_ITERATIONS {
        let ny = l2(&y);
        if ny == 0.0 {
            return Err(Error::Config("matrix has no positive eigenvalue".into()));
        }
        x = y.iter().map(|v| v / ny).collect();
        y = lap.mul_vec(&x);
        let next = dot(&x, &y);
        if (next - lambda).abs() <= 1e-9 * next {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::Convergence {
        what: "power iteration",
        iterations: MAX_ITERATIONS,
        residual: f64::NAN,
    })
}

/// Smallest nonzero eigenvalue of a Laplacian by inverse iteration with its
/// pseudo-inverse.
pub fn estimate_lambda_min_nonzero(lap: &CsrMatrix, pinv: &LaplacianPinv) -> Result<f64> {
    const MAX_ITERATIONS: usize = 1000;
    let n = lap.nrows();
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.5 * ((i as f64) * 0.7).sin() + (i as f64) / n as f64, 0.0))
        .collect();
    pinv.groups().project(&mut x);
    let mut lambda = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let nx = crate::krylov::norm(&x);
        if nx == 0.0 {
            return Err(Error::Config("Laplacian has no nonzero eigenvalue".into()));
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let next = crate::krylov::dot(&x, &lap.mul_vec(&x)).re;
        if (next - lambda).abs() <= 1e-10 * next {
            return Ok(next);
        }
        lambda = next;
        x = pinv.apply(&x);
    }
    Err(Error::Convergence {
        what: "inverse iteration",
        iterations: MAX_ITERATIONS,
        residual: f64::NAN,
    })
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `Aⁿ` by repeated sparse products.
pub fn sparse_power(a: &CsrMatrix, n: u32) -> CsrMatrix {
    let mut p = a.clone();
    for _ in 1..n {
        p = p.matmul(a);
    }
    p
}

/// Low-pass multiplier `1/(1 + (λ/c)^n)`.
pub fn lowpass(lambda: f64, cutoff: f64, n: u32) -> f64 {
    1.0 / (1.0 + (lambda / cutoff).powi(n as i32))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    /// Cutoff in the units of the input Laplacian.
    pub cutoff: f64,
    pub normalizer: f64,
}

#[derive(Debug)]
enum Inner {
    Cholesky(Vec<SparseCholesky>),
    Cg { power: CsrMatrix, tol: f64 },
}

/// Dyadic filter bank on one Laplacian.
#[derive(Debug)]
pub struct FilterBank {
    unit: f64,
    n: u32,
    lambda_max: f64,
    bands: Vec<Band>,
    inner: Inner,
}

impl FilterBank {
    /// Bank on the Laplacian as given: unit eigenvalue scale, highest band
    /// `⌈log₂ λ_max⌉` and normalizers `σ_0 = 1`, `σ_i = 2^i`.
    pub fn new(laplacian: &CsrMatrix, opts: &FilterOptions) -> Result<Self> {
        Self::build(laplacian, 1.0, 0, opts)
    }

    /// Bank on `Δ/unit` with `extra_bands` bands above `⌈log₂ λ_max(Δ/unit)⌉`.
    pub fn build(laplacian: &CsrMatrix, unit: f64, extra_bands: usize, opts: &FilterOptions) -> Result<Self> {
        opts.validate()?;
        if !(unit > 0.0 && unit.is_finite()) {
            return Err(Error::Config(format!("eigenvalue unit must be positive, got {unit}")));
        }
        let lambda_max = estimate_lambda_max(laplacian)? / unit;
        let top = match opts.bands_override {
            Some(b) => b,
            None => lambda_max.log2().ceil().max(0.0) as usize + extra_bands,
        };
        let bands = (0..=top)
            .map(|i| Band {
                cutoff: unit * 2f64.powi(i as i32),
                normalizer: 2f64.powi(i as i32),
            })
            .collect();
        let power = sparse_power(&laplacian.scale(1.0 / unit), opts.sharpness);
        let inner = match opts.solver {
            InnerSolver::Cholesky => {
                let eye = CsrMatrix::identity(laplacian.nrows());
                let mut factors = Vec::with_capacity(top + 1);
                for i in 0..=top {
                    let c = 2f64.powi(-((i as u32 * opts.sharpness) as i32));
                    factors.push(SparseCholesky::new(&eye.linear_combination(1.0, &power, c))?);
                }
                Inner::Cholesky(factors)
            }
            InnerSolver::ConjugateGradient => Inner::Cg { power, tol: opts.tol },
        };
        Ok(Self {
            unit,
            n: opts.sharpness,
            lambda_max,
            bands,
            inner,
        })
    }

    pub fn size(&self) -> usize {
        match &self.inner {
            Inner::Cholesky(f) => f[0].size(),
            Inner::Cg { power, .. } => power.nrows(),
        }
    }

    pub fn sharpness(&self) -> u32 {
        self.n
    }

    /// Eigenvalue unit the cutoffs are expressed in.
    pub fn unit(&self) -> f64 {
        self.unit
    }

    /// Estimated largest eigenvalue of `Δ/unit`.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Highest band index `N`; bands run over `0..=N`.
    pub fn top_band(&self) -> usize {
        self.bands.len() - 1
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn set_normalizers(&mut self, normalizers: &[f64]) -> Result<()> {
        if normalizers.len() != self.bands.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} normalizers for {} bands",
                normalizers.len(),
                self.bands.len()
            )));
        }
        if let Some(s) = normalizers.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::Config(format!("band normalizer must be positive, got {s}")));
        }
        for (b, &s) in self.bands.iter_mut().zip(normalizers) {
            b.normalizer = s;
        }
        Ok(())
    }

    fn check_band(&self, i: usize) -> Result<()> {
        if i > self.top_band() {
            return Err(Error::Config(format!("band {i} out of range 0..={}", self.top_band())));
        }
        Ok(())
    }

    /// Multiplier of `P_i` at eigenvalue `λ` of the input Laplacian.
    pub fn lowpass_multiplier(&self, i: usize, lambda: f64) -> f64 {
        lowpass(lambda, self.bands[i].cutoff, self.n)
    }

    /// Multiplier of `W_i` (without normalizer).
    pub fn band_response(&self, i: usize, lambda: f64) -> f64 {
        let p = self.lowpass_multiplier(i, lambda);
        if i == 0 {
            p
        } else {
            p - self.lowpass_multiplier(i - 1, lambda)
        }
    }

    /// Multiplier of `W_i/√σ_i`.
    pub fn band_multiplier(&self, i: usize, lambda: f64) -> f64 {
        self.band_response(i, lambda) / self.bands[i].normalizer.sqrt()
    }

    /// Multiplier of `Q`.
    pub fn q_multiplier(&self, lambda: f64) -> f64 {
        (0..self.bands.len()).map(|i| self.band_multiplier(i, lambda)).sum()
    }

    /// Peak of `W_i` over eigenvalues of `Δ/unit` in `[1, λ_max]`.
    pub fn peak_band_response(&self, i: usize) -> f64 {
        const SAMPLES: usize = 4096;
        let hi = self.lambda_max.max(1.0).ln();
        (0..=SAMPLES)
            .map(|s| {
                let l = (hi * s as f64 / SAMPLES as f64).exp();
                self.band_response(i, l * self.unit)
            })
            .fold(0.0, f64::max)
    }

    /// `P_i x = (I + (Δ_s/2^i)^n)⁻¹ x`.
    pub fn apply_lowpass(&self, i: usize, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_band(i)?;
        if x.len() != self.size() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for a filter of size {}",
                x.len(),
                self.size()
            )));
        }
        match &self.inner {
            Inner::Cholesky(f) => Ok(f[i].solve(x)),
            Inner::Cg { power, tol } => {
                let c = 2f64.powi(-((i as u32 * self.n) as i32));
                let inv_diag: Vec<f64> = power.diagonal().iter().map(|d| 1.0 / (1.0 + c * d)).collect();
                let apply = |v: &[Complex64]| -> Vec<Complex64> {
                    let pv = power.mul_vec(v);
                    v.iter().zip(pv).map(|(a, b)| a + b * c).collect()
                };
                let max_it = 10 * x.len().max(10);
                conjugate_gradient(apply, x, Some(&inv_diag), None, *tol, max_it).map(|(y, _)| y)
            }
        }
    }

    /// `W_i x` without normalizer.
    pub fn apply_band_response(&self, i: usize, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let p = self.apply_lowpass(i, x)?;
        if i == 0 {
            return Ok(p);
        }
        let q = self.apply_lowpass(i - 1, x)?;
        Ok(p.iter().zip(q).map(|(a, b)| a - b).collect())
    }

    /// `W_i x / √σ_i`.
    pub fn apply_band(&self, i: usize, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let s = 1.0 / self.bands[i.min(self.top_band())].normalizer.sqrt();
        Ok(self.apply_band_response(i, x)?.into_iter().map(|v| v * s).collect())
    }

    /// `Q x = Σ_i W_i x / √σ_i`, summed in band order.
    pub fn apply_q(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut out = vec![Complex64::default(); x.len()];
        let mut prev: Option<Vec<Complex64>> = None;
        for (i, band) in self.bands.iter().enumerate() {
            let p = self.apply_lowpass(i, x)?;
            let s = 1.0 / band.normalizer.sqrt();
            match &prev {
                None => out.iter_mut().zip(&p).for_each(|(o, a)| *o += a * s),
                Some(q) => out.iter_mut().zip(p.iter().zip(q)).for_each(|(o, (a, b))| *o += (a - b) * s),
            }
            prev = Some(p);
        }
        Ok(out)
    }
}

/// A complex-symmetric operator given by a closure.
struct SymmetricFn<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[Complex64]) -> Vec<Complex64> + Sync> LinearOperator for SymmetricFn<F> {
    fn size(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (self.f)(x)
    }

    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        symmetric_adjoint(self, x)
    }
}

/// Lanczos steps used to measure band norms.
const NORM_STEPS: usize = 30;

/// Sets `σ_i = ‖W_i B W_i‖₂ / ω_i²`, with `ω_i` the peak band response.
fn measure_normalizers(bank: &mut FilterBank, block: &(dyn Fn(&[Complex64]) -> Vec<Complex64> + Sync)) -> Result<()> {
    let mut sigmas = Vec::with_capacity(bank.bands().len());
    for i in 0..=bank.top_band() {
        let b: &FilterBank = bank;
        let op = SymmetricFn {
            n: b.size(),
            f: |x: &[Complex64]| {
                let w = b.apply_band_response(i, x).expect("band index in range");
                b.apply_band_response(i, &block(&w)).expect("band index in range")
            },
        };
        let (smax, _) = estimate_extremal_singular_values(&op, NORM_STEPS)?;
        let peak = b.peak_band_response(i);
        let s = smax / (peak * peak);
        sigmas.push(if s > 0.0 && s.is_finite() { s } else { 1.0 });
    }
    bank.set_normalizers(&sigmas)
}

/// Spectrally filtered quasi-Helmholtz system, stars first.
///
/// With `Y_S = Σ̃ Q_Σ Z_Σ` and `Y_L = Λ Q_Λ Z_Λ`, where `Z` is an orthonormal
/// basis of the complement of per-component constants, the operator is
/// `Yᵀ T Y` for `Y = [√k Y_S, Y_L/√k]`.
pub struct PreconditionedSystem<'a> {
    ops: &'a OperatorSet,
    maps: &'a QuasiHelmholtzMaps,
    k: f64,
    star_bank: FilterBank,
    loop_bank: FilterBank,
    star_basis: ComplementBasis,
    loop_basis: ComplementBasis,
}

/// Build the preconditioned system.
///
/// Both filter banks act on the full Laplacians in units of their smallest
/// nonzero eigenvalue, with one band above `⌈log₂ λ_max⌉` and normalizers
/// measured from the diagonal blocks of the system at the operators'
/// wavenumber.
pub fn precondition_system<'a>(
    ops: &'a OperatorSet,
    maps: &'a QuasiHelmholtzMaps,
    opts: &FilterOptions,
) -> Result<PreconditionedSystem<'a>> {
    if ops.size() != maps.sigma().nrows() {
        return Err(Error::DimensionMismatch(format!(
            "operator of size {} with {} mesh edges",
            ops.size(),
            maps.sigma().nrows()
        )));
    }
    let k = ops.params.wavenumber;
    let unit_s = estimate_lambda_min_nonzero(maps.lap_sigma(), maps.sigma_pinv())?;
    let unit_l = estimate_lambda_min_nonzero(maps.lap_lambda(), maps.lambda_pinv())?;
    let mut star_bank = FilterBank::build(maps.lap_sigma(), unit_s, 1, opts)?;
    let mut loop_bank = FilterBank::build(maps.lap_lambda(), unit_l, 1, opts)?;

    let star_block = |x: &[Complex64]| -> Vec<Complex64> {
        let u = maps.sigma_pinv().apply(x);
        let a = maps.sigma().mul_vec(&u);
        let d = maps.star_divergence().mul_vec(&u);
        let ta = dense::matvec(&ops.ta, &a);
        let pd = dense::matvec(&ops.potential, &d);
        let sum: Vec<Complex64> = maps
            .sigma()
            .mul_transpose_vec(&ta)
            .iter()
            .zip(maps.star_divergence().mul_transpose_vec(&pd))
            .map(|(t, p)| J * k * k * t - J * p)
            .collect();
        maps.sigma_pinv().apply(&sum)
    };
    measure_normalizers(&mut star_bank, &star_block)?;
    let loop_block = |x: &[Complex64]| -> Vec<Complex64> {
        let ta = dense::matvec(&ops.ta, &maps.lambda().mul_vec(x));
        maps.lambda().mul_transpose_vec(&ta).into_iter().map(|v| J * v).collect()
    };
    measure_normalizers(&mut loop_bank, &loop_block)?;

    Ok(PreconditionedSystem {
        ops,
        maps,
        k,
        star_bank,
        loop_bank,
        star_basis: ComplementBasis::new(maps.face_groups().clone()),
        loop_basis: ComplementBasis::new(maps.vertex_groups().clone()),
    })
}

impl PreconditionedSystem<'_> {
    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn num_stars(&self) -> usize {
        self.star_basis.reduced_len()
    }

    pub fn num_loops(&self) -> usize {
        self.loop_basis.reduced_len()
    }

    pub fn star_bank(&self) -> &FilterBank {
        &self.star_bank
    }

    pub fn loop_bank(&self) -> &FilterBank {
        &self.loop_bank
    }

    /// Face coefficients `u = Δ⁺ Q_Σ Z_Σ y` with `Y_S y = Σ u`.
    fn star_faces(&self, y: &[Complex64]) -> Vec<Complex64> {
        let q = self.star_bank.apply_q(&self.star_basis.expand(y)).expect("sizes checked at build");
        self.maps.sigma_pinv().apply(&q)
    }

    fn loop_vertices(&self, y: &[Complex64]) -> Vec<Complex64> {
        self.loop_bank.apply_q(&self.loop_basis.expand(y)).expect("sizes checked at build")
    }

    /// `Z_Σᵀ Q_Σ Δ⁺ f` for a face vector `f`.
    fn star_restrict(&self, f: &[Complex64]) -> Vec<Complex64> {
        let p = self.maps.sigma_pinv().apply(f);
        self.star_basis.restrict(&self.star_bank.apply_q(&p).expect("sizes checked at build"))
    }

    fn loop_restrict(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.loop_basis.restrict(&self.loop_bank.apply_q(v).expect("sizes checked at build"))
    }

    /// Right-hand side `Yᵀ e`.
    pub fn rhs(&self, e: &[Complex64]) -> Vec<Complex64> {
        let s = self.k.sqrt();
        let mut out: Vec<Complex64> = self
            .star_restrict(&self.maps.sigma().mul_transpose_vec(e))
            .into_iter()
            .map(|v| v * s)
            .collect();
        out.extend(self.loop_restrict(&self.maps.lambda().mul_transpose_vec(e)).into_iter().map(|v| v / s));
        out
    }

    /// RWG coefficients `j = Y y`.
    pub fn recover_currents(&self, y: &[Complex64]) -> Vec<Complex64> {
        let s = self.k.sqrt();
        let (ys, yl) = y.split_at(self.num_stars());
        let a = self.maps.sigma().mul_vec(&self.star_faces(ys));
        let b = self.maps.lambda().mul_vec(&self.loop_vertices(yl));
        a.iter().zip(b).map(|(u, v)| u * s + v / s).collect()
    }

    fn dense_map(&self, n: usize, f: impl Fn(&[Complex64]) -> Vec<Complex64> + Sync, rows: usize) -> CMat {
        use rayon::prelude::*;
        let cols: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![Complex64::default(); n];
                e[j] = 1.0.into();
                f(&e)
            })
            .collect();
        CMat::from_fn(rows, n, |i, j| cols[j][i])
    }
}

impl LinearOperator for PreconditionedSystem<'_> {
    fn size(&self) -> usize {
        self.num_stars() + self.num_loops()
    }

    fn apply(&self, y: &[Complex64]) -> Vec<Complex64> {
        let k = self.k;
        let (ys, yl) = y.split_at(self.num_stars());
        let u = self.star_faces(ys);
        let a_s = self.maps.sigma().mul_vec(&u);
        let a_l = self.maps.lambda().mul_vec(&self.loop_vertices(yl));
        // Loop functions are exactly divergence-free, so only the star part
        // reaches the scalar potential.
        let d = self.maps.star_divergence().mul_vec(&u);
        let arg: Vec<Complex64> = a_s.iter().zip(&a_l).map(|(s, l)| J * k * s + J * l).collect();
        let w = dense::matvec(&self.ops.ta, &arg);
        let pd = dense::matvec(&self.ops.potential, &d);
        let star_faces: Vec<Complex64> = self
            .maps
            .sigma()
            .mul_transpose_vec(&w)
            .iter()
            .zip(self.maps.star_divergence().mul_transpose_vec(&pd))
            .map(|(t, p)| t * k - J * p)
            .collect();
        let mut out = self.star_restrict(&star_faces);
        out.extend(self.loop_restrict(&self.maps.lambda().mul_transpose_vec(&w)));
        out
    }

    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        symmetric_adjoint(self, x)
    }

    fn to_dense(&self) -> CMat {
        let (ns, nl) = (self.num_stars(), self.num_loops());
        let ne = self.maps.sigma().nrows();
        let nf = self.maps.sigma().ncols();
        let faces = self.dense_map(ns, |e| self.star_faces(e), nf);
        let to_edges = |m: &CMat, a: &CsrMatrix| {
            let cols: Vec<Vec<Complex64>> = (0..m.ncols())
                .map(|j| a.mul_vec(&(0..m.nrows()).map(|i| m[(i, j)]).collect::<Vec<_>>()))
                .collect();
            CMat::from_fn(a.nrows(), m.ncols(), |i, j| cols[j][i])
        };
        let ys = to_edges(&faces, self.maps.sigma());
        let ds = to_edges(&faces, self.maps.star_divergence());
        let yl = to_edges(&self.dense_map(nl, |e| self.loop_vertices(e), self.maps.lambda().ncols()), self.maps.lambda());
        let dl = CMat::zeros(nf, nl);
        debug_assert_eq!(ys.nrows(), ne);
        let s = self.k.sqrt();
        let (ss, sl, ll) = dense_blocks(self.ops, &ys, &ds, s, &yl, &dl, 1.0 / s);
        assemble_blocks(&ss, &sl, &ll)
    }
}
