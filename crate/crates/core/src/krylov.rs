//! Krylov solvers and singular-value estimation for complex operators.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dense::CMat;
use crate::error::{Error, Result};

/// A square complex linear operator.
pub trait LinearOperator: Sync {
    fn size(&self) -> usize;

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;

    /// Conjugate-transpose product `Aᴴ x`.
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64>;

    /// Dense matrix, one column per unit vector.
    fn to_dense(&self) -> CMat {
        let n = self.size();
        let cols: Vec<Vec<Complex64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![Complex64::default(); n];
                e[j] = Complex64::new(1.0, 0.0);
                self.apply(&e)
            })
            .collect();
        CMat::from_fn(n, n, |i, j| cols[j][i])
    }
}

/// `Aᴴ x` for a complex-symmetric `A`, as `conj(A conj(x))`.
pub fn symmetric_adjoint(op: &(impl LinearOperator + ?Sized), x: &[Complex64]) -> Vec<Complex64> {
    let xc: Vec<Complex64> = x.iter().map(|z| z.conj()).collect();
    op.apply(&xc).into_iter().map(|z| z.conj()).collect()
}

/// A dense matrix as an operator.
pub struct DenseOperator<'a>(pub &'a CMat);

impl LinearOperator for DenseOperator<'_> {
    fn size(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        crate::dense::matvec(self.0, x)
    }

    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let a = self.0;
        (0..a.ncols())
            .map(|j| (0..a.nrows()).map(|i| a[(i, j)].conj() * x[i]).sum())
            .collect()
    }

    fn to_dense(&self) -> CMat {
        self.0.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final relative residual `‖b - A x‖ / ‖b‖`.
    pub residual: f64,
    pub history: Vec<f64>,
    /// Operator applications, adjoint applications included.
    pub matvecs: usize,
    pub converged: bool,
    pub walltime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<Complex64>,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
    /// GMRES restart length; `None` runs full GMRES.
    pub restart: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iterations: 1000,
            restart: None,
        }
    }
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product `xᴴ y`.
pub fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn residual_norm(op: &(impl LinearOperator + ?Sized), x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = op.apply(x);
    norm(&b.iter().zip(&ax).map(|(u, v)| u - v).collect::<Vec<_>>())
}

fn finish(x: Vec<Complex64>, mut report: SolveReport, tol: f64, start: Instant) -> Result<Solution> {
    report.walltime_s = start.elapsed().as_secs_f64();
    report.converged = report.residual <= tol;
    let sol = Solution { x, report };
    if sol.report.converged {
        Ok(sol)
    } else {
        Err(Error::MaxIterationsExceeded(Box::new(sol)))
    }
}

/// GMRES with modified Gram-Schmidt and Givens rotations, zero initial guess.
///
/// Stops when the relative residual falls below `opts.tol`. The reported
/// residual is recomputed from the final iterate.
pub fn gmres(op: &(impl LinearOperator + ?Sized), b: &[Complex64], opts: &SolverOptions) -> Result<Solution> {
    let n = op.size();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!("rhs of length {} for operator of size {n}", b.len())));
    }
    let start = Instant::now();
    let bnorm = norm(b);
    let mut x = vec![Complex64::default(); n];
    let mut matvecs = 0;
    let mut history = vec![1.0];
    if bnorm == 0.0 {
        return Ok(Solution {
            x,
            report: SolveReport {
                iterations: 0,
                residual: 0.0,
                history,
                matvecs: 0,
                converged: true,
                walltime_s: start.elapsed().as_secs_f64(),
            },
        });
    }
    let restart = opts.restart.unwrap_or(opts.max_iterations).max(1).min(n.max(1));
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut rnorm = bnorm;
    while iterations < opts.max_iterations && rnorm / bnorm > opts.tol {
        let mut v: Vec<Vec<Complex64>> = vec![r.iter().map(|z| z / rnorm).collect()];
        let mut h: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<(f64, Complex64)> = Vec::new();
        let mut g = vec![Complex64::new(rnorm, 0.0)];
        let mut m = 0;
        while m < restart && iterations < opts.max_iterations {
            let mut w = op.apply(&v[m]);
            matvecs += 1;
            let mut col = vec![Complex64::default(); m + 2];
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(vi, &w);
                col[i] = hij;
                axpy(-hij, vi, &mut w);
            }
            let wn = norm(&w);
            col[m + 1] = Complex64::new(wn, 0.0);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let t = c * col[i] + s * col[i + 1];
                col[i + 1] = -s.conj() * col[i] + c * col[i + 1];
                col[i] = t;
            }
            let (a, bb) = (col[m], col[m + 1]);
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if denom == 0.0 {
                (1.0, Complex64::default())
            } else if a.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                let c = a.norm() / denom;
                (c, (a / a.norm()) * bb.conj() / denom)
            };
            col[m] = c * a + s * bb;
            col[m + 1] = Complex64::default();
            cs.push((c, s));
            let gm = g[m];
            g.push(-s.conj() * gm);
            g[m] = c * gm;
            h.push(col);
            iterations += 1;
            m += 1;
            let est = g[m].norm() / bnorm;
            history.push(est);
            if est <= opts.tol || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|z| z / wn).collect());
        }
        // Back substitution on the triangular factor.
        let mut y = vec![Complex64::default(); m];
        for i in (0..m).rev() {
            let mut s = g[i];
            for j in (i + 1)..m {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &v[j], &mut x);
        }
        let ax = op.apply(&x);
        matvecs += 1;
        r = b.iter().zip(&ax).map(|(u, w)| u - w).collect();
        rnorm = norm(&r);
        if m == 0 {
            break;
        }
    }
    let residual = rnorm / bnorm;
    if let Some(last) = history.last_mut() {
        *last = residual;
    }
    finish(
        x,
        SolveReport {
            iterations,
            residual,
            history,
            matvecs,
            converged: false,
            walltime_s: 0.0,
        },
        opts.tol,
        start,
    )
}

/// Conjugate gradient on the normal equations `Aᴴ A x = Aᴴ b`.
///
/// Convergence is measured on the true relative residual `‖b - Ax‖/‖b‖`.
pub fn cgnr(op: &(impl LinearOperator + ?Sized), b: &[Complex64], opts: &SolverOptions) -> Result<Solution> {
    let n = op.size();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!("rhs of length {} for operator of size {n}", b.len())));
    }
    let start = Instant::now();
    let bnorm = norm(b);
    let mut x = vec![Complex64::default(); n];
    let mut matvecs = 0;
    let mut history = vec![1.0];
    if bnorm == 0.0 {
        return Ok(Solution {
            x,
            report: SolveReport {
                iterations: 0,
                residual: 0.0,
                history,
                matvecs: 0,
                converged: true,
                walltime_s: start.elapsed().as_secs_f64(),
            },
        });
    }
    let mut r = b.to_vec();
    let mut z = op.apply_adjoint(&r);
    matvecs += 1;
    let mut p = z.clone();
    let mut zz = dot(&z, &z).re;
    let mut iterations = 0;
    let mut res = 1.0;
    while iterations < opts.max_iterations && res > opts.tol {
        let w = op.apply(&p);
        let ww = dot(&w, &w).re;
        if ww == 0.0 {
            break;
        }
        let alpha = zz / ww;
        axpy(alpha.into(), &p, &mut x);
        axpy((-alpha).into(), &w, &mut r);
        z = op.apply_adjoint(&r);
        matvecs += 2;
        let zz_new = dot(&z, &z).re;
        let beta = zz_new / zz;
        zz = zz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + *pi * beta;
        }
        iterations += 1;
        res = norm(&r) / bnorm;
        history.push(res);
    }
    let residual = residual_norm(op, &x, b) / bnorm;
    matvecs += 1;
    if let Some(last) = history.last_mut() {
        *last = residual;
    }
    finish(
        x,
        SolveReport {
            iterations,
            residual,
            history,
            matvecs,
            converged: false,
            walltime_s: 0.0,
        },
        opts.tol,
        start,
    )
}

/// Preconditioned conjugate gradient for a real symmetric positive
/// (semi-)definite operator acting on complex vectors.
///
/// `inv_diag` is an optional Jacobi preconditioner. `project` is applied to
/// the right-hand side and every search direction, which restricts the
/// iteration to a complement of a known null space.
pub fn conjugate_gradient(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    inv_diag: Option<&[f64]>,
    project: Option<&dyn Fn(&mut [Complex64])>,
    tol: f64,
    max_iterations: usize,
) -> Result<(Vec<Complex64>, SolveReport)> {
    let start = Instant::now();
    let n = b.len();
    let mut r = b.to_vec();
    if let Some(p) = project {
        p(&mut r);
    }
    let bnorm = norm(&r);
    let mut x = vec![Complex64::default(); n];
    let mut history = vec![1.0];
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                residual: 0.0,
                history,
                matvecs: 0,
                converged: true,
                walltime_s: start.elapsed().as_secs_f64(),
            },
        ));
    }
    let precond = |r: &[Complex64]| -> Vec<Complex64> {
        let mut z: Vec<Complex64> = match inv_diag {
            Some(d) => r.iter().zip(d).map(|(a, b)| a * b).collect(),
            None => r.to_vec(),
        };
        if let Some(p) = project {
            p(&mut z);
        }
        z
    };
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut res = 1.0;
    let mut iterations = 0;
    while res > tol {
        if iterations >= max_iterations {
            return Err(Error::Convergence {
                what: "conjugate gradient",
                iterations,
                residual: res,
            });
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap.norm() == 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        iterations += 1;
        res = norm(&r) / bnorm;
        history.push(res);
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + *pi * beta;
        }
    }
    Ok((
        x,
        SolveReport {
            iterations,
            residual: res,
            history,
            matvecs: iterations,
            converged: true,
            walltime_s: start.elapsed().as_secs_f64(),
        },
    ))
}

/// Extremal singular value estimates from `steps` of Golub-Kahan-Lanczos
/// bidiagonalization with full reorthogonalization.
///
/// The largest estimate converges quickly from below; the smallest is an
/// upper bound on the true smallest singular value that tightens with more
/// steps. Returns `(sigma_max, sigma_min)`.
pub fn estimate_extremal_singular_values(op: &(impl LinearOperator + ?Sized), steps: usize) -> Result<(f64, f64)> {
    let n = op.size();
    let steps = steps.min(n).max(1);
    let mut us: Vec<Vec<Complex64>> = Vec::new();
    let mut vs: Vec<Vec<Complex64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.5 * ((i as f64) * 0.7).sin(), 0.0))
        .collect();
    let vn = norm(&v);
    v.iter_mut().for_each(|z| *z /= vn);
    let mut beta_prev = 0.0;
    for step in 0..steps {
        let mut u = op.apply(&v);
        if let Some(up) = us.last() {
            axpy((-beta_prev).into(), up, &mut u);
        }
        for q in &us {
            let c = dot(q, &u);
            axpy(-c, q, &mut u);
        }
        let alpha = norm(&u);
        if alpha == 0.0 {
            break;
        }
        u.iter_mut().for_each(|z| *z /= alpha);
        alphas.push(alpha);
        vs.push(v.clone());
        us.push(u.clone());
        if step + 1 == steps {
            break;
        }
        let mut w = op.apply_adjoint(&u);
        axpy((-alpha).into(), &v, &mut w);
        for q in &vs {
            let c = dot(q, &w);
            axpy(-c, q, &mut w);
        }
        let beta = norm(&w);
        if beta <= 1e-14 * alpha {
            break;
        }
        w.iter_mut().for_each(|z| *z /= beta);
        betas.push(beta);
        beta_prev = beta;
        v = w;
    }
    let k = alphas.len();
    if k == 0 {
        return Err(Error::SingularMatrix { ratio: 0.0 });
    }
    let b = CMat::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i].into()
        } else if j == i + 1 && i < betas.len() {
            betas[i].into()
        } else {
            Complex64::default()
        }
    });
    let s = crate::dense::singular_values(&b)?;
    Ok((s[0], *s.last().unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> CMat {
        CMat::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(2.0 + i as f64 * 0.1, 0.3)
            } else {
                Complex64::new(0.1 / (1.0 + (i as f64 - j as f64).abs()), 0.05 * ((i + j) as f64).sin())
            }
        })
    }

    #[test]
    fn gmres_and_cgnr_solve_dense_system() {
        let a = test_matrix(30);
        let op = DenseOperator(&a);
        let b: Vec<Complex64> = (0..30).map(|i| Complex64::new(1.0, i as f64 * 0.01)).collect();
        let opts = SolverOptions {
            tol: 1e-10,
            max_iterations: 200,
            restart: None,
        };
        let direct = crate::dense::lu_solve(&a, &b).unwrap();
        for sol in [gmres(&op, &b, &opts).unwrap(), cgnr(&op, &b, &opts).unwrap()] {
            assert!(sol.report.residual <= 1e-10);
            let err: f64 = norm(&sol.x.iter().zip(&direct).map(|(u, v)| u - v).collect::<Vec<_>>());
            assert!(err < 1e-8 * norm(&direct));
        }
        let restarted = gmres(&op, &b, &SolverOptions { restart: Some(5), ..opts }).unwrap();
        assert!(restarted.report.residual <= 1e-10);
    }

    #[test]
    fn gmres_reports_max_iterations() {
        let a = test_matrix(30);
        let b = vec![Complex64::new(1.0, 0.0); 30];
        let opts = SolverOptions {
            tol: 1e-14,
            max_iterations: 2,
            restart: None,
        };
        match gmres(&DenseOperator(&a), &b, &opts) {
            Err(Error::MaxIterationsExceeded(sol)) => {
                assert_eq!(sol.report.iterations, 2);
                assert!(sol.report.residual > 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identity_converges_in_one_iteration() {
        let a = crate::dense::identity(10);
        let b = vec![Complex64::new(0.3, -1.0); 10];
        let sol = gmres(&DenseOperator(&a), &b, &SolverOptions::default()).unwrap();
        assert_eq!(sol.report.iterations, 1);
    }

    #[test]
    fn lanczos_bounds_extreme_singular_values() {
        let a = test_matrix(40);
        let s = crate::dense::singular_values(&a).unwrap();
        let (smax, smin) = estimate_extremal_singular_values(&DenseOperator(&a), 40).unwrap();
        assert!((smax - s[0]).abs() < 1e-8 * s[0]);
        assert!((smin - s[39]).abs() < 1e-6 * s[0]);
    }

    #[test]
    fn cg_solves_spd_system() {
        let n = 20;
        let apply = |x: &[Complex64]| -> Vec<Complex64> {
            (0..n)
                .map(|i| {
                    let mut v = x[i] * 3.0;
                    if i > 0 {
                        v -= x[i - 1];
                    }
                    if i + 1 < n {
                        v -= x[i + 1];
                    }
                    v
                })
                .collect()
        };
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let (x, rep) = conjugate_gradient(apply, &b, Some(&vec![1.0 / 3.0; n]), None, 1e-12, 100).unwrap();
        assert!(rep.residual <= 1e-12);
        let r = apply(&x);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).norm() < 1e-10);
        }
    }
}
