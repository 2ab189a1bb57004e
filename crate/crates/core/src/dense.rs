//! Dense complex matrix helpers over `faer`, and the binary matrix container.
//!
//! Container layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  b"EFIEMAT\0"
//! version u32      1
//! rows    u64
//! cols    u64
//! dtype   u32      1 = complex128
//! layout  u32      0 = row-major
//! payload rows*cols (re: f64, im: f64), little-endian
//! ```

use std::io::{Read, Write};
use std::path::Path;

use faer::linalg::solvers::Solve;
use faer::{Accum, Mat, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;

const MAGIC: &[u8; 8] = b"EFIEMAT\0";
const VERSION: u32 = 1;
const DTYPE_C128: u32 = 1;
const ROW_MAJOR: u32 = 0;

pub fn matvec(a: &CMat, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.ncols(), x.len());
    let xm = Mat::from_fn(x.len(), 1, |i, _| x[i]);
    let mut y = Mat::<Complex64>::zeros(a.nrows(), 1);
    faer::linalg::matmul::matmul(&mut y, Accum::Replace, a, &xm, Complex64::new(1.0, 0.0), Par::Seq);
    (0..a.nrows()).map(|i| y[(i, 0)]).collect()
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let mut c = CMat::zeros(a.nrows(), b.ncols());
    faer::linalg::matmul::matmul(&mut c, Accum::Replace, a, b, Complex64::new(1.0, 0.0), Par::rayon(0));
    c
}

/// Plain (unconjugated) transpose.
pub fn transpose(a: &CMat) -> CMat {
    a.transpose().to_owned()
}

pub fn frobenius(a: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn identity(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::default() })
}

pub fn from_real(a: &Mat<f64>) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].into())
}

/// Singular values in nonincreasing order.
pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    a.singular_values().map_err(|e| Error::Linalg(format!("{e:?}")))
}

/// Solve `A x = b` by LU with partial pivoting.
pub fn lu_solve(a: &CMat, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} system with {} right-hand entries",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let lu = a.partial_piv_lu();
    let mut x = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    lu.solve_in_place(&mut x);
    let out: Vec<Complex64> = (0..b.len()).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularMatrix { ratio: 0.0 });
    }
    Ok(out)
}

/// Eigenvalues of a real symmetric matrix, nondecreasing.
pub fn symmetric_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Linalg(format!("{e:?}")))
}

pub fn write_matrix(path: &Path, a: &CMat) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_matrix_to(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix_to(w: &mut impl Write, a: &CMat) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(a.nrows() as u64).to_le_bytes())?;
    w.write_all(&(a.ncols() as u64).to_le_bytes())?;
    w.write_all(&DTYPE_C128.to_le_bytes())?;
    w.write_all(&ROW_MAJOR.to_le_bytes())?;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let z = a[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Write a vector as an `n x 1` matrix.
pub fn write_vector(path: &Path, x: &[Complex64]) -> Result<()> {
    write_matrix(path, &CMat::from_fn(x.len(), 1, |i, _| x[i]))
}

pub fn read_matrix(path: &Path) -> Result<CMat> {
    read_matrix_from(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn read_matrix_from(r: &mut impl Read) -> Result<CMat> {
    let bad = |m: &str| Error::Config(format!("invalid matrix container: {m}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != VERSION {
        return Err(bad("unsupported version"));
    }
    r.read_exact(&mut b8)?;
    let rows = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let cols = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != DTYPE_C128 {
        return Err(bad("unsupported dtype"));
    }
    r.read_exact(&mut b4)?;
    if u32::from_le_bytes(b4) != ROW_MAJOR {
        return Err(bad("unsupported layout"));
    }
    let mut data = vec![0u8; rows * cols * 16];
    r.read_exact(&mut data)?;
    let f = |o: usize| f64::from_le_bytes(data[o..o + 8].try_into().unwrap());
    Ok(CMat::from_fn(rows, cols, |i, j| {
        let o = 16 * (i * cols + j);
        Complex64::new(f(o), f(o + 8))
    }))
}
