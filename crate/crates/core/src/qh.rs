//! Loop and star decompositions of the RWG space, their graph Laplacians, and
//! the frequency-scaled loop-star system `T_LS = Υᵀ T Υ`, `Υ = [Λ/√k, Σ√k]`.
//!
//! `Σ` (edges x faces) holds `±1` per face edge, `+1` where the face is the
//! plus triangle of the edge. Loops are divergence-free RWG combinations
//! circulating around a vertex; with edge-length RWG functions the loop
//! coefficient of edge `n` is `±1/l_n`, and `Λ` stores those coefficients.
//! The underlying `±1` vertex-edge incidence is kept as well: the divergence
//! of a loop is formed from it, which makes `D Λ` an exactly empty matrix.
//!
//! One loop and one star per connected component (the highest index) are
//! dropped to make the reduced maps injective.

use faer::Mat;
use num_complex::Complex64;

use crate::dense::{self, CMat};
use crate::em::OperatorSet;
use crate::error::{Error, Result};
use crate::krylov::{estimate_extremal_singular_values, symmetric_adjoint, LinearOperator};
use crate::mesh::TriangleMesh;
use crate::sparse::{CsrMatrix, SparseCholesky};

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Index groups (one per connected component) with a pivot in each.
#[derive(Debug, Clone)]
pub struct ComponentGroups {
    n: usize,
    groups: Vec<Vec<usize>>,
}

impl ComponentGroups {
    pub fn new(n: usize, labels: &[usize], n_groups: usize) -> Self {
        let mut groups = vec![Vec::new(); n_groups];
        for (i, &g) in labels.iter().enumerate() {
            groups[g].push(i);
        }
        Self { n, groups }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Highest index of every group, ascending.
    pub fn pivots(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self.groups.iter().filter_map(|g| g.last().copied()).collect();
        p.sort_unstable();
        p
    }

    /// All indices except the pivots, ascending.
    pub fn kept(&self) -> Vec<usize> {
        let pivots = self.pivots();
        (0..self.n).filter(|i| pivots.binary_search(i).is_err()).collect()
    }

    /// Remove the mean of `x` on every group.
    pub fn project(&self, x: &mut [Complex64]) {
        for g in &self.groups {
            let mean: Complex64 = g.iter().map(|&i| x[i]).sum::<Complex64>() / g.len() as f64;
            for &i in g {
                x[i] -= mean;
            }
        }
    }
}

/// Orthonormal basis of the vectors with zero mean on every group.
///
/// Coordinates live on the non-pivot indices. A Householder reflection per
/// group swaps the pivot axis with the normalized group indicator, so the
/// basis costs `O(n)` to apply and has condition number one.
#[derive(Debug, Clone)]
pub struct ComplementBasis {
    groups: ComponentGroups,
    kept: Vec<usize>,
}

impl ComplementBasis {
    pub fn new(groups: ComponentGroups) -> Self {
        let kept = groups.kept();
        Self { groups, kept }
    }

    pub fn full_len(&self) -> usize {
        self.groups.len()
    }

    pub fn reduced_len(&self) -> usize {
        self.kept.len()
    }

    fn reflect(&self, x: &mut [Complex64]) {
        for g in self.groups.groups() {
            let m = g.len();
            if m < 2 {
                continue;
            }
            let pivot = *g.last().unwrap();
            let root = (m as f64).sqrt();
            // v = 1_g - √m e_pivot, vᵀv = 2√m(√m - 1)
            let vtx: Complex64 = g.iter().map(|&i| x[i]).sum::<Complex64>() - x[pivot] * root;
            let scale = 2.0 / (2.0 * root * (root - 1.0));
            let c = vtx * scale;
            for &i in g {
                x[i] -= c;
            }
            x[pivot] += c * root;
        }
    }

    /// Reduced coordinates to a full vector with zero group means.
    pub fn expand(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(y.len(), self.kept.len());
        let mut x = vec![Complex64::default(); self.full_len()];
        for (&i, &v) in self.kept.iter().zip(y) {
            x[i] = v;
        }
        self.reflect(&mut x);
        x
    }

    /// Transpose of [`expand`](Self::expand).
    pub fn restrict(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.full_len());
        let mut z = x.to_vec();
        self.reflect(&mut z);
        self.kept.iter().map(|&i| z[i]).collect()
    }
}

/// Pseudo-inverse of a graph Laplacian whose null space is spanned by the
/// group indicators: ground one index per group, factor, then remove means.
#[derive(Debug)]
pub struct LaplacianPinv {
    groups: ComponentGroups,
    kept: Vec<usize>,
    chol: SparseCholesky,
}

impl LaplacianPinv {
    pub fn new(laplacian: &CsrMatrix, groups: ComponentGroups) -> Result<Self> {
        let kept = groups.kept();
        let chol = SparseCholesky::new(&laplacian.principal_submatrix(&kept))?;
        Ok(Self { groups, kept, chol })
    }

    pub fn groups(&self) -> &ComponentGroups {
        &self.groups
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut b = x.to_vec();
        self.groups.project(&mut b);
        let br: Vec<Complex64> = self.kept.iter().map(|&i| b[i]).collect();
        let yr = self.chol.solve(&br);
        let mut y = vec![Complex64::default(); x.len()];
        for (&i, v) in self.kept.iter().zip(yr) {
            y[i] = v;
        }
        self.groups.project(&mut y);
        y
    }
}

#[derive(Debug)]
pub struct QuasiHelmholtzMaps {
    lambda: CsrMatrix,
    loop_incidence: CsrMatrix,
    sigma: CsrMatrix,
    lap_lambda: CsrMatrix,
    lap_sigma: CsrMatrix,
    loop_divergence: CsrMatrix,
    star_divergence: CsrMatrix,
    vertex_groups: ComponentGroups,
    face_groups: ComponentGroups,
    sigma_pinv: LaplacianPinv,
    lambda_pinv: LaplacianPinv,
    edge_lengths: Vec<f64>,
}

/// Build loop/star maps and Laplacians for a validated closed mesh.
pub fn build_maps(mesh: &TriangleMesh) -> Result<QuasiHelmholtzMaps> {
    let ne = mesh.num_edges();
    let nv = mesh.num_vertices();
    let nf = mesh.num_triangles();
    let lengths: Vec<f64> = mesh
        .edges()
        .iter()
        .map(|&[a, b]| (mesh.vertices()[a] - mesh.vertices()[b]).norm())
        .collect();
    let mut inc = Vec::with_capacity(2 * ne);
    let mut lam = Vec::with_capacity(2 * ne);
    let mut sig = Vec::with_capacity(2 * ne);
    for (n, &[a, b]) in mesh.edges().iter().enumerate() {
        // The plus triangle traverses a -> b (a < b), so the loop around a
        // carries +1 on this edge and the loop around b carries -1.
        inc.push((n, a, 1.0));
        inc.push((n, b, -1.0));
        lam.push((n, a, 1.0 / lengths[n]));
        lam.push((n, b, -1.0 / lengths[n]));
        let [plus, minus] = mesh.edge_triangles()[n];
        sig.push((n, plus, 1.0));
        sig.push((n, minus, -1.0));
    }
    let loop_incidence = CsrMatrix::from_triplets(ne, nv, inc);
    let lambda = CsrMatrix::from_triplets(ne, nv, lam);
    let sigma = CsrMatrix::from_triplets(ne, nf, sig);
    let lap_sigma = sigma.gram();
    let lap_lambda = lambda.gram();

    // Face divergence of unit-coefficient RWG functions: A⁻¹ Σᵀ, then the
    // edge lengths for the edge-length normalized basis.
    let inv_area_sigma_t = {
        let mut t = Vec::with_capacity(2 * ne);
        for (r, c, v) in sigma.transpose().triplets() {
            t.push((r, c, v / mesh.area(r)));
        }
        CsrMatrix::from_triplets(nf, ne, t)
    };
    let loop_divergence = inv_area_sigma_t.matmul(&loop_incidence);
    if loop_divergence.nnz() != 0 {
        return Err(Error::Topology("loop functions are not divergence-free".into()));
    }
    let divergence = {
        let mut t = inv_area_sigma_t.triplets();
        for e in &mut t {
            e.2 *= lengths[e.1];
        }
        CsrMatrix::from_triplets(nf, ne, t)
    };
    let star_divergence = divergence.matmul(&sigma);

    let face_labels = mesh.triangle_components().to_vec();
    let mut vertex_labels = vec![0; nv];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for &v in tri {
            vertex_labels[v] = face_labels[t];
        }
    }
    let nc = mesh.num_components();
    let face_groups = ComponentGroups::new(nf, &face_labels, nc);
    let vertex_groups = ComponentGroups::new(nv, &vertex_labels, nc);
    let sigma_pinv = LaplacianPinv::new(&lap_sigma, face_groups.clone())?;
    let lambda_pinv = LaplacianPinv::new(&lap_lambda, vertex_groups.clone())?;
    Ok(QuasiHelmholtzMaps {
        lambda,
        loop_incidence,
        sigma,
        lap_lambda,
        lap_sigma,
        loop_divergence,
        star_divergence,
        vertex_groups,
        face_groups,
        sigma_pinv,
        lambda_pinv,
        edge_lengths: lengths,
    })
}

impl QuasiHelmholtzMaps {
    /// Loop functions in RWG coefficients (`E x V`, entries `±1/l`).
    pub fn lambda(&self) -> &CsrMatrix {
        &self.lambda
    }

    /// Signed vertex-edge incidence (`E x V`, entries `±1`).
    pub fn loop_incidence(&self) -> &CsrMatrix {
        &self.loop_incidence
    }

    /// Star functions in RWG coefficients (`E x F`, entries `±1`).
    pub fn sigma(&self) -> &CsrMatrix {
        &self.sigma
    }

    pub fn lap_lambda(&self) -> &CsrMatrix {
        &self.lap_lambda
    }

    pub fn lap_sigma(&self) -> &CsrMatrix {
        &self.lap_sigma
    }

    /// Face divergence of each loop (`F x V`); exactly empty.
    pub fn loop_divergence(&self) -> &CsrMatrix {
        &self.loop_divergence
    }

    /// Face divergence of each star (`F x F`).
    pub fn star_divergence(&self) -> &CsrMatrix {
        &self.star_divergence
    }

    pub fn vertex_groups(&self) -> &ComponentGroups {
        &self.vertex_groups
    }

    pub fn face_groups(&self) -> &ComponentGroups {
        &self.face_groups
    }

    pub fn dropped_loops(&self) -> Vec<usize> {
        self.vertex_groups.pivots()
    }

    pub fn dropped_stars(&self) -> Vec<usize> {
        self.face_groups.pivots()
    }

    pub fn kept_loops(&self) -> Vec<usize> {
        self.vertex_groups.kept()
    }

    pub fn kept_stars(&self) -> Vec<usize> {
        self.face_groups.kept()
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub fn sigma_pinv(&self) -> &LaplacianPinv {
        &self.sigma_pinv
    }

    pub fn lambda_pinv(&self) -> &LaplacianPinv {
        &self.lambda_pinv
    }

    /// `Σ̃ x = Σ (ΣᵀΣ)⁺ x` for a face vector `x`.
    pub fn apply_sigma_tilde(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.sigma.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "face vector of length {} for {} faces",
                x.len(),
                self.sigma.ncols()
            )));
        }
        Ok(self.sigma.mul_vec(&self.sigma_pinv.apply(x)))
    }

    /// `Σ̃ᵀ v = (ΣᵀΣ)⁺ Σᵀ v` for an edge vector `v`.
    pub fn apply_sigma_tilde_transpose(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.sigma_pinv.apply(&self.sigma.mul_transpose_vec(v))
    }
}

/// `T_LS` on reduced loop (first) and star (second) coordinates.
pub struct ScaledSystem<'a> {
    ops: &'a OperatorSet,
    k: f64,
    lambda_r: CsrMatrix,
    sigma_r: CsrMatrix,
    loop_div_r: CsrMatrix,
    star_div_r: CsrMatrix,
}

pub fn make_scaled_system<'a>(ops: &'a OperatorSet, maps: &QuasiHelmholtzMaps) -> Result<ScaledSystem<'a>> {
    if ops.size() != maps.sigma().nrows() {
        return Err(Error::DimensionMismatch(format!(
            "operator of size {} with {} mesh edges",
            ops.size(),
            maps.sigma().nrows()
        )));
    }
    let kl = maps.kept_loops();
    let ks = maps.kept_stars();
    Ok(ScaledSystem {
        ops,
        k: ops.params.wavenumber,
        lambda_r: maps.lambda().select_columns(&kl),
        sigma_r: maps.sigma().select_columns(&ks),
        loop_div_r: maps.loop_divergence().select_columns(&kl),
        star_div_r: maps.star_divergence().select_columns(&ks),
    })
}

fn scale(x: &[Complex64], s: Complex64) -> Vec<Complex64> {
    x.iter().map(|v| v * s).collect()
}

fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sparse_to_complex(a: &CsrMatrix) -> CMat {
    dense::from_real(&a.to_dense())
}

/// Dense `[[XᵀTaX, XᵀTaY], [YᵀTaX, YᵀTaY]]`-style products for two column
/// sets, with the scalar-potential part from the factored form. Returns the
/// four blocks of `Wᵀ T W` for `W = [X cx, Y cy]` in the order
/// `(XX, XY, YY)`.
pub(crate) fn dense_blocks(
    ops: &OperatorSet,
    x: &CMat,
    dx: &CMat,
    cx: f64,
    y: &CMat,
    dy: &CMat,
    cy: f64,
) -> (CMat, CMat, CMat) {
    let k = ops.params.wavenumber;
    let jk = J * k;
    let inv = jk.inv();
    let tax = dense::matmul(&ops.ta, x);
    let tay = dense::matmul(&ops.ta, y);
    let px = dense::matmul(&ops.potential, dx);
    let py = dense::matmul(&ops.potential, dy);
    let xt = dense::transpose(x);
    let yt = dense::transpose(y);
    let dxt = dense::transpose(dx);
    let dyt = dense::transpose(dy);
    let combine = |a: CMat, b: CMat, s: f64| {
        Mat::from_fn(a.nrows(), a.ncols(), |i, j| (jk * a[(i, j)] + inv * b[(i, j)]) * s)
    };
    let xx = combine(dense::matmul(&xt, &tax), dense::matmul(&dxt, &px), cx * cx);
    let xy = combine(dense::matmul(&xt, &tay), dense::matmul(&dxt, &py), cx * cy);
    let yy = combine(dense::matmul(&yt, &tay), dense::matmul(&dyt, &py), cy * cy);
    (xx, xy, yy)
}

pub(crate) fn assemble_blocks(a: &CMat, b: &CMat, d: &CMat) -> CMat {
    let (n1, n2) = (a.nrows(), d.nrows());
    Mat::from_fn(n1 + n2, n1 + n2, |i, j| match (i < n1, j < n1) {
        (true, true) => a[(i, j)],
        (true, false) => b[(i, j - n1)],
        (false, true) => b[(j, i - n1)],
        (false, false) => d[(i - n1, j - n1)],
    })
}

impl ScaledSystem<'_> {
    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn num_loops(&self) -> usize {
        self.lambda_r.ncols()
    }

    pub fn num_stars(&self) -> usize {
        self.sigma_r.ncols()
    }

    /// Right-hand side `Υᵀ e`.
    pub fn rhs(&self, e: &[Complex64]) -> Vec<Complex64> {
        let s = self.k.sqrt();
        let mut out = scale(&self.lambda_r.mul_transpose_vec(e), (1.0 / s).into());
        out.extend(scale(&self.sigma_r.mul_transpose_vec(e), s.into()));
        out
    }

    /// RWG coefficients `j = Υ y`.
    pub fn recover_currents(&self, y: &[Complex64]) -> Vec<Complex64> {
        let s = self.k.sqrt();
        let (yl, ys) = y.split_at(self.num_loops());
        add(
            &scale(&self.lambda_r.mul_vec(yl), (1.0 / s).into()),
            &scale(&self.sigma_r.mul_vec(ys), s.into()),
        )
    }
}

impl LinearOperator for ScaledSystem<'_> {
    fn size(&self) -> usize {
        self.num_loops() + self.num_stars()
    }

    fn apply(&self, y: &[Complex64]) -> Vec<Complex64> {
        let k = self.k;
        let (yl, ys) = y.split_at(self.num_loops());
        let al = self.lambda_r.mul_vec(yl);
        let as_ = self.sigma_r.mul_vec(ys);
        let dl = self.loop_div_r.mul_vec(yl);
        let ds = self.star_div_r.mul_vec(ys);
        // Loop rows: Λᵀ Ta (j aL + jk aS) + (DΛ)ᵀ Φ (dL/(jk²) + dS/(jk))
        // Star rows: Σᵀ Ta (jk aL + jk² aS) + (DΣ)ᵀ Φ (dL/(jk) - j dS)
        let wl = dense::matvec(&self.ops.ta, &add(&scale(&al, J), &scale(&as_, J * k)));
        let ws = scale(&wl, k.into());
        let jk = J * k;
        let pl = dense::matvec(
            &self.ops.potential,
            &add(&scale(&dl, (jk * k).inv()), &scale(&ds, jk.inv())),
        );
        let ps = dense::matvec(&self.ops.potential, &add(&scale(&dl, jk.inv()), &scale(&ds, -J)));
        let mut out = add(&self.lambda_r.mul_transpose_vec(&wl), &self.loop_div_r.mul_transpose_vec(&pl));
        out.extend(add(&self.sigma_r.mul_transpose_vec(&ws), &self.star_div_r.mul_transpose_vec(&ps)));
        out
    }

    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        symmetric_adjoint(self, x)
    }

    fn to_dense(&self) -> CMat {
        let s = self.k.sqrt();
        let (ll, ls, ss) = dense_blocks(
            self.ops,
            &sparse_to_complex(&self.lambda_r),
            &sparse_to_complex(&self.loop_div_r),
            1.0 / s,
            &sparse_to_complex(&self.sigma_r),
            &sparse_to_complex(&self.star_div_r),
            s,
        );
        assemble_blocks(&ll, &ls, &ss)
    }
}

/// Condition number estimate and the method that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition {
    pub value: f64,
    pub method: CondMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondMethod {
    DenseSvd,
    LanczosEstimate,
}

impl CondMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CondMethod::DenseSvd => "dense-svd",
            CondMethod::LanczosEstimate => "lanczos-estimate",
        }
    }
}

/// Largest size handled by the dense SVD path.
pub const DENSE_LIMIT: usize = 6000;

/// Ratio below which a matrix is reported singular.
pub const SINGULAR_RATIO: f64 = 1e-14;

/// `σ_max / σ_min` of a dense matrix.
pub fn condition_number_dense(a: &CMat) -> Result<f64> {
    let s = dense::singular_values(a)?;
    let (smax, smin) = (s[0], *s.last().unwrap());
    if !(smin >= SINGULAR_RATIO * smax) {
        return Err(Error::SingularMatrix { ratio: smin / smax });
    }
    Ok(smax / smin)
}

/// Dense SVD up to [`DENSE_LIMIT`] unless `estimate` is set; Lanczos
/// bidiagonalization otherwise.
pub fn condition_number(op: &(impl LinearOperator + ?Sized), estimate: bool) -> Result<Condition> {
    if !estimate && op.size() <= DENSE_LIMIT {
        return Ok(Condition {
            value: condition_number_dense(&op.to_dense())?,
            method: CondMethod::DenseSvd,
        });
    }
    let (smax, smin) = estimate_extremal_singular_values(op, op.size().min(300))?;
    if !(smin >= SINGULAR_RATIO * smax) {
        return Err(Error::SingularMatrix { ratio: smin / smax });
    }
    Ok(Condition {
        value: smax / smin,
        method: CondMethod::LanczosEstimate,
    })
}
