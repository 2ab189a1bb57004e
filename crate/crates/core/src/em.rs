//! RWG discretization and dense Galerkin assembly of the EFIE blocks.
//!
//! Time convention is `exp(-jωt)`, so the Green's function is
//! `exp(jkR) / (4πR)` and the incident plane wave is
//! `E0 p̂ exp(jk d̂·r)`. The discrete system is `T j = e` with
//!
//! ```text
//! T    = jk Ta + (jk)^-1 Tphi
//! Ta   [m, n] = ∫∫ f_m(r) · f_n(r') G(r, r')
//! Tphi [m, n] = ∫∫ ∇·f_m(r) ∇'·f_n(r') G(r, r')
//! e    [m]    = -∫ f_m · E_inc
//! ```
//!
//! and `j = η J` is the surface current scaled by the wave impedance. Testing
//! the rotated operator `n̂ × T` with `n̂ × f_m` gives the same bilinear form,
//! so one tangential Galerkin convention covers both operator and excitation.
//!
//! RWG functions are edge-length normalized, `f_n = ±l_n (r - p±)/(2A±)`,
//! with unit normal component across edge `n` and divergence `±l_n/A±`.
//!
//! `Tphi` is stored both densely and in factored form `Dᵀ Φ D`, where `D` is
//! the sparse triangle-divergence matrix and `Φ[p, q] = ∫_p ∫_q G` is the
//! dense triangle-pair potential matrix.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{CVec3, Vec3};
use crate::mesh::TriangleMesh;
use crate::quadrature::{gauss_legendre, map_rule, static_potentials, QuadPoint, TriangleRule};
use crate::sparse::CsrMatrix;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const EPS0: f64 = 8.854_187_8128e-12;
pub const MU0: f64 = 1.256_637_062_12e-6;

const J: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    pub frequency: f64,
    pub wavenumber: f64,
    pub epsilon: f64,
    pub mu: f64,
}

impl PhysicsParams {
    /// Free-space parameters at `frequency` (Hz).
    pub fn free_space(frequency: f64) -> Result<Self> {
        Self::new(frequency, EPS0, MU0)
    }

    pub fn new(frequency: f64, epsilon: f64, mu: f64) -> Result<Self> {
        let wavenumber = 2.0 * PI * frequency * (epsilon * mu).sqrt();
        if !(wavenumber > 0.0) || !wavenumber.is_finite() {
            return Err(Error::Config(format!(
                "wavenumber must be positive, got {wavenumber} (frequency {frequency} Hz)"
            )));
        }
        Ok(Self {
            frequency,
            wavenumber,
            epsilon,
            mu,
        })
    }

    /// Free-space parameters for a given wavenumber (rad/m).
    pub fn from_wavenumber(k: f64) -> Result<Self> {
        Self::free_space(k / (2.0 * PI * (EPS0 * MU0).sqrt()))
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * self.frequency
    }

    pub fn impedance(&self) -> f64 {
        (self.mu / self.epsilon).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWave {
    pub direction: Vec3,
    pub polarization: Vec3,
    pub amplitude: f64,
}

impl PlaneWave {
    pub fn new(direction: Vec3, polarization: Vec3, amplitude: f64) -> Result<Self> {
        let bad = |m: &str| Err(Error::Config(format!("invalid plane wave: {m}")));
        if ((direction.norm() - 1.0).abs()) > 1e-12 {
            return bad("direction is not a unit vector");
        }
        if ((polarization.norm() - 1.0).abs()) > 1e-12 {
            return bad("polarization is not a unit vector");
        }
        if direction.dot(polarization).abs() > 1e-12 {
            return bad("polarization is not orthogonal to direction");
        }
        Ok(Self {
            direction,
            polarization,
            amplitude,
        })
    }

    /// Travelling along `-z`, polarized along `x`.
    pub fn default_incidence(amplitude: f64) -> Self {
        Self {
            direction: Vec3::new(0.0, 0.0, -1.0),
            polarization: Vec3::new(1.0, 0.0, 0.0),
            amplitude,
        }
    }

    pub fn field(&self, r: Vec3, k: f64) -> CVec3 {
        let phase = Complex64::from_polar(self.amplitude, k * self.direction.dot(r));
        CVec3::new(self.polarization * phase.re, self.polarization * phase.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Rule for regular integrals and for the outer integral of near pairs.
    pub rule: TriangleRule,
    /// Pairs with centroid distance below `near_factor * h` use static-kernel
    /// extraction; pairs sharing a vertex always do.
    pub near_factor: f64,
    /// Gauss-Legendre order per direction for the outer integral of self
    /// pairs.
    pub self_order: usize,
    /// Gauss-Legendre order per direction for the outer integral of distinct
    /// triangles sharing a vertex or an edge.
    pub touch_order: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rule: TriangleRule::P7,
            near_factor: 3.0,
            self_order: 20,
            touch_order: 8,
        }
    }
}

impl QuadratureConfig {
    pub fn with_points(points: usize) -> Result<Self> {
        Ok(Self {
            rule: TriangleRule::from_points(points)?,
            ..Self::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwgDof {
    pub edge: usize,
    pub plus: usize,
    pub minus: usize,
    pub free_plus: usize,
    pub free_minus: usize,
    pub length: f64,
}

/// One RWG function per mesh edge, in mesh edge order.
#[derive(Debug, Clone)]
pub struct RwgSpace<'m> {
    mesh: &'m TriangleMesh,
    dofs: Vec<RwgDof>,
    divergence: CsrMatrix,
}

impl<'m> RwgSpace<'m> {
    pub fn new(mesh: &'m TriangleMesh) -> Self {
        let mut dofs = Vec::with_capacity(mesh.num_edges());
        let mut trips = Vec::with_capacity(2 * mesh.num_edges());
        for (e, &[a, b]) in mesh.edges().iter().enumerate() {
            let [plus, minus] = mesh.edge_triangles()[e];
            let free = |t: usize| {
                *mesh.triangles()[t]
                    .iter()
                    .find(|&&v| v != a && v != b)
                    .expect("triangle has a vertex off its edge")
            };
            dofs.push(RwgDof {
                edge: e,
                plus,
                minus,
                free_plus: free(plus),
                free_minus: free(minus),
                length: (mesh.vertices()[a] - mesh.vertices()[b]).norm(),
            });
            let l = (mesh.vertices()[a] - mesh.vertices()[b]).norm();
            trips.push((plus, e, l / mesh.area(plus)));
            trips.push((minus, e, -l / mesh.area(minus)));
        }
        let divergence = CsrMatrix::from_triplets(mesh.num_triangles(), mesh.num_edges(), trips);
        Self {
            mesh,
            dofs,
            divergence,
        }
    }

    pub fn mesh(&self) -> &'m TriangleMesh {
        self.mesh
    }

    pub fn dofs(&self) -> &[RwgDof] {
        &self.dofs
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Sparse `F x N` matrix of piecewise-constant surface divergences.
    pub fn divergence(&self) -> &CsrMatrix {
        &self.divergence
    }

    /// Value of RWG function `n` at point `r` on triangle `t`.
    pub fn eval(&self, n: usize, t: usize, r: Vec3) -> Vec3 {
        let d = &self.dofs[n];
        let v = self.mesh.vertices();
        if t == d.plus {
            (r - v[d.free_plus]) * (d.length / (2.0 * self.mesh.area(t)))
        } else if t == d.minus {
            (v[d.free_minus] - r) * (d.length / (2.0 * self.mesh.area(t)))
        } else {
            Vec3::ZERO
        }
    }
}

/// Dense EFIE blocks and excitation at one frequency.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub ta: Mat<Complex64>,
    pub tphi: Mat<Complex64>,
    /// Triangle-pair potential matrix `Φ` with `Tphi = Dᵀ Φ D`.
    pub potential: Mat<Complex64>,
    /// Triangle divergence matrix `D` (`F x N`).
    pub divergence: CsrMatrix,
    pub e: Vec<Complex64>,
    pub params: PhysicsParams,
}

impl OperatorSet {
    pub fn size(&self) -> usize {
        self.ta.nrows()
    }

    /// Dense `T = jk Ta + (jk)^-1 Tphi`.
    pub fn system_matrix(&self) -> Mat<Complex64> {
        let jk = J * self.params.wavenumber;
        let inv = jk.inv();
        Mat::from_fn(self.size(), self.size(), |i, j| jk * self.ta[(i, j)] + inv * self.tphi[(i, j)])
    }

    /// `Tphi x` through the factored form.
    pub fn apply_tphi(&self, x: &[Complex64]) -> Vec<Complex64> {
        let dx = self.divergence.mul_vec(x);
        let pdx = crate::dense::matvec(&self.potential, &dx);
        self.divergence.mul_transpose_vec(&pdx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kernel {
    Helmholtz(f64),
    Laplace,
}

/// Pair integrals of the kernel against `1`, `r`, `r'` and `r·r'`, with
/// positions measured from a local origin.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    i0: Complex64,
    ir: [Complex64; 3],
    irp: [Complex64; 3],
    irr: Complex64,
}

impl Moments {
    #[inline]
    fn add(&mut self, g: Complex64, r: Vec3, rp: Vec3) {
        self.i0 += g;
        for d in 0..3 {
            self.ir[d] += g * r[d];
            self.irp[d] += g * rp[d];
        }
        self.irr += g * r.dot(rp);
    }
}

/// Local 3x3 block between the three half-RWG shapes of two triangles, plus
/// the scalar pair potential.
#[derive(Debug, Clone, Copy)]
struct PairBlock {
    q: usize,
    local: [[Complex64; 3]; 3],
    phi: Complex64,
}

struct Assembler<'a> {
    mesh: &'a TriangleMesh,
    kernel: Kernel,
    quad: QuadratureConfig,
    points: Vec<Vec<QuadPoint>>,
    lengths: Vec<f64>,
    self_rule: GradedRule,
    touch_rule: GradedRule,
}

/// Outer tensor rule on the three centroid sub-triangles of a triangle:
/// radial `(t, w)` pairs toward the edges and lateral `(s, w)` pairs along them.
struct GradedRule {
    radial: Vec<(f64, f64)>,
    lateral: Vec<(f64, f64)>,
}

impl GradedRule {
    fn new(order: usize) -> Self {
        let gl = gauss_legendre(order.max(1));
        // t = 1 - (1 - u)^3 toward the edge, s = u^2 / (u^2 + (1 - u)^2) along it.
        let radial = gl
            .iter()
            .map(|&(u, w)| (1.0 - (1.0 - u).powi(3), w * 3.0 * (1.0 - u).powi(2)))
            .collect();
        let lateral = gl
            .iter()
            .map(|&(u, w)| {
                let (a, b) = (u * u, (1.0 - u) * (1.0 - u));
                let ds = 2.0 * u * (1.0 - u) / ((a + b) * (a + b));
                (a / (a + b), w * ds)
            })
            .collect();
        Self { radial, lateral }
    }
}

#[inline]
fn helmholtz_smooth(k: f64, r: f64) -> Complex64 {
    // (exp(jkR) - 1) / (4πR) without cancellation.
    let x = k * r;
    if x < 1e-8 {
        return J * (k / (4.0 * PI));
    }
    let half = (0.5 * x).sin();
    Complex64::new(-2.0 * half * half, x.sin()) / (4.0 * PI * r)
}

#[inline]
fn helmholtz_full(k: f64, r: f64) -> Complex64 {
    Complex64::from_polar(1.0, k * r) / (4.0 * PI * r)
}

impl<'a> Assembler<'a> {
    fn new(mesh: &'a TriangleMesh, kernel: Kernel, quad: QuadratureConfig) -> Self {
        let rule = quad.rule.points();
        let points = (0..mesh.num_triangles())
            .map(|t| map_rule(&rule, &mesh.triangle_vertices(t), mesh.area(t)))
            .collect();
        let lengths = mesh
            .edges()
            .iter()
            .map(|&[a, b]| (mesh.vertices()[a] - mesh.vertices()[b]).norm())
            .collect();
        Self {
            mesh,
            kernel,
            quad,
            points,
            lengths,
            self_rule: GradedRule::new(quad.self_order),
            touch_rule: GradedRule::new(quad.touch_order),
        }
    }

    fn shares_vertex(&self, p: usize, q: usize) -> bool {
        let a = self.mesh.triangles()[p];
        let b = self.mesh.triangles()[q];
        a.iter().any(|v| b.contains(v))
    }

    fn is_near(&self, p: usize, q: usize) -> bool {
        p == q
            || self.shares_vertex(p, q)
            || (self.mesh.centroid(p) - self.mesh.centroid(q)).norm()
                < self.quad.near_factor * self.mesh.h()
    }

    fn moments(&self, p: usize, q: usize, origin: Vec3) -> Result<Moments> {
        let mut m = Moments::default();
        let near = self.is_near(p, q);
        match (self.kernel, near) {
            (Kernel::Helmholtz(k), false) => {
                for a in &self.points[p] {
                    for b in &self.points[q] {
                        let g = helmholtz_full(k, (a.pos - b.pos).norm()) * (a.weight * b.weight);
                        m.add(g, a.pos - origin, b.pos - origin);
                    }
                }
                return Ok(m);
            }
            (Kernel::Laplace, false) => {
                for a in &self.points[p] {
                    for b in &self.points[q] {
                        let g = a.weight * b.weight / (4.0 * PI * (a.pos - b.pos).norm());
                        m.add(g.into(), a.pos - origin, b.pos - origin);
                    }
                }
                return Ok(m);
            }
            (Kernel::Helmholtz(k), true) => {
                for a in &self.points[p] {
                    for b in &self.points[q] {
                        let g = helmholtz_smooth(k, (a.pos - b.pos).norm()) * (a.weight * b.weight);
                        m.add(g, a.pos - origin, b.pos - origin);
                    }
                }
            }
            (Kernel::Laplace, true) => {}
        }
        let s = if p == q {
            self.static_self(p, origin)?
        } else if self.shares_vertex(p, q) {
            self.static_graded(p, q, &self.touch_rule, origin)?
        } else {
            self.static_near(p, q, origin)?
        };
        m.i0 += s.i0;
        m.irr += s.irr;
        for d in 0..3 {
            m.ir[d] += s.ir[d];
            m.irp[d] += s.irp[d];
        }
        Ok(m)
    }

    /// `1/(4πR)` part of a near pair: analytic inner, Gauss outer.
    fn static_near(&self, p: usize, q: usize, origin: Vec3) -> Result<Moments> {
        let tri_q = self.mesh.triangle_vertices(q);
        let n_q = self.mesh.normal(q);
        let mut m = Moments::default();
        for a in &self.points[p] {
            let sp = static_potentials(a.pos, &tri_q, n_q).map_err(|msg| Error::QuadratureFailure {
                test: p,
                source_tri: q,
                msg,
            })?;
            let w = a.weight / (4.0 * PI);
            let r = a.pos - origin;
            let first = sp.first_moment() - origin * sp.scalar;
            m.i0 += w * sp.scalar;
            for d in 0..3 {
                m.ir[d] += w * sp.scalar * r[d];
                m.irp[d] += w * first[d];
            }
            m.irr += w * r.dot(first);
        }
        Ok(m)
    }

    /// `1/(4πR)` part of a pair with an analytic inner integral over `q` and
    /// a graded outer rule on `p`. Polynomial substitutions toward the edges
    /// of `p` absorb the `d log d` behaviour of the inner potential there.
    fn static_graded(&self, p: usize, q: usize, rule: &GradedRule, origin: Vec3) -> Result<Moments> {
        let tri = self.mesh.triangle_vertices(p);
        let tri_q = self.mesh.triangle_vertices(q);
        let n_q = self.mesh.normal(q);
        let c = self.mesh.centroid(p);
        let mut m = Moments::default();
        for i in 0..3 {
            let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
            let jac = (a - c).cross(b - c).norm();
            for &(t, wt) in &rule.radial {
                for &(s, ws) in &rule.lateral {
                    let r = c + ((a * (1.0 - s) + b * s) - c) * t;
                    let sp = static_potentials(r, &tri_q, n_q).map_err(|msg| Error::QuadratureFailure {
                        test: p,
                        source_tri: q,
                        msg,
                    })?;
                    let w = wt * ws * jac * t / (4.0 * PI);
                    let rl = r - origin;
                    let first = sp.first_moment() - origin * sp.scalar;
                    m.i0 += w * sp.scalar;
                    for d in 0..3 {
                        m.ir[d] += w * sp.scalar * rl[d];
                        m.irp[d] += w * first[d];
                    }
                    m.irr += w * rl.dot(first);
                }
            }
        }
        Ok(m)
    }

    /// `1/(4πR)` part of a self pair, symmetrized in `r <-> r'` (exact for
    /// the true integral).
    fn static_self(&self, p: usize, origin: Vec3) -> Result<Moments> {
        let mut m = self.static_graded(p, p, &self.self_rule, origin)?;
        for d in 0..3 {
            let avg = 0.5 * (m.ir[d] + m.irp[d]);
            m.ir[d] = avg;
            m.irp[d] = avg;
        }
        Ok(m)
    }

    fn block(&self, p: usize, q: usize) -> Result<PairBlock> {
        let origin = self.mesh.centroid(p);
        let m = self.moments(p, q, origin)?;
        let vp = self.mesh.triangle_vertices(p).map(|v| v - origin);
        let vq = self.mesh.triangle_vertices(q).map(|v| v - origin);
        let scale = 1.0 / (4.0 * self.mesh.area(p) * self.mesh.area(q));
        let mut local = [[Complex64::default(); 3]; 3];
        for (i, pi) in vp.iter().enumerate() {
            for (j, qj) in vq.iter().enumerate() {
                let mut v = m.irr + m.i0 * pi.dot(*qj);
                for d in 0..3 {
                    v -= m.ir[d] * qj[d] + m.irp[d] * pi[d];
                }
                local[i][j] = v * scale;
            }
        }
        if p == q {
            for i in 0..3 {
                for j in (i + 1)..3 {
                    let avg = 0.5 * (local[i][j] + local[j][i]);
                    local[i][j] = avg;
                    local[j][i] = avg;
                }
            }
        }
        Ok(PairBlock { q, local, phi: m.i0 })
    }

    /// Dense `Ta` (N x N) and `Φ` (F x F).
    fn assemble(&self) -> Result<(Mat<Complex64>, Mat<Complex64>)> {
        let mesh = self.mesh;
        let nf = mesh.num_triangles();
        let ne = mesh.num_edges();
        let mut ta = Mat::<Complex64>::zeros(ne, ne);
        let mut phi = Mat::<Complex64>::zeros(nf, nf);
        const CHUNK: usize = 32;
        let starts: Vec<usize> = (0..nf).step_by(CHUNK).collect();
        for chunk_start in starts {
            let rows: Vec<Result<Vec<PairBlock>>> = (chunk_start..(chunk_start + CHUNK).min(nf))
                .into_par_iter()
                .map(|p| (p..nf).map(|q| self.block(p, q)).collect())
                .collect();
            // Scatter sequentially in (p, q) order for reproducible sums.
            for (offset, row) in rows.into_iter().enumerate() {
                let p = chunk_start + offset;
                let ep = mesh.triangle_edges()[p];
                for blk in row? {
                    let q = blk.q;
                    let eq = mesh.triangle_edges()[q];
                    phi[(p, q)] = blk.phi;
                    phi[(q, p)] = blk.phi;
                    for i in 0..3 {
                        let m = ep[i];
                        let sm = mesh.edge_sign(m, p) * self.lengths[m];
                        for j in 0..3 {
                            let n = eq[j];
                            let v = blk.local[i][j] * (sm * mesh.edge_sign(n, q) * self.lengths[n]);
                            ta[(m, n)] += v;
                            if p != q {
                                ta[(n, m)] += v;
                            }
                        }
                    }
                }
            }
        }
        Ok((ta, phi))
    }
}

fn tphi_from_potential(div: &CsrMatrix, potential: &Mat<Complex64>) -> Mat<Complex64> {
    let d = div.to_dense();
    let dc = Mat::<Complex64>::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)].into());
    let tmp = crate::dense::matmul(potential, &dc);
    crate::dense::matmul(&crate::dense::transpose(&dc), &tmp)
}

/// Vector-potential Galerkin matrix `Ta`.
pub fn assemble_ta(space: &RwgSpace, params: &PhysicsParams, quad: &QuadratureConfig) -> Result<Mat<Complex64>> {
    Ok(Assembler::new(space.mesh(), Kernel::Helmholtz(params.wavenumber), *quad)
        .assemble()?
        .0)
}

/// Scalar-potential Galerkin matrix `Tphi`.
pub fn assemble_tphi(space: &RwgSpace, params: &PhysicsParams, quad: &QuadratureConfig) -> Result<Mat<Complex64>> {
    let (_, phi) = Assembler::new(space.mesh(), Kernel::Helmholtz(params.wavenumber), *quad).assemble()?;
    Ok(tphi_from_potential(space.divergence(), &phi))
}

/// `Ta`, `Tphi` and `Φ` for the static kernel `1/(4πR)`.
pub fn assemble_static(space: &RwgSpace, quad: &QuadratureConfig) -> Result<(Mat<Complex64>, Mat<Complex64>, Mat<Complex64>)> {
    let (ta, phi) = Assembler::new(space.mesh(), Kernel::Laplace, *quad).assemble()?;
    let tphi = tphi_from_potential(space.divergence(), &phi);
    Ok((ta, tphi, phi))
}

/// Assemble both operator blocks and the plane-wave excitation in one pass.
pub fn assemble_operators(
    space: &RwgSpace,
    params: &PhysicsParams,
    quad: &QuadratureConfig,
    wave: &PlaneWave,
) -> Result<OperatorSet> {
    let (ta, potential) =
        Assembler::new(space.mesh(), Kernel::Helmholtz(params.wavenumber), *quad).assemble()?;
    let tphi = tphi_from_potential(space.divergence(), &potential);
    let e = assemble_excitation_with(space, wave, params, quad.rule);
    Ok(OperatorSet {
        ta,
        tphi,
        potential,
        divergence: space.divergence().clone(),
        e,
        params: *params,
    })
}

/// `e_m = -∫ f_m · E_inc dS` with the default 7-point rule.
pub fn assemble_excitation(space: &RwgSpace, wave: &PlaneWave, params: &PhysicsParams) -> Vec<Complex64> {
    assemble_excitation_with(space, wave, params, TriangleRule::P7)
}

pub fn assemble_excitation_with(
    space: &RwgSpace,
    wave: &PlaneWave,
    params: &PhysicsParams,
    rule: TriangleRule,
) -> Vec<Complex64> {
    let k = params.wavenumber;
    let moments = triangle_field_moments(space.mesh(), rule, |r| wave.field(r, k));
    let mut e = vec![Complex64::default(); space.len()];
    for (n, d) in space.dofs().iter().enumerate() {
        let v = space.mesh().vertices();
        // ∫_T (r - p)/(2A) · E = (M1 - p·M0) / (2A), with M0 = ∫E, M1 = ∫ r·E.
        let side = |t: usize, free: Vec3| {
            let (m0, m1) = moments[t];
            (m1 - m0.dot_real(free)) / (2.0 * space.mesh().area(t))
        };
        e[n] = -(side(d.plus, v[d.free_plus]) - side(d.minus, v[d.free_minus])) * d.length;
    }
    e
}

/// Per triangle: `(∫ F dS, ∫ r·F dS)` for a complex vector field `F`.
fn triangle_field_moments(
    mesh: &TriangleMesh,
    rule: TriangleRule,
    field: impl Fn(Vec3) -> CVec3 + Sync,
) -> Vec<(CVec3, Complex64)> {
    let pts = rule.points();
    (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let mut m0 = CVec3::default();
            let mut m1 = Complex64::default();
            for q in map_rule(&pts, &mesh.triangle_vertices(t), mesh.area(t)) {
                let f = field(q.pos);
                m0.re += f.re * q.weight;
                m0.im += f.im * q.weight;
                m1 += f.dot_real(q.pos) * q.weight;
            }
            (m0, m1)
        })
        .collect()
}

/// Far-zone scattered field pattern `F(û)`, defined by
/// `E_s(r û) ≈ F(û) exp(jkr)/r` as `r → ∞`.
pub fn far_field(
    space: &RwgSpace,
    currents: &[Complex64],
    params: &PhysicsParams,
    directions: &[Vec3],
) -> Result<Vec<[Complex64; 3]>> {
    far_field_with(space, currents, params, directions, TriangleRule::P7)
}

pub fn far_field_with(
    space: &RwgSpace,
    currents: &[Complex64],
    params: &PhysicsParams,
    directions: &[Vec3],
    rule: TriangleRule,
) -> Result<Vec<[Complex64; 3]>> {
    if currents.len() != space.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} currents for {} RWG functions",
            currents.len(),
            space.len()
        )));
    }
    let k = params.wavenumber;
    let mesh = space.mesh();
    let pts = rule.points();
    let quad: Vec<Vec<QuadPoint>> = (0..mesh.num_triangles())
        .map(|t| map_rule(&pts, &mesh.triangle_vertices(t), mesh.area(t)))
        .collect();
    // Per triangle, the current is Σ_i c_i (r - P_i)/(2A) = (a r - b)/(2A)
    // with a = Σ c_i and b = Σ c_i P_i, where c_i includes sign and length.
    let mut coeff = vec![(Complex64::default(), [Complex64::default(); 3]); mesh.num_triangles()];
    for (n, d) in space.dofs().iter().enumerate() {
        let v = mesh.vertices();
        for (t, free, s) in [(d.plus, v[d.free_plus], 1.0), (d.minus, v[d.free_minus], -1.0)] {
            let c = currents[n] * (s * d.length);
            coeff[t].0 += c;
            for i in 0..3 {
                coeff[t].1[i] += c * free[i];
            }
        }
    }
    let out = directions
        .par_iter()
        .map(|&u| {
            let mut acc = [Complex64::default(); 3];
            for (t, pts) in quad.iter().enumerate() {
                let (a, b) = coeff[t];
                let inv2a = 1.0 / (2.0 * mesh.area(t));
                for q in pts {
                    let ph = Complex64::from_polar(q.weight * inv2a, -k * u.dot(q.pos));
                    for i in 0..3 {
                        acc[i] += (a * q.pos[i] - b[i]) * ph;
                    }
                }
            }
            // Transverse projection and radiation prefactor jk/(4π).
            let dot = acc[0] * u.x + acc[1] * u.y + acc[2] * u.z;
            let pre = J * (k / (4.0 * PI));
            [
                pre * (acc[0] - dot * u.x),
                pre * (acc[1] - dot * u.y),
                pre * (acc[2] - dot * u.z),
            ]
        })
        .collect();
    Ok(out)
}

/// Bistatic radar cross section `4π |F|² / |E0|²`.
pub fn rcs(pattern: &[[Complex64; 3]], amplitude: f64) -> Vec<f64> {
    pattern
        .iter()
        .map(|f| 4.0 * PI * f.iter().map(|c| c.norm_sqr()).sum::<f64>() / (amplitude * amplitude))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{frobenius, transpose};
    use crate::mesh::generate_icosphere;

    fn asym(m: &Mat<Complex64>) -> f64 {
        let t = transpose(m);
        let d = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - t[(i, j)]);
        frobenius(&d) / frobenius(m)
    }

    #[test]
    fn plane_wave_validation() {
        assert!(PlaneWave::new(Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.0), 1.0).is_ok());
        assert!(PlaneWave::new(Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 1.0), 1.0).is_err());
        assert!(PlaneWave::new(Vec3::new(0.0, 0.0, 2.0), Vec3::new(1.0, 0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn wavenumber_from_frequency() {
        let p = PhysicsParams::free_space(1e6).unwrap();
        assert!((p.wavenumber - 2.0 * PI * 1e6 / SPEED_OF_LIGHT).abs() < 1e-9 * p.wavenumber);
        assert!(PhysicsParams::free_space(0.0).is_err());
        let q = PhysicsParams::from_wavenumber(1.0).unwrap();
        assert!((q.wavenumber - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divergence_of_rwg_is_inverse_area() {
        let mesh = generate_icosphere(1, 1.0).unwrap();
        let space = RwgSpace::new(&mesh);
        for (n, d) in space.dofs().iter().enumerate() {
            assert_eq!(space.divergence().get(d.plus, n), d.length / mesh.area(d.plus));
            assert_eq!(space.divergence().get(d.minus, n), -d.length / mesh.area(d.minus));
        }
        // Unit normal component across the defining edge.
        let d = space.dofs()[5];
        let [a, b] = mesh.edges()[5];
        let mid = (mesh.vertices()[a] + mesh.vertices()[b]) * 0.5;
        let f = space.eval(5, d.plus, mid);
        let edge = mesh.vertices()[b] - mesh.vertices()[a];
        let outward = edge.cross(mesh.normal(d.plus)).normalized();
        assert!((f.dot(outward) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operators_are_complex_symmetric() {
        let mesh = generate_icosphere(1, 1.0).unwrap();
        let space = RwgSpace::new(&mesh);
        let params = PhysicsParams::from_wavenumber(1.0).unwrap();
        let ops = assemble_operators(&space, &params, &QuadratureConfig::default(), &PlaneWave::default_incidence(1.0))
            .unwrap();
        assert!(asym(&ops.ta) < 1e-10);
        assert!(asym(&ops.tphi) < 1e-10);
    }

    #[test]
    fn far_pair_matches_centroid_rule() {
        let mesh = generate_icosphere(2, 1.0).unwrap();
        let space = RwgSpace::new(&mesh);
        let k = 1.3;
        let params = PhysicsParams::from_wavenumber(k).unwrap();
        let quad = QuadratureConfig {
            rule: TriangleRule::P1,
            ..Default::default()
        };
        let ta = assemble_ta(&space, &params, &quad).unwrap();
        let far = |p: usize, q: usize| {
            let tp = mesh.triangles()[p];
            let tq = mesh.triangles()[q];
            !tp.iter().any(|v| tq.contains(v))
                && (mesh.centroid(p) - mesh.centroid(q)).norm() >= 3.0 * mesh.h()
        };
        let m = 0;
        let dm = space.dofs()[m];
        let n = space
            .dofs()
            .iter()
            .position(|dn| {
                [dm.plus, dm.minus]
                    .iter()
                    .all(|&p| [dn.plus, dn.minus].iter().all(|&q| far(p, q)))
            })
            .expect("a well separated edge exists");
        let v = mesh.vertices();
        let dn = space.dofs()[n];
        let mut expected = Complex64::default();
        for (p, fp, sp) in [(dm.plus, dm.free_plus, 1.0), (dm.minus, dm.free_minus, -1.0)] {
            for (q, fq, sq) in [(dn.plus, dn.free_plus, 1.0), (dn.minus, dn.free_minus, -1.0)] {
                let (cp, cq) = (mesh.centroid(p), mesh.centroid(q));
                let r = (cp - cq).norm();
                let g = Complex64::from_polar(1.0, k * r) / (4.0 * PI * r);
                expected += g * (sp * sq * dm.length * dn.length * (cp - v[fp]).dot(cq - v[fq]) / 4.0);
            }
        }
        let got = ta[(m, n)];
        assert!((got - expected).norm() < 1e-12 * expected.norm(), "{got} vs {expected}");
    }

    #[test]
    fn self_potential_matches_closed_form() {
        let mesh = generate_icosphere(1, 1.0).unwrap();
        let space = RwgSpace::new(&mesh);
        let (_, _, phi) = assemble_static(&space, &QuadratureConfig::default()).unwrap();
        for t in [0, 17, 55] {
            let [p0, p1, p2] = mesh.triangle_vertices(t);
            let (a, b, c) = ((p1 - p2).norm(), (p2 - p0).norm(), (p0 - p1).norm());
            let area = mesh.area(t);
            let mut closed = 0.0;
            for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
                closed += (((x + y).powi(2) - z * z) / (y * y - (z - x).powi(2))).ln() / x;
            }
            closed *= 4.0 * area * area / 3.0 / (4.0 * PI);
            let got = phi[(t, t)];
            assert!(got.im == 0.0);
            assert!((got.re - closed).abs() < 1e-8 * closed, "{} vs {closed}", got.re);
        }
    }

    #[test]
    fn low_frequency_limit_is_static() {
        let mesh = generate_icosphere(1, 1.0).unwrap();
        let space = RwgSpace::new(&mesh);
        let quad = QuadratureConfig::default();
        let k = 1e-9;
        let params = PhysicsParams::from_wavenumber(k).unwrap();
        let ta = assemble_ta(&space, &params, &quad).unwrap();
        let (ta0, _, _) = assemble_static(&space, &quad).unwrap();
        let scale = frobenius(&ta0);
        let mut re_err: f64 = 0.0;
        let mut im_max: f64 = 0.0;
        for i in 0..ta.nrows() {
            for j in 0..ta.ncols() {
                re_err = re_err.max((ta[(i, j)].re - ta0[(i, j)].re).abs());
                im_max = im_max.max(ta[(i, j)].im.abs());
            }
        }
        assert!(re_err < 1e-12 * scale, "{re_err}");
        assert!(im_max < 10.0 * k * scale, "{im_max}");
        assert!(im_max > 0.0);
    }

    #[test]
    fn excitation_linearity_and_static_limit() {
        let mesh = generate_icosphere(1, 1.0).unwrap();
        let space = RwgSpace::new(&mesh);
        let params = PhysicsParams::from_wavenumber(1e-9).unwrap();
        let d = Vec3::new(0.0, 0.0, -1.0);
        let p = Vec3::new(1.0, 0.0, 0.0);
        let zero = assemble_excitation(&space, &PlaneWave::new(d, p, 0.0).unwrap(), &params);
        assert!(zero.iter().all(|z| z.norm() == 0.0));
        let e1 = assemble_excitation(&space, &PlaneWave::new(d, p, 1.0).unwrap(), &params);
        let e2 = assemble_excitation(&space, &PlaneWave::new(d, -p, 1.0).unwrap(), &params);
        for (a, b) in e1.iter().zip(&e2) {
            assert_eq!(*a, -*b);
        }
        // Constant field: -∫ f·p = -p·(centroid - free) / 2 on each side (exact for the centroid form).
        let v = mesh.vertices();
        for (n, dof) in space.dofs().iter().enumerate() {
            let plus = (mesh.centroid(dof.plus) - v[dof.free_plus]).dot(p) / 2.0;
            let minus = (v[dof.free_minus] - mesh.centroid(dof.minus)).dot(p) / 2.0;
            let expected = -(plus + minus) * dof.length;
            assert!((e1[n].re - expected).abs() < 1e-9 * (1.0 + expected.abs()));
            assert!(e1[n].im.abs() < 1e-8);
        }
    }

    #[test]
    fn far_field_linearity() {
        let mesh = generate_icosphere(1, 1.0).unwrap();
        let space = RwgSpace::new(&mesh);
        let params = PhysicsParams::from_wavenumber(1.0).unwrap();
        let dirs = [Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.0)];
        let zero = far_field(&space, &vec![Complex64::default(); space.len()], &params, &dirs).unwrap();
        assert!(zero.iter().flatten().all(|c| c.norm() == 0.0));
        let j: Vec<Complex64> = (0..space.len()).map(|i| Complex64::new((i as f64).sin(), 0.3)).collect();
        let alpha = Complex64::new(0.5, -2.0);
        let js: Vec<Complex64> = j.iter().map(|x| x * alpha).collect();
        let f1 = far_field(&space, &j, &params, &dirs).unwrap();
        let f2 = far_field(&space, &js, &params, &dirs).unwrap();
        for (a, b) in f1.iter().flatten().zip(f2.iter().flatten()) {
            assert!((a * alpha - b).norm() < 1e-12 * (1.0 + b.norm()));
        }
        assert!(far_field(&space, &j[1..], &params, &dirs).is_err());
    }
}
