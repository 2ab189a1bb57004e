//! Integration rules on triangles and closed-form static potentials.
//!
//! Triangle rules are the symmetric Gauss (Dunavant) rules with 1, 3, 4, 6, 7
//! and 12 points. Weights are normalized to sum to one, so an integral is
//! `area * sum(w_i f(x_i))`.
//!
//! [`static_potentials`] evaluates `∫ 1/R dS'` and `∫ (r' - ρ)/R dS'` over a
//! flat triangle in closed form, for an observation point anywhere in space.

use crate::error::{Error, Result};
use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleRule {
    P1,
    P3,
    P4,
    P6,
    P7,
    P12,
}

impl TriangleRule {
    pub fn from_points(n: usize) -> Result<Self> {
        Ok(match n {
            1 => TriangleRule::P1,
            3 => TriangleRule::P3,
            4 => TriangleRule::P4,
            6 => TriangleRule::P6,
            7 => TriangleRule::P7,
            12 => TriangleRule::P12,
            _ => {
                return Err(Error::Config(format!(
                    "unsupported triangle rule with {n} points (use 1, 3, 4, 6, 7 or 12)"
                )))
            }
        })
    }

    pub fn num_points(self) -> usize {
        match self {
            TriangleRule::P1 => 1,
            TriangleRule::P3 => 3,
            TriangleRule::P4 => 4,
            TriangleRule::P6 => 6,
            TriangleRule::P7 => 7,
            TriangleRule::P12 => 12,
        }
    }

    /// Highest total polynomial degree integrated exactly.
    pub fn degree(self) -> usize {
        match self {
            TriangleRule::P1 => 1,
            TriangleRule::P3 => 2,
            TriangleRule::P4 => 3,
            TriangleRule::P6 => 4,
            TriangleRule::P7 => 5,
            TriangleRule::P12 => 6,
        }
    }

    /// Barycentric points and weights.
    pub fn points(self) -> Vec<([f64; 3], f64)> {
        let mut out = Vec::with_capacity(self.num_points());
        let mut orbit3 = |a: f64, w: f64| {
            let b = (1.0 - a) / 2.0;
            out.push(([a, b, b], w));
            out.push(([b, a, b], w));
            out.push(([b, b, a], w));
        };
        let third = 1.0 / 3.0;
        match self {
            TriangleRule::P1 => return vec![([third; 3], 1.0)],
            TriangleRule::P3 => orbit3(2.0 / 3.0, third),
            TriangleRule::P4 => {
                orbit3(0.6, 25.0 / 48.0);
                out.push(([third; 3], -27.0 / 48.0));
            }
            TriangleRule::P6 => {
                orbit3(0.108_103_018_168_070_2, 0.223_381_589_678_011_5);
                orbit3(0.816_847_572_980_458_5, 0.109_951_743_655_321_8);
            }
            TriangleRule::P7 => {
                let s = 15f64.sqrt();
                orbit3((9.0 + 2.0 * s) / 21.0, (155.0 - s) / 1200.0);
                orbit3((9.0 - 2.0 * s) / 21.0, (155.0 + s) / 1200.0);
                out.push(([third; 3], 9.0 / 40.0));
            }
            TriangleRule::P12 => {
                orbit3(0.501_426_509_658_179, 0.116_786_275_726_379);
                orbit3(0.873_821_971_016_996, 0.050_844_906_370_207);
                let (a, b, c) = (0.053_145_049_844_817, 0.310_352_451_033_784, 0.636_502_499_121_399);
                let w = 0.082_851_075_618_374;
                for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                    out.push((p, w));
                }
            }
        }
        out
    }
}

/// Quadrature point on a physical triangle with weight already scaled by area.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub pos: Vec3,
    pub weight: f64,
}

pub fn map_rule(rule: &[([f64; 3], f64)], tri: &[Vec3; 3], area: f64) -> Vec<QuadPoint> {
    rule.iter()
        .map(|&(l, w)| QuadPoint {
            pos: tri[0] * l[0] + tri[1] * l[1] + tri[2] * l[2],
            weight: w * area,
        })
        .collect()
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Newton iteration from the Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (1.0 - x), 0.5 * w));
    }
    out.reverse();
    out
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One G7/K15 panel for a vector-valued integrand. Returns (kronrod, error).
fn gk15<const N: usize>(f: &mut impl FnMut(f64) -> [f64; N], a: f64, b: f64) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let fc = f(c);
    for d in 0..N {
        k[d] = WGK[7] * fc[d];
        g[d] = WG[3] * fc[d];
    }
    for (j, &x) in XGK[..7].iter().enumerate() {
        let f1 = f(c - h * x);
        let f2 = f(c + h * x);
        for d in 0..N {
            let s = f1[d] + f2[d];
            k[d] += WGK[j] * s;
            if j % 2 == 1 {
                g[d] += WG[j / 2] * s;
            }
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..N {
        k[d] *= h;
        g[d] *= h;
        err = err.max((k[d] - g[d]).abs());
    }
    (k, err)
}

/// Adaptive Gauss-Kronrod integration of a vector-valued function on `[a, b]`.
///
/// Bisection is depth-first in a fixed order, so results are deterministic.
/// `abs_tol` bounds the summed panel error estimates in the max norm.
pub fn adaptive_gk<const N: usize>(
    f: &mut impl FnMut(f64) -> [f64; N],
    a: f64,
    b: f64,
    abs_tol: f64,
    max_depth: u32,
) -> [f64; N] {
    fn rec<const N: usize>(
        f: &mut impl FnMut(f64) -> [f64; N],
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
        whole: ([f64; N], f64),
    ) -> [f64; N] {
        let (est, err) = whole;
        if err <= tol || depth == 0 {
            return est;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        let l = rec(f, a, m, 0.5 * tol, depth - 1, left);
        let r = rec(f, m, b, 0.5 * tol, depth - 1, right);
        let mut out = [0.0; N];
        for d in 0..N {
            out[d] = l[d] + r[d];
        }
        out
    }
    let whole = gk15(f, a, b);
    rec(f, a, b, abs_tol, max_depth, whole)
}

/// Closed-form potentials of a flat source triangle at an observation point.
#[derive(Debug, Clone, Copy)]
pub struct StaticPotentials {
    /// `∫_T 1/|r - r'| dS'`
    pub scalar: f64,
    /// `∫_T (r' - ρ)/|r - r'| dS'`, with `ρ` the projection of `r` onto the
    /// plane of `T`.
    pub vector: Vec3,
    /// The projection `ρ`, so that `∫ r'/R = vector + ρ * scalar`.
    pub projection: Vec3,
}

impl StaticPotentials {
    /// `∫_T r'/|r - r'| dS'`.
    pub fn first_moment(&self) -> Vec3 {
        self.vector + self.projection * self.scalar
    }
}

/// Evaluate the static potentials of triangle `tri` (counter-clockwise about
/// the unit normal `normal`) at `r`.
///
/// Points on an edge of the source triangle are rejected; points on the
/// extension of an edge line are fine.
pub fn static_potentials(r: Vec3, tri: &[Vec3; 3], normal: Vec3) -> Result<StaticPotentials, String> {
    let d = normal.dot(r - tri[0]);
    let rho = r - normal * d;
    let ad = d.abs();
    let scale = (tri[1] - tri[0]).norm() + (tri[2] - tri[1]).norm() + (tri[0] - tri[2]).norm();
    let tiny = 1e-14 * scale;

    let mut scalar = 0.0;
    let mut vector = Vec3::ZERO;
    for i in 0..3 {
        let pa = tri[i];
        let pb = tri[(i + 1) % 3];
        let edge = pb - pa;
        let len = edge.norm();
        let l_hat = edge / len;
        let u_hat = l_hat.cross(normal);
        let s_minus = (pa - rho).dot(l_hat);
        let s_plus = (pb - rho).dot(l_hat);
        let t0 = (pa - rho).dot(u_hat);
        let r0_sq = t0 * t0 + d * d;
        let r_minus = (r - pa).norm();
        let r_plus = (r - pb).norm();

        // log((R+ + s+)/(R- + s-)), using R^2 - s^2 = R0^2 when s < 0.
        let log_term = if r0_sq.sqrt() <= tiny {
            if s_minus * s_plus <= 0.0 {
                return Err(format!(
                    "observation point lies on edge {i} of the source triangle"
                ));
            }
            0.0
        } else {
            let f = |s: f64, rr: f64| if s >= 0.0 { rr + s } else { r0_sq / (rr - s) };
            (f(s_plus, r_plus) / f(s_minus, r_minus)).ln()
        };

        let mut term = t0 * log_term;
        if ad > tiny {
            term -= ad
                * ((t0 * s_plus).atan2(r0_sq + ad * r_plus)
                    - (t0 * s_minus).atan2(r0_sq + ad * r_minus));
        }
        scalar += term;
        vector += u_hat * (0.5 * (r0_sq * log_term + s_plus * r_plus - s_minus * r_minus));
    }
    if !scalar.is_finite() || !vector.x.is_finite() || !vector.y.is_finite() || !vector.z.is_finite() {
        return Err("non-finite static potential".into());
    }
    Ok(StaticPotentials {
        scalar,
        vector,
        projection: rho,
    })
}
