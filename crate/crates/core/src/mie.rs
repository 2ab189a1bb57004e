//! Mie series for plane-wave scattering by a perfectly conducting sphere.
//!
//! Follows the Bohren-Huffman convention: for incidence along `+z` polarized
//! along `x`, the far field has amplitudes `S1(θ)` (perpendicular) and
//! `S2(θ)` (parallel) and the bistatic radar cross section is
//! `σ = 4π (|S2|² cos²φ + |S1|² sin²φ) / k²`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::em::PlaneWave;
use crate::error::{Error, Result};
use crate::geom::Vec3;

#[derive(Debug, Clone)]
pub struct MieOracle {
    radius: f64,
    wavenumber: f64,
    order: usize,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

/// Riccati-Bessel `ψ_n(x) = x j_n(x)` for `n = 0..=nmax`, by downward
/// recurrence normalized with `ψ_0 = sin x`.
fn riccati_psi(x: f64, nmax: usize) -> Vec<f64> {
    let start = nmax + 20 + (x.abs() as usize) * 2;
    let mut j = vec![0.0; start + 2];
    j[start + 1] = 0.0;
    j[start] = 1e-300;
    for n in (1..=start).rev() {
        j[n - 1] = (2 * n + 1) as f64 / x * j[n] - j[n + 1];
        if j[n - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(n - 1) {
                *v *= 1e-250;
            }
        }
    }
    let scale = (x.sin() / x) / j[0];
    (0..=nmax).map(|n| j[n] * scale * x).collect()
}

/// `ξ_n(x) = x h_n⁽¹⁾(x) = ψ_n(x) + i x y_n(x)`.
fn riccati_xi(x: f64, psi: &[f64]) -> Vec<Complex64> {
    let nmax = psi.len() - 1;
    // x y_n by upward recurrence, stable for the second kind.
    let mut chi = vec![0.0; nmax + 1];
    chi[0] = -x.cos();
    if nmax >= 1 {
        chi[1] = -x.cos() / x - x.sin();
    }
    for n in 1..nmax {
        chi[n + 1] = (2 * n + 1) as f64 / x * chi[n] - chi[n - 1];
    }
    psi.iter().zip(chi).map(|(&p, c)| Complex64::new(p, c)).collect()
}

impl MieOracle {
    /// Oracle truncated at `⌈ka⌉ + 15`.
    pub fn new(radius: f64, wavenumber: f64) -> Result<Self> {
        let order = (wavenumber * radius).ceil() as usize + 15;
        Self::with_order(radius, wavenumber, order)
    }

    pub fn with_order(radius: f64, wavenumber: f64, order: usize) -> Result<Self> {
        if !(radius > 0.0 && wavenumber > 0.0 && radius.is_finite() && wavenumber.is_finite()) {
            return Err(Error::Config(format!(
                "Mie series needs positive radius and wavenumber, got {radius} and {wavenumber}"
            )));
        }
        if order == 0 {
            return Err(Error::Config("Mie series order must be at least 1".into()));
        }
        let x = wavenumber * radius;
        let psi = riccati_psi(x, order);
        let xi = riccati_xi(x, &psi);
        let mut a = vec![Complex64::default(); order + 1];
        let mut b = vec![Complex64::default(); order + 1];
        for n in 1..=order {
            let nf = n as f64;
            let dpsi = psi[n - 1] - nf * psi[n] / x;
            let dxi = xi[n - 1] - xi[n] * (nf / x);
            a[n] = dpsi / dxi;
            b[n] = psi[n] / xi[n];
        }
        Ok(Self {
            radius,
            wavenumber,
            order,
            a,
            b,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Magnitude of the last retained coefficient pair.
    pub fn tail(&self) -> f64 {
        self.a[self.order].norm().max(self.b[self.order].norm())
    }

    /// `(S1, S2)` at scattering angle `θ` given as `cos θ`.
    pub fn amplitudes(&self, mu: f64) -> (Complex64, Complex64) {
        let mut s1 = Complex64::default();
        let mut s2 = Complex64::default();
        let (mut pi_prev, mut pi) = (0.0, 1.0);
        for n in 1..=self.order {
            let nf = n as f64;
            let tau = nf * mu * pi - (nf + 1.0) * pi_prev;
            let c = (2.0 * nf + 1.0) / (nf * (nf + 1.0));
            s1 += c * (self.a[n] * pi + self.b[n] * tau);
            s2 += c * (self.a[n] * tau + self.b[n] * pi);
            let next = ((2.0 * nf + 1.0) * mu * pi - (nf + 1.0) * pi_prev) / nf;
            pi_prev = pi;
            pi = next;
        }
        (s1, s2)
    }

    /// Bistatic radar cross section at scattering angle `θ` and azimuth `φ`
    /// measured from the polarization direction.
    pub fn rcs_angles(&self, theta: f64, phi: f64) -> f64 {
        let (s1, s2) = self.amplitudes(theta.cos());
        let k2 = self.wavenumber * self.wavenumber;
        4.0 * PI * (s2.norm_sqr() * phi.cos().powi(2) + s1.norm_sqr() * phi.sin().powi(2)) / k2
    }

    pub fn monostatic_rcs(&self) -> f64 {
        self.rcs_angles(PI, 0.0)
    }

    /// Bistatic radar cross section in the given observation directions.
    pub fn rcs(&self, wave: &PlaneWave, directions: &[Vec3]) -> Vec<f64> {
        let d = wave.direction.normalized();
        let e = wave.polarization.normalized();
        let h = d.cross(e);
        directions
            .iter()
            .map(|u| {
                let u = u.normalized();
                let theta = u.dot(d).clamp(-1.0, 1.0).acos();
                let phi = u.dot(h).atan2(u.dot(e));
                self.rcs_angles(theta, phi)
            })
            .collect()
    }
}
