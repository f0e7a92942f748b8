//! 3D Zernike moments on the unit ball, computed as linear combinations of
//! geometric moments, and the rotation-invariant norms `F_nl`.
//!
//! The basis follows Novotni and Klein's Cartesian construction: each
//! `Z_nl^m` is a polynomial of degree `n`, built from harmonic polynomials
//! `e_l^m` and radial coefficients `q_kl^nu`, normalized so that
//! `(3 / 4pi) * integral over the ball of Z conj(Z')` is the Kronecker delta.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use super::voxel::{geometric_moments, MomentTable, VoxelGrid};
use crate::mesh::Vec3;

pub const MAX_ZERNIKE_ORDER: usize = 20;
pub const DEFAULT_ZERNIKE_ORDER: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ZernikeError {
    #[error("Zernike order {0} exceeds the supported maximum of {MAX_ZERNIKE_ORDER}")]
    OrderTooLarge(usize),
}

/// `c * x^r y^s z^t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub r: u8,
    pub s: u8,
    pub t: u8,
    pub coeff: Complex64,
}

/// One basis polynomial `Z_nl^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisFunction {
    pub n: usize,
    pub l: usize,
    pub m: i32,
    /// Coefficients `chi_nlm^rst`, sorted by `(r, s, t)`.
    pub terms: Vec<Term>,
}

impl BasisFunction {
    pub fn eval(&self, p: &Vec3) -> Complex64 {
        let pw = |v: f64| {
            let mut out = [1.0; MAX_ZERNIKE_ORDER + 1];
            for e in 1..=self.n {
                out[e] = out[e - 1] * v;
            }
            out
        };
        let (px, py, pz) = (pw(p.x), pw(p.y), pw(p.z));
        self.terms
            .iter()
            .map(|t| t.coeff * (px[t.r as usize] * py[t.s as usize] * pz[t.t as usize]))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZernikeBasis {
    max_order: usize,
    /// Ordered by `n`, then `l`, then `m` from `-l` to `l`.
    functions: Vec<BasisFunction>,
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Radial coefficient `q_kl^nu`.
pub fn q_coefficient(k: usize, l: usize, nu: usize) -> f64 {
    let sign = |e: usize| if e % 2 == 0 { 1.0 } else { -1.0 };
    sign(k) / 4f64.powi(k as i32)
        * ((2 * l + 4 * k + 3) as f64 / 3.0).sqrt()
        * binom(2 * k, k)
        * sign(nu)
        * binom(k, nu)
        * binom(2 * (k + l + nu) + 1, 2 * k)
        / binom(k + l + nu, k)
}

type Poly = BTreeMap<(u8, u8, u8), Complex64>;

fn add_term(p: &mut Poly, key: (usize, usize, usize), c: Complex64) {
    *p.entry((key.0 as u8, key.1 as u8, key.2 as u8)).or_default() += c;
}

/// Harmonic polynomial `e_l^m` for `0 <= m <= l`.
fn harmonic(l: usize, m: usize) -> Poly {
    let c = ((2 * l + 1) as f64 * factorial(l + m) * factorial(l - m)).sqrt() / factorial(l)
        / 2f64.powi(m as i32);
    let i_pow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    let mut out = Poly::new();
    let mut mu = 0;
    while 2 * mu <= l - m {
        let w = c * binom(l, mu) * binom(l - mu, m + mu) * (-0.25f64).powi(mu as i32);
        for a in 0..=m {
            // (i x - y)^m
            let wa = i_pow[a % 4] * (w * binom(m, a) * if (m - a) % 2 == 0 { 1.0 } else { -1.0 });
            for b in 0..=mu {
                // (x^2 + y^2)^mu
                let key = (a + 2 * b, m - a + 2 * mu - 2 * b, l - m - 2 * mu);
                add_term(&mut out, key, wa * binom(mu, b));
            }
        }
        mu += 1;
    }
    out
}

fn basis_polynomial(n: usize, l: usize, m: usize) -> Poly {
    let k = (n - l) / 2;
    let e = harmonic(l, m);
    let mut out = Poly::new();
    for nu in 0..=k {
        let q = q_coefficient(k, l, nu);
        // (x^2 + y^2 + z^2)^nu
        for a in 0..=nu {
            for b in 0..=nu - a {
                let g = nu - a - b;
                let w = q * factorial(nu) / (factorial(a) * factorial(b) * factorial(g));
                for (&(r, s, t), &c) in &e {
                    let key = (r as usize + 2 * a, s as usize + 2 * b, t as usize + 2 * g);
                    add_term(&mut out, key, c * w);
                }
            }
        }
    }
    out
}

fn to_terms(p: &Poly, map: impl Fn(Complex64) -> Complex64) -> Vec<Term> {
    p.iter()
        .filter(|(_, c)| c.norm() != 0.0)
        .map(|(&(r, s, t), &c)| Term { r, s, t, coeff: map(c) })
        .collect()
}

impl ZernikeBasis {
    pub fn new(max_order: usize) -> Result<Self, ZernikeError> {
        if max_order > MAX_ZERNIKE_ORDER {
            return Err(ZernikeError::OrderTooLarge(max_order));
        }
        let mut functions = Vec::new();
        for n in 0..=max_order {
            for l in (n % 2..=n).step_by(2) {
                let polys: Vec<Poly> = (0..=l).map(|m| basis_polynomial(n, l, m)).collect();
                for m in -(l as i32)..=l as i32 {
                    let a = m.unsigned_abs() as usize;
                    let terms = if m >= 0 {
                        to_terms(&polys[a], |c| c)
                    } else {
                        // Z_nl^{-m} = (-1)^m conj(Z_nl^m)
                        let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                        to_terms(&polys[a], |c| c.conj() * sign)
                    };
                    functions.push(BasisFunction { n, l, m, terms });
                }
            }
        }
        Ok(Self { max_order, functions })
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn functions(&self) -> &[BasisFunction] {
        &self.functions
    }

    pub fn get(&self, n: usize, l: usize, m: i32) -> Option<&BasisFunction> {
        self.functions.iter().find(|f| f.n == n && f.l == l && f.m == m)
    }

    /// Valid `(n, l)` pairs in storage order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self.functions.iter().map(|f| (f.n, f.l)).collect();
        out.dedup();
        out
    }
}

/// Moments `Omega_nl^m` in basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct ZernikeMoments {
    pub entries: Vec<((usize, usize, i32), Complex64)>,
}

impl ZernikeMoments {
    pub fn get(&self, n: usize, l: usize, m: i32) -> Option<Complex64> {
        self.entries
            .iter()
            .find(|(k, _)| *k == (n, l, m))
            .map(|(_, v)| *v)
    }
}

/// `Omega_nl^m = (3 / 4pi) * sum conj(chi_nlm^rst) * M_rst`.
pub fn moments_from_geometric(geometric: &MomentTable, basis: &ZernikeBasis) -> ZernikeMoments {
    assert!(geometric.order() >= basis.max_order(), "geometric moments of too low order");
    let entries = basis
        .functions
        .iter()
        .map(|f| {
            let sum: Complex64 = f
                .terms
                .iter()
                .map(|t| t.coeff.conj() * geometric.get(t.r as usize, t.s as usize, t.t as usize))
                .sum();
            ((f.n, f.l, f.m), sum * (3.0 / (4.0 * PI)))
        })
        .collect();
    ZernikeMoments { entries }
}

pub fn zernike_moments(grid: &VoxelGrid, basis: &ZernikeBasis) -> ZernikeMoments {
    moments_from_geometric(&geometric_moments(grid, basis.max_order()), basis)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZernikeDescriptor {
    /// `F_nl` for every valid `(n, l)`, ordered by `n` then `l`.
    pub f_nl: Vec<((usize, usize), f64)>,
}

impl ZernikeDescriptor {
    pub fn from_moments(moments: &ZernikeMoments) -> Self {
        let mut f_nl: Vec<((usize, usize), f64)> = Vec::new();
        for ((n, l, _), v) in &moments.entries {
            match f_nl.last_mut() {
                Some((key, acc)) if *key == (*n, *l) => *acc += v.norm_sqr(),
                _ => f_nl.push(((*n, *l), v.norm_sqr())),
            }
        }
        for (_, v) in &mut f_nl {
            *v = v.sqrt();
        }
        Self { f_nl }
    }

    pub fn get(&self, n: usize, l: usize) -> Option<f64> {
        self.f_nl.iter().find(|(k, _)| *k == (n, l)).map(|(_, v)| *v)
    }

    pub fn values(&self) -> Vec<f64> {
        self.f_nl.iter().map(|(_, v)| *v).collect()
    }
}

pub fn zernike_descriptor_with(grid: &VoxelGrid, basis: &ZernikeBasis) -> ZernikeDescriptor {
    ZernikeDescriptor::from_moments(&zernike_moments(grid, basis))
}

pub fn zernike_descriptor(grid: &VoxelGrid, max_order: usize) -> Result<ZernikeDescriptor, ZernikeError> {
    Ok(zernike_descriptor_with(grid, &ZernikeBasis::new(max_order)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_gamma_half(k2: usize) -> f64 {
        // ln Gamma(k2 / 2) for a positive integer k2.
        if k2 % 2 == 0 {
            (1..k2 / 2).map(|i| (i as f64).ln()).sum()
        } else {
            let k = (k2 - 1) / 2;
            // Gamma(k + 1/2) = (2k)! / (4^k k!) sqrt(pi)
            (1..=2 * k).map(|i| (i as f64).ln()).sum::<f64>()
                - k as f64 * 4f64.ln()
                - (1..=k).map(|i| (i as f64).ln()).sum::<f64>()
                + 0.5 * PI.ln()
        }
    }

    /// Exact integral of x^a y^b z^c over the unit ball.
    fn ball_monomial(a: usize, b: usize, c: usize) -> f64 {
        if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
            return 0.0;
        }
        let d = a + b + c + 3;
        2.0 * (ln_gamma_half(a + 1) + ln_gamma_half(b + 1) + ln_gamma_half(c + 1) - ln_gamma_half(d)).exp()
            / d as f64
    }

    fn exact_inner(f: &BasisFunction, g: &BasisFunction) -> Complex64 {
        let mut sum = Complex64::default();
        for u in &f.terms {
            for v in &g.terms {
                let w = ball_monomial((u.r + v.r) as usize, (u.s + v.s) as usize, (u.t + v.t) as usize);
                sum += u.coeff * v.coeff.conj() * w;
            }
        }
        sum * (3.0 / (4.0 * PI))
    }

    #[test]
    fn ball_monomial_oracle() {
        assert!((ball_monomial(0, 0, 0) - 4.0 * PI / 3.0).abs() < 1e-14);
        // int x^2 over the ball = (1/3) int r^2 = (1/3) 4pi/5
        assert!((ball_monomial(2, 0, 0) - 4.0 * PI / 15.0).abs() < 1e-14);
    }

    #[test]
    fn basis_is_orthonormal_exactly() {
        let basis = ZernikeBasis::new(8).unwrap();
        let fs = basis.functions();
        assert_eq!(fs.len(), 165);
        let mut worst: f64 = 0.0;
        for (i, f) in fs.iter().enumerate() {
            for g in &fs[i..] {
                let expected = if std::ptr::eq(f, g) { 1.0 } else { 0.0 };
                worst = worst.max((exact_inner(f, g) - expected).norm());
            }
        }
        assert!(worst < 1e-9, "worst orthonormality defect {worst}");
    }

    #[test]
    fn high_order_normalization() {
        let basis = ZernikeBasis::new(16).unwrap();
        for (n, l, m) in [(16, 0, 0), (16, 16, 16), (15, 7, -3), (14, 4, 2)] {
            let f = basis.get(n, l, m).unwrap();
            // Coefficients grow quickly with order, so the monomial sum itself
            // loses digits to cancellation.
            let v = exact_inner(f, f).re;
            assert!((v - 1.0).abs() < 1e-3, "({n},{l},{m}) {v}");
        }
    }

    #[test]
    fn structure_of_the_basis() {
        let basis = ZernikeBasis::new(6).unwrap();
        assert!(basis.get(1, 0, 0).is_none());
        assert!(basis.get(3, 2, 0).is_none());
        assert!(basis.get(2, 0, 0).is_some());
        for f in basis.functions() {
            assert!(f.l <= f.n && (f.n - f.l) % 2 == 0);
            assert!(f.terms.iter().all(|t| (t.r + t.s + t.t) as usize <= f.n));
        }
        assert_eq!(ZernikeBasis::new(21), Err(ZernikeError::OrderTooLarge(21)));
        assert!(ZernikeBasis::new(20).is_ok());
    }

    fn legendre_assoc(l: usize, m: usize, x: f64) -> f64 {
        // P_l^m without the Condon-Shortley phase, by upward recurrence.
        let mut pmm = 1.0;
        let s = (1.0 - x * x).max(0.0).sqrt();
        for i in 0..m {
            pmm *= (2 * i + 1) as f64 * s;
        }
        if l == m {
            return pmm;
        }
        let mut p1 = x * (2 * m + 1) as f64 * pmm;
        let mut p0 = pmm;
        for ll in m + 2..=l {
            let p2 = ((2 * ll - 1) as f64 * x * p1 - (ll + m - 1) as f64 * p0) / (ll - m) as f64;
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    fn jacobi(k: usize, alpha: f64, beta: f64, x: f64) -> f64 {
        let mut p0 = 1.0;
        if k == 0 {
            return p0;
        }
        let mut p1 = (alpha - beta) / 2.0 + (alpha + beta + 2.0) * x / 2.0;
        for n in 2..=k {
            let n = n as f64;
            let a = n + alpha;
            let b = n + beta;
            let c = a + b;
            let p2 = ((c - 1.0) * (c * (c - 2.0) * x + (alpha * alpha - beta * beta)) * p1
                - 2.0 * (a - 1.0) * (b - 1.0) * c * p0)
                / (2.0 * n * (c - n) * (c - 2.0));
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    /// |Z_nl^m| from the spherical form R_nl(r) Y_l^m, with R built from a
    /// Jacobi polynomial and normalized by quadrature.
    #[test]
    fn magnitude_matches_spherical_form() {
        let basis = ZernikeBasis::new(8).unwrap();
        let radial = |n: usize, l: usize, r: f64| r.powi(l as i32) * jacobi((n - l) / 2, 0.0, l as f64 + 0.5, 2.0 * r * r - 1.0);
        let norm = |n: usize, l: usize| {
            let steps = 20000;
            let h = 1.0 / steps as f64;
            let integral: f64 = (0..steps)
                .map(|i| {
                    let r = (i as f64 + 0.5) * h;
                    radial(n, l, r).powi(2) * r * r * h
                })
                .sum();
            (3.0 * integral).sqrt()
        };
        let points = [Vec3::new(0.3, -0.2, 0.5), Vec3::new(-0.6, 0.1, -0.25), Vec3::new(0.05, 0.7, 0.4)];
        for f in basis.functions() {
            let nrm = norm(f.n, f.l);
            let m = f.m.unsigned_abs() as usize;
            for p in &points {
                let r = p.norm();
                let y = (4.0 * PI * (2 * f.l + 1) as f64 / (4.0 * PI) * factorial(f.l - m) / factorial(f.l + m))
                    .sqrt()
                    * legendre_assoc(f.l, m, p.z / r).abs();
                let expected = radial(f.n, f.l, r).abs() / nrm * y;
                let got = f.eval(p).norm();
                assert!((got - expected).abs() < 1e-6 * (1.0 + expected), "{:?}: {got} vs {expected}", (f.n, f.l, f.m));
            }
        }
    }
}
