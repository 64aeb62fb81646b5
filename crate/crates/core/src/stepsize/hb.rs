//! Polynomial stability toolkit: the bilinear map from Schur to Hurwitz
//! stability and the Hermite-Biehler interlacing test.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::poly;

/// Imaginary-part tolerance when deciding that a root of `S` or `Q` is real.
const REAL_ROOT_TOL: f64 = 1e-7;

/// Minimum separation between roots counted as distinct.
const SIMPLE_ROOT_SEP: f64 = 1e-9;

type C64 = Complex<f64>;

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

fn poly_mul(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = vec![c(0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(base: &[C64], k: usize) -> Vec<C64> {
    (0..k).fold(vec![c(1.0)], |acc, _| poly_mul(&acc, base))
}

/// `ℚ(z) = (z - 1)^d 𝕊((z + 1) / (z - 1))` for `𝕊` of degree `d`
/// (coefficients ascending).
///
/// `𝕊` is Schur stable exactly when `ℚ` is Hurwitz stable and keeps degree
/// `d` (a root of `𝕊` at 1 drops the degree of `ℚ`).
pub fn bilinear_transform(s: &[C64]) -> Result<Vec<C64>> {
    let lead = s
        .last()
        .ok_or_else(|| Error::invalid("polynomial", "empty coefficient list"))?;
    if lead.norm() == 0.0 {
        return Err(Error::invalid("polynomial", "zero leading coefficient"));
    }
    let d = s.len() - 1;
    let plus = [c(1.0), c(1.0)];
    let minus = [c(-1.0), c(1.0)];
    let mut q = vec![c(0.0); d + 1];
    for (k, sk) in s.iter().enumerate() {
        let term = poly_mul(&poly_pow(&plus, k), &poly_pow(&minus, d - k));
        for (acc, t) in q.iter_mut().zip(term) {
            *acc += sk * t;
        }
    }
    Ok(q)
}

/// Real polynomials `S`, `Q` with `ℚ(iw) = S(w) + i Q(w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialPair {
    pub s_coeffs: Vec<f64>,
    pub q_coeffs: Vec<f64>,
}

impl PolynomialPair {
    pub fn from_polynomial(q: &[C64]) -> Self {
        let mut power = c(1.0);
        let i = Complex::new(0.0, 1.0);
        let (mut s_coeffs, mut q_coeffs) = (Vec::with_capacity(q.len()), Vec::with_capacity(q.len()));
        for qk in q {
            let term = qk * power;
            s_coeffs.push(term.re);
            q_coeffs.push(term.im);
            power *= i;
        }
        Self { s_coeffs, q_coeffs }
    }

    /// `S(0) Q'(0) - S'(0) Q(0)`.
    pub fn origin_wronskian(&self) -> f64 {
        let at = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
        at(&self.s_coeffs, 0) * at(&self.q_coeffs, 1) - at(&self.s_coeffs, 1) * at(&self.q_coeffs, 0)
    }
}

/// Sorted real roots, or `None` when some root is complex or repeated.
fn simple_real_roots(coeffs: &[f64]) -> Result<Option<Vec<f64>>> {
    if coeffs.len() <= 1 {
        return Ok(Some(Vec::new()));
    }
    let Some(roots) = poly::all_real_roots(coeffs, REAL_ROOT_TOL)? else {
        return Ok(None);
    };
    let distinct = roots
        .windows(2)
        .all(|w| w[1] - w[0] > SIMPLE_ROOT_SEP * w[1].abs().max(1.0));
    Ok(distinct.then_some(roots))
}

/// Hermite-Biehler test: `ℚ` is Hurwitz stable iff the roots of `S` and `Q`
/// are real, simple and interlaced and `S(0)Q'(0) - S'(0)Q(0) > 0`.
pub fn hermite_biehler_hurwitz(pair: &PolynomialPair) -> Result<bool> {
    let scale = pair
        .s_coeffs
        .iter()
        .chain(&pair.q_coeffs)
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::invalid("polynomial", "zero polynomial"));
    }
    let s = poly::trim(&pair.s_coeffs, 1e-14 * scale);
    let q = poly::trim(&pair.q_coeffs, 1e-14 * scale);
    let degree = s.len().max(q.len()) - 1;
    if degree == 0 {
        return Ok(true);
    }
    let (Some(rs), Some(rq)) = (simple_real_roots(&s)?, simple_real_roots(&q)?) else {
        return Ok(false);
    };
    if rs.len().abs_diff(rq.len()) > 1 || rs.len() + rq.len() + 1 < 2 * degree {
        return Ok(false);
    }
    let mut merged: Vec<(f64, bool)> = rs
        .iter()
        .map(|&r| (r, true))
        .chain(rq.iter().map(|&r| (r, false)))
        .collect();
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let interlaced = merged.windows(2).all(|w| {
        w[0].1 != w[1].1 && w[1].0 - w[0].0 > SIMPLE_ROOT_SEP * w[1].0.abs().max(1.0)
    });
    let origin = PolynomialPair {
        s_coeffs: s,
        q_coeffs: q,
    }
    .origin_wronskian();
    Ok(interlaced && origin > 0.0)
}

/// Schur stability of `𝕊` through the bilinear map and Hermite-Biehler.
pub fn schur_via_hermite_biehler(s: &[C64]) -> Result<bool> {
    let q = bilinear_transform(s)?;
    let lead = q.last().expect("non-empty").norm();
    let scale = q.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if lead <= 1e-12 * scale {
        return Ok(false);
    }
    hermite_biehler_hurwitz(&PolynomialPair::from_polynomial(&q))
}

/// Largest real part among the roots (independent root-finder).
pub fn max_root_real_part(q: &[C64]) -> Result<f64> {
    Ok(poly::complex_roots(q)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Largest root modulus (independent root-finder).
pub fn max_root_modulus(s: &[C64]) -> Result<f64> {
    Ok(poly::complex_roots(s)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// `𝕊(z) = z - 1 + ϱλ - ϱ²λ²`, whose root is the eigenvalue
/// `1 - ϱλ + ϱ²λ²` of the `ε = ϱ` iteration.
pub fn step_polynomial(rho: f64, lambda: C64) -> Vec<C64> {
    let u = lambda * rho;
    vec![u - u * u - c(1.0), c(1.0)]
}
