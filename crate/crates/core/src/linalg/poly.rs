//! Real and complex polynomial helpers. Coefficients are stored in ascending
//! degree order: `c[0] + c[1] x + c[2] x^2 + ...`.

use nalgebra::{Complex, DMatrix};

use super::eigen;
use crate::error::{Error, Result};

/// Drops trailing coefficients whose magnitude is at or below `tol`.
pub fn trim(coeffs: &[f64], tol: f64) -> Vec<f64> {
    let mut v = coeffs.to_vec();
    while v.last().is_some_and(|c| c.abs() <= tol) {
        v.pop();
    }
    v
}

pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn eval_complex(coeffs: &[Complex<f64>], z: Complex<f64>) -> Complex<f64> {
    coeffs
        .iter()
        .rev()
        .fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c)
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// All complex roots of a real polynomial (companion-matrix eigenvalues,
/// refined by a few Newton steps).
///
/// The polynomial must have a nonzero leading coefficient; the zero polynomial
/// is rejected.
pub fn roots(coeffs: &[f64]) -> Result<Vec<Complex<f64>>> {
    let c = trim(coeffs, 0.0);
    if c.is_empty() {
        return Err(Error::invalid("polynomial", "zero polynomial has no finite root set"));
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let mut comp = DMatrix::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -c[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    let raw = eigen::eigenvalues(&comp)?;
    let cc: Vec<Complex<f64>> = c.iter().map(|&x| Complex::new(x, 0.0)).collect();
    let dc: Vec<Complex<f64>> = derivative(&c)
        .into_iter()
        .map(|x| Complex::new(x, 0.0))
        .collect();
    Ok(raw
        .into_iter()
        .map(|mut z| {
            for _ in 0..3 {
                let f = eval_complex(&cc, z);
                let df = eval_complex(&dc, z);
                if df.norm() == 0.0 {
                    break;
                }
                let step = f / df;
                let next = z - step;
                if eval_complex(&cc, next).norm() < f.norm() {
                    z = next;
                } else {
                    break;
                }
            }
            if z.im.abs() <= 1e-14 * z.norm().max(1.0) {
                z.im = 0.0;
            }
            z
        })
        .collect())
}

/// All roots of a complex polynomial, from the complex Schur form of its
/// companion matrix.
pub fn complex_roots(coeffs: &[Complex<f64>]) -> Result<Vec<Complex<f64>>> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|z| z.norm() == 0.0) {
        c.pop();
    }
    if c.is_empty() {
        return Err(Error::invalid("polynomial", "zero polynomial has no finite root set"));
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = c[deg];
    let mut comp = DMatrix::from_element(deg, deg, Complex::new(0.0, 0.0));
    for j in 0..deg {
        comp[(0, j)] = -c[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        comp[(i, i - 1)] = Complex::new(1.0, 0.0);
    }
    let schur = nalgebra::linalg::Schur::try_new(comp, 1e-15, 10_000)
        .ok_or(Error::NoConvergence { iterations: 10_000 })?;
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("complex Schur form is not triangular".into()))?;
    Ok(ev.iter().copied().collect())
}

/// Real roots of a real polynomial, if every root is real.
///
/// Returns `None` when some root has a non-negligible imaginary part
/// (`|Im| > imag_tol * max(1, |z|)`).
pub fn all_real_roots(coeffs: &[f64], imag_tol: f64) -> Result<Option<Vec<f64>>> {
    let rs = roots(coeffs)?;
    if rs.iter().any(|z| z.im.abs() > imag_tol * z.norm().max(1.0)) {
        return Ok(None);
    }
    let mut re: Vec<f64> = rs.into_iter().map(|z| z.re).collect();
    re.sort_by(f64::total_cmp);
    Ok(Some(re))
}

/// Real roots of `a x^3 + b x^2 + c x + d`, sorted ascending, duplicates kept
/// once.
///
/// Uses the trigonometric / Cardano closed form, then checks every root by a
/// Newton polish. If the closed form disagrees with the sign pattern of the
/// cubic, the roots are isolated by bisection between critical points.
/// Lower-degree cases (leading coefficients zero) are handled directly.
pub fn cubic_real_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        return quadratic_real_roots(b, c, d);
    }
    let closed = cubic_closed_form(a, b, c, d);
    let coeffs = [d, c, b, a];
    let polished: Vec<f64> = closed
        .iter()
        .map(|&x| newton_polish(&coeffs, x))
        .collect();
    let bisected = bisect_all_roots(&coeffs);
    if polished.len() == bisected.len()
        && polished
            .iter()
            .zip(&bisected)
            .all(|(p, q)| (p - q).abs() <= 1e-8 * p.abs().max(1.0))
    {
        polished
    } else {
        bisected
    }
}

fn quadratic_real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let q = if q == 0.0 { -0.5 * disc.sqrt() } else { q };
    let mut r = vec![q / a, c / q];
    r.sort_by(f64::total_cmp);
    r
}

fn cubic_closed_form(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    // depressed cubic t^3 + p t + q with x = t - b/(3a)
    let bn = b / a;
    let cn = c / a;
    let dn = d / a;
    let shift = bn / 3.0;
    let p = cn - bn * bn / 3.0;
    let q = 2.0 * bn * bn * bn / 27.0 - bn * cn / 3.0 + dn;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut out = if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        vec![u + v - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    };
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * x.abs().max(1.0));
    out
}

fn newton_polish(coeffs: &[f64], mut x: f64) -> f64 {
    let dc = derivative(coeffs);
    for _ in 0..4 {
        let f = eval(coeffs, x);
        let df = eval(&dc, x);
        if df == 0.0 || f == 0.0 {
            break;
        }
        let next = x - f / df;
        if eval(coeffs, next).abs() <= f.abs() {
            x = next;
        } else {
            break;
        }
    }
    x
}

/// Bisection on monotone pieces delimited by the critical points of the cubic.
fn bisect_all_roots(coeffs: &[f64]) -> Vec<f64> {
    let dc = derivative(coeffs);
    let mut breaks = quadratic_real_roots(dc[2], dc[1], dc[0]);
    // Cauchy bound on root magnitude
    let lead = coeffs[3];
    let bound = 1.0 + coeffs[..3].iter().map(|c| (c / lead).abs()).fold(0.0, f64::max);
    breaks.retain(|x| x.abs() < bound);
    let mut pts = vec![-bound];
    pts.extend(breaks);
    pts.push(bound);
    let mut out = Vec::new();
    for w in pts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let flo = eval(coeffs, lo);
        let fhi = eval(coeffs, hi);
        if flo == 0.0 {
            out.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            // a double root sits exactly on a critical point
            if fhi.abs() <= 1e-12 * bound.powi(3).max(1.0) && hi < bound {
                out.push(hi);
            }
            continue;
        }
        out.push(bisect(coeffs, lo, hi, 1e-13));
    }
    if eval(coeffs, bound) == 0.0 {
        out.push(bound);
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-10 * x.abs().max(1.0));
    out
}

/// Bisection for a sign change of `coeffs` on `[lo, hi]`.
pub fn bisect(coeffs: &[f64], mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = eval(coeffs, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * mid.abs().max(1.0) {
            break;
        }
        let fm = eval(coeffs, mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_with_three_real_roots() {
        // (x-1)(x-2)(x-3) = x^3 - 6x^2 + 11x - 6
        let r = cubic_real_roots(1.0, -6.0, 11.0, -6.0);
        assert_eq!(r.len(), 3);
        for (x, e) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cubic_with_one_real_root() {
        // 16x^3 - 16x^2 + 12x - 4 has its only real root at 1/2
        let r = cubic_real_roots(16.0, -16.0, 12.0, -4.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cubic_with_double_root() {
        // (x-1)^2 (x+2) = x^3 - 3x + 2
        let r = cubic_real_roots(1.0, 0.0, -3.0, 2.0);
        assert_eq!(r.len(), 2, "{r:?}");
        assert!((r[0] + 2.0).abs() < 1e-10);
        assert!((r[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_cubic_falls_back_to_quadratic() {
        let r = cubic_real_roots(0.0, 1.0, 0.0, -4.0);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 2.0).abs() < 1e-14 && (r[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn roots_of_quadratic_with_complex_pair() {
        let r = roots(&[1.0, -1.0, 1.0]).unwrap();
        assert_eq!(r.len(), 2);
        for z in r {
            assert!((z.re - 0.5).abs() < 1e-12);
            assert!((z.im.abs() - 0.75f64.sqrt()).abs() < 1e-12);
        }
        assert!(all_real_roots(&[1.0, -1.0, 1.0], 1e-9).unwrap().is_none());
    }

    #[test]
    fn zero_polynomial_rejected() {
        assert!(roots(&[0.0, 0.0]).is_err());
        assert!(roots(&[3.0]).unwrap().is_empty());
    }
}
