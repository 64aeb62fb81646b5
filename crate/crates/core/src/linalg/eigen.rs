//! Dense nonsymmetric eigenvalue solver.
//!
//! The matrix is balanced, reduced to upper Hessenberg form with Householder
//! reflections, and then deflated with the Francis double-shift QR iteration.
//! Eigenvectors for a chosen eigenvalue come from the null space of
//! `M - lambda I` via a singular value decomposition.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Iteration budget per eigenvalue before giving up.
const MAX_ITS_PER_EIGENVALUE: usize = 60;

/// Eigenvalues of a square real matrix, in no particular order.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("matrix", "non-finite entry"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.clone();
    balance(&mut a);
    hessenberg(&mut a);
    hqr(a)
}

/// Eigenvalues sorted by decreasing modulus (ties broken by real then imaginary part).
pub fn eigenvalues_by_modulus(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let mut ev = eigenvalues(m)?;
    ev.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    Ok(ev)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// Scales rows and columns by powers of two so that their norms are comparable.
fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form (similarity transform).
fn hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let len = n - k - 1;
        let mut v: Vec<f64> = (0..len).map(|i| a[(k + 1 + i, k)]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A <- H A, H = I - 2 v v' / (v'v), acting on rows k+1..n
        for j in 0..n {
            let dot: f64 = (0..len).map(|i| v[i] * a[(k + 1 + i, j)]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in 0..len {
                a[(k + 1 + i, j)] -= s * v[i];
            }
        }
        // A <- A H, acting on columns k+1..n
        for i in 0..n {
            let dot: f64 = (0..len).map(|j| a[(i, k + 1 + j)] * v[j]).sum();
            let s = 2.0 * dot / vnorm2;
            for j in 0..len {
                a[(i, k + 1 + j)] -= s * v[j];
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix.
///
/// Indices inside follow the classical 1-based formulation; `h` maps them onto
/// the 0-based storage.
fn hqr(mut mat: DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = mat.nrows();
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    macro_rules! h {
        ($i:expr, $j:expr) => {
            mat[($i - 1, $j - 1)]
        };
    }

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.saturating_sub(1)).max(1)..=n {
            anorm += h!(i, j).abs();
        }
    }

    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = h!(l - 1, l - 1).abs() + h!(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h!(l, l - 1).abs() + s == s {
                    h!(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            x = h!(nn, nn);
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                y = h!(nn - 1, nn - 1);
                w = h!(nn, nn - 1) * h!(nn - 1, nn);
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if its == MAX_ITS_PER_EIGENVALUE {
                        return Err(Error::NoConvergence { iterations: its });
                    }
                    if its > 0 && its % 10 == 0 {
                        // exceptional shift
                        t += x;
                        for i in 1..=nn {
                            h!(i, i) -= x;
                        }
                        let s = h!(nn, nn - 1).abs() + h!(nn - 1, nn - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    loop {
                        z = h!(m, m);
                        r = x - z;
                        let s0 = y - z;
                        p = (r * s0 - w) / h!(m + 1, m) + h!(m, m + 1);
                        q = h!(m + 1, m + 1) - z - r - s0;
                        r = h!(m + 2, m + 1);
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = h!(m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs() * (h!(m - 1, m - 1).abs() + z.abs() + h!(m + 1, m + 1).abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        h!(i, i - 2) = 0.0;
                        if i != m + 2 {
                            h!(i, i - 3) = 0.0;
                        }
                    }
                    let mut k = m;
                    while k + 1 <= nn {
                        if k != m {
                            p = h!(k, k - 1);
                            q = h!(k + 1, k - 1);
                            r = 0.0;
                            if k != nn - 1 {
                                r = h!(k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    h!(k, k - 1) = -h!(k, k - 1);
                                }
                            } else {
                                h!(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = h!(k, j) + q * h!(k + 1, j);
                                if k != nn - 1 {
                                    p += r * h!(k + 2, j);
                                    h!(k + 2, j) -= p * z;
                                }
                                h!(k + 1, j) -= p * y;
                                h!(k, j) -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * h!(i, k) + y * h!(i, k + 1);
                                if k != nn - 1 {
                                    p += z * h!(i, k + 2);
                                    h!(i, k + 2) -= p * r;
                                }
                                h!(i, k + 1) -= p * q;
                                h!(i, k) -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex::new(wr[i], wi[i])).collect())
}

/// Unit-norm right singular vector for the smallest singular value of `a`.
///
/// Fails when more than one singular value lies at or below
/// `threshold * max(1, sigma_max)`, i.e. when the numerical null space has
/// dimension two or more.
pub fn real_null_vector(a: &DMatrix<f64>, threshold: f64) -> Result<DVector<f64>> {
    let n = a.ncols();
    if n == 0 || a.nrows() < n {
        return Err(Error::Dimension("null vector needs a non-empty square or tall matrix".into()));
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cutoff = threshold * smax.max(1.0);
    let zero_count = sv.iter().filter(|&&s| s <= cutoff).count();
    if zero_count > 1 {
        return Err(Error::Numerical(format!(
            "expected a one-dimensional null space, found dimension {zero_count}"
        )));
    }
    let idx = (0..sv.len())
        .min_by(|&i, &j| sv[i].total_cmp(&sv[j]))
        .expect("non-empty singular values");
    Ok(v_t.row(idx).transpose())
}

/// Numerical rank from singular values with a relative threshold.
pub fn rank(a: &DMatrix<f64>, rel_threshold: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_threshold * smax).count()
}

/// Eigenvector for a (possibly complex) eigenvalue of a real matrix.
///
/// Returns the right singular vector belonging to the smallest singular value
/// of `M - lambda I`, normalised to unit 2-norm.
pub fn eigenvector(m: &DMatrix<f64>, lambda: Complex<f64>) -> Result<DVector<Complex<f64>>> {
    if !m.is_square() {
        return Err(Error::Dimension("eigenvector needs a square matrix".into()));
    }
    let n = m.nrows();
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { lambda } else { Complex::new(0.0, 0.0) };
        Complex::new(m[(i, j)], 0.0) - d
    });
    let svd = shifted.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
    let sv = &svd.singular_values;
    let idx = (0..sv.len())
        .min_by(|&i, &j| sv[i].total_cmp(&sv[j]))
        .ok_or_else(|| Error::Dimension("empty matrix".into()))?;
    Ok(v_t.row(idx).adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let ev = eigenvalues(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(ev.len(), 3);
        for z in ev {
            assert!((z - Complex::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn two_by_two_real_pair() {
        let c2 = DMatrix::from_row_slice(2, 2, &[0.6, 0.4, 0.3, 0.7]);
        let ev = sorted(eigenvalues(&c2).unwrap());
        assert!((ev[0].re - 0.3).abs() < 1e-12 && ev[0].im.abs() < 1e-14);
        assert!((ev[1].re - 1.0).abs() < 1e-12 && ev[1].im.abs() < 1e-14);
    }

    #[test]
    fn rotation_gives_conjugate_pair() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let ev = sorted(eigenvalues(&m).unwrap());
        assert!((ev[0] - Complex::new(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - Complex::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn companion_of_known_quartic() {
        // (x-1)(x+2)(x^2+1) = x^4 + x^3 - x^2 + x - 2
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                -1.0, 1.0, -1.0, 2.0, //
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        );
        let ev = sorted(eigenvalues(&m).unwrap());
        let expect = [
            Complex::new(-2.0, 0.0),
            Complex::new(0.0, -1.0),
            Complex::new(0.0, 1.0),
            Complex::new(1.0, 0.0),
        ];
        for (a, b) in ev.iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn matches_nalgebra_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=12 {
            for _ in 0..20 {
                let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                let ours = eigenvalues(&m).unwrap();
                let theirs: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
                // greedy matching
                let mut used = vec![false; n];
                for z in &ours {
                    let (j, d) = theirs
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| !used[*j])
                        .map(|(j, w)| (j, (w - z).norm()))
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                        .unwrap();
                    used[j] = true;
                    assert!(d < 1e-8, "n={n} mismatch {d}");
                }
            }
        }
    }

    #[test]
    fn eigenvector_residual_is_small() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 1.0, 0.0, 3.0, -2.0]);
        let norm = m.abs().max();
        for lam in eigenvalues(&m).unwrap() {
            let v = eigenvector(&m, lam).unwrap();
            let mc = m.map(|x| Complex::new(x, 0.0));
            let r = &mc * &v - v.map(|x| x * lam);
            let res = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(res <= 1e-8 * norm, "residual {res}");
        }
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        assert!(eigenvalues(&DMatrix::zeros(2, 3)).is_err());
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(eigenvalues(&m).is_err());
    }

    #[test]
    fn null_vector_of_laplacian_is_ones() {
        let l = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0]);
        let v = real_null_vector(&l, 1e-10).unwrap();
        let s = v[0];
        for x in v.iter() {
            assert!((x - s).abs() < 1e-12);
        }
        assert_eq!(rank(&l, 1e-10), 2);
    }
}
