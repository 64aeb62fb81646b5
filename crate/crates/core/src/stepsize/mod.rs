//! Feasible step-size regions for the self-appraisal-coincident iteration
//! `I - ϱL + εϱL²` (fixed `ε`) and `I - ϱL + ϱ²L²` (`ε = ϱ`).

pub mod hb;

use std::f64::consts::PI;

use nalgebra::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, poly};
use crate::netcore::{has_spanning_tree, InteractingLaplacian};
use crate::spectral::eigen;

/// Endpoint accuracy of the bisection refinement.
pub const ENDPOINT_TOL: f64 = 1e-9;

/// Default θ-grid size for the sampled excluded roots.
pub const THETA_POINTS: usize = 720;

/// Margin by which `ϱ` must avoid a sampled excluded root.
pub const ROOT_MARGIN: f64 = 1e-6;

const RHO_MAX_CAP: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "epsilon")]
pub enum ScanMode {
    EpsFixed(f64),
    EpsEqualsRho,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionMethod {
    DirectScan,
    Corollary1,
    CubicCorrected,
    CubicPaper,
    TheoremHb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CubicVariant {
    Corrected,
    Paper,
}

/// Disjoint, sorted open intervals of admissible `ϱ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleRegion {
    pub intervals: Vec<(f64, f64)>,
    pub method: RegionMethod,
}

impl FeasibleRegion {
    pub fn contains(&self, rho: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo < rho && rho < hi)
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Largest distance between matching endpoints, or infinity when the
    /// interval counts differ.
    pub fn endpoint_distance(&self, other: &FeasibleRegion) -> f64 {
        if self.intervals.len() != other.intervals.len() {
            return f64::INFINITY;
        }
        self.intervals
            .iter()
            .zip(&other.intervals)
            .map(|(a, b)| (a.0 - b.0).abs().max((a.1 - b.1).abs()))
            .fold(0.0, f64::max)
    }
}

/// Nonzero eigenvalues of `L` (the zero eigenvalue of a spanning-tree
/// Laplacian is dropped).
pub fn nonzero_eigenvalues(l: &InteractingLaplacian) -> Result<Vec<Complex<f64>>> {
    if !has_spanning_tree(l) {
        return Err(Error::NoSpanningTree);
    }
    let zero_tol = 1e-9 * max_abs(l.matrix()).max(1.0);
    Ok(eigen(l.matrix())?
        .into_iter()
        .filter(|z| z.norm() > zero_tol)
        .collect())
}

/// Eigenvalues `λ - ελ²` of `L - εL²` for the nonzero `λ`.
fn shifted(lams: &[Complex<f64>], epsilon: f64) -> Vec<Complex<f64>> {
    lams.iter().map(|&l| l - l * l * epsilon).collect()
}

/// `2 max(1 / Re λ)` over `Re λ > 0`, capped; 1 when no `Re λ` is positive.
fn rho_max_from(lams: &[Complex<f64>]) -> f64 {
    let m = lams
        .iter()
        .filter(|z| z.re > 0.0)
        .map(|z| 1.0 / z.re)
        .fold(0.0, f64::max);
    if m == 0.0 {
        1.0
    } else {
        (2.0 * m).min(RHO_MAX_CAP)
    }
}

/// Default scan bound: `2 max(1/Re λ)` for `ε = ϱ`, and twice that over the
/// eigenvalues of `L - εL²` for a fixed `ε`.
pub fn default_rho_max(l: &InteractingLaplacian, mode: ScanMode) -> Result<f64> {
    let lams = nonzero_eigenvalues(l)?;
    Ok(match mode {
        ScanMode::EpsEqualsRho => rho_max_from(&lams),
        ScanMode::EpsFixed(e) => (2.0 * rho_max_from(&shifted(&lams, e))).min(RHO_MAX_CAP),
    })
}

/// `max_i |1 - ϱλ_i + εϱλ_i²|` (or with `ε = ϱ`).
pub fn max_magnitude(lams: &[Complex<f64>], mode: ScanMode, rho: f64) -> f64 {
    let eps = match mode {
        ScanMode::EpsFixed(e) => e,
        ScanMode::EpsEqualsRho => rho,
    };
    lams.iter()
        .map(|&l| (Complex::new(1.0, 0.0) - l * rho + l * l * (eps * rho)).norm())
        .fold(0.0, f64::max)
}

fn check_scan_args(grid_step: f64, rho_max: f64) -> Result<()> {
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::invalid("grid step", format!("{grid_step} is not positive")));
    }
    if !(rho_max > 0.0 && rho_max.is_finite()) {
        return Err(Error::invalid("rho_max", format!("{rho_max} is not positive")));
    }
    Ok(())
}

fn grid(grid_step: f64, rho_max: f64) -> Vec<f64> {
    let n = (rho_max / grid_step).ceil() as usize;
    (1..=n).map(|k| (k as f64 * grid_step).min(rho_max)).collect()
}

/// Bisection on a boolean predicate: `inside(a) != inside(b)`.
fn refine(inside: &(dyn Fn(f64) -> bool + Sync), mut a: f64, mut b: f64) -> f64 {
    let ins_a = inside(a);
    while (b - a).abs() > ENDPOINT_TOL {
        let mid = 0.5 * (a + b);
        if inside(mid) == ins_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Intervals of `(0, rho_max]` where `inside` holds, found on a grid and
/// refined by bisection. `ϱ → 0⁺` is probed separately.
fn scan(inside: &(dyn Fn(f64) -> bool + Sync), grid_step: f64, rho_max: f64) -> Vec<(f64, f64)> {
    let pts = grid(grid_step, rho_max);
    let flags: Vec<bool> = pts.par_iter().map(|&r| inside(r)).collect();
    let near_zero = inside(grid_step.min(rho_max) * 1e-6);
    let mut out = Vec::new();
    let mut start: Option<f64> = if near_zero { Some(0.0) } else { None };
    let mut prev_rho = 0.0;
    let mut prev_in = near_zero;
    for (&rho, &flag) in pts.iter().zip(&flags) {
        if flag != prev_in {
            let lo = if prev_rho == 0.0 { grid_step.min(rho_max) * 1e-6 } else { prev_rho };
            let edge = refine(inside, lo, rho);
            if flag {
                start = Some(edge);
            } else if let Some(s) = start.take() {
                out.push((s, edge));
            }
        }
        prev_rho = rho;
        prev_in = flag;
    }
    if let Some(s) = start {
        out.push((s, rho_max));
    }
    out
}

/// Ground-truth region `{ϱ : max_i |1 - ϱλ_i + εϱλ_i²| < 1}` by grid scan.
pub fn feasible_rho_direct(
    l: &InteractingLaplacian,
    mode: ScanMode,
    grid_step: f64,
    rho_max: f64,
) -> Result<FeasibleRegion> {
    check_scan_args(grid_step, rho_max)?;
    let lams = nonzero_eigenvalues(l)?;
    if let ScanMode::EpsFixed(e) = mode {
        if !e.is_finite() {
            return Err(Error::invalid("epsilon", "not finite"));
        }
    }
    let inside = |rho: f64| max_magnitude(&lams, mode, rho) < 1.0;
    Ok(FeasibleRegion {
        intervals: scan(&inside, grid_step, rho_max),
        method: RegionMethod::DirectScan,
    })
}

/// `(ϱ, max magnitude)` samples over the grid, for plotting.
pub fn magnitude_samples(
    l: &InteractingLaplacian,
    mode: ScanMode,
    grid_step: f64,
    rho_max: f64,
) -> Result<Vec<(f64, f64)>> {
    check_scan_args(grid_step, rho_max)?;
    let lams = nonzero_eigenvalues(l)?;
    Ok(grid(grid_step, rho_max)
        .into_par_iter()
        .map(|r| (r, max_magnitude(&lams, mode, r)))
        .collect())
}

/// Admissible `ε`: those with `Re(λ - ελ²) > 0` for every nonzero `λ`.
/// `lower < ε < upper`; infinite bounds mean no restriction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRange {
    pub lower: f64,
    pub upper: f64,
}

impl EpsilonRange {
    pub fn contains(&self, epsilon: f64) -> bool {
        self.lower < epsilon && epsilon < self.upper
    }

    /// The admissible positive `ε`, if any.
    pub fn positive_interval(&self) -> Option<(f64, f64)> {
        let lo = self.lower.max(0.0);
        (lo < self.upper).then_some((lo, self.upper))
    }
}

impl std::fmt::Display for EpsilonRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.lower, self.upper)
    }
}

/// Per eigenvalue: `|Re| = |Im|` leaves `ε` free; `|Re| > |Im|` gives
/// `ε < Re/(Re² - Im²)`; `|Re| < |Im|` gives `ε > Re/(Re² - Im²)`.
pub fn epsilon_range(l: &InteractingLaplacian) -> Result<EpsilonRange> {
    Ok(epsilon_range_from(&nonzero_eigenvalues(l)?))
}

/// [`epsilon_range`] for a given set of nonzero eigenvalues.
pub fn epsilon_range_from(lams: &[Complex<f64>]) -> EpsilonRange {
    let mut range = EpsilonRange {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };
    for z in lams {
        let gap = z.re * z.re - z.im * z.im;
        let tol = 1e-12 * z.norm_sqr();
        if gap > tol {
            range.upper = range.upper.min(z.re / gap);
        } else if gap < -tol {
            range.lower = range.lower.max(z.re / gap);
        }
    }
    range
}

/// `(0, min_i 2Re(λ★_i)/|λ★_i|²)` over the eigenvalues `λ★_i` of `L - εL²`.
pub fn feasible_rho_corollary1(l: &InteractingLaplacian, epsilon: f64) -> Result<FeasibleRegion> {
    let range = epsilon_range(l)?;
    if !range.contains(epsilon) {
        return Err(Error::EpsilonOutOfRange {
            epsilon,
            range: range.to_string(),
        });
    }
    let lams = nonzero_eigenvalues(l)?;
    let bound = shifted(&lams, epsilon)
        .iter()
        .filter(|z| z.re > 0.0)
        .map(|z| 2.0 * z.re / z.norm_sqr())
        .fold(f64::INFINITY, f64::min);
    let intervals = if bound.is_finite() {
        vec![(0.0, bound)]
    } else {
        vec![(0.0, RHO_MAX_CAP)]
    };
    Ok(FeasibleRegion {
        intervals,
        method: RegionMethod::Corollary1,
    })
}

/// Cubic coefficients `(a, b, c, d)` of `aϱ³ + bϱ² + cϱ + d < 0`.
pub fn cubic_coefficients(lambda: Complex<f64>, variant: CubicVariant) -> [f64; 4] {
    let (x, y) = (lambda.re, lambda.im);
    let m2 = lambda.norm_sqr();
    match variant {
        CubicVariant::Corrected => [m2 * m2, -2.0 * x * m2, 3.0 * x * x - y * y, -2.0 * x],
        CubicVariant::Paper => {
            let g = x * x - y * y;
            [4.0 * x * x + g * g, 2.0 * x * g - 4.0 * x * y, 3.0 * x * x - y * y, -2.0 * x]
        }
    }
}

/// Region where every per-eigenvalue cubic is negative, from its exact
/// positive roots.
pub fn feasible_rho_cubic(l: &InteractingLaplacian, variant: CubicVariant) -> Result<FeasibleRegion> {
    let lams = nonzero_eigenvalues(l)?;
    let method = match variant {
        CubicVariant::Corrected => RegionMethod::CubicCorrected,
        CubicVariant::Paper => RegionMethod::CubicPaper,
    };
    let cubics: Vec<[f64; 4]> = lams.iter().map(|&z| cubic_coefficients(z, variant)).collect();
    if cubics.is_empty() {
        return Ok(FeasibleRegion {
            intervals: vec![(0.0, RHO_MAX_CAP)],
            method,
        });
    }
    let mut cuts = vec![0.0];
    for &[a, b, c, d] in &cubics {
        cuts.extend(poly::cubic_real_roots(a, b, c, d).into_iter().filter(|&r| r > 0.0));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * x.abs().max(1.0));
    let last = *cuts.last().expect("non-empty");
    cuts.push(2.0 * last.max(1.0) + 1.0);
    let negative_everywhere = |rho: f64| {
        cubics
            .iter()
            .all(|&[a, b, c, d]| poly::eval(&[d, c, b, a], rho) < 0.0)
    };
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        if !negative_everywhere(0.5 * (w[0] + w[1])) {
            continue;
        }
        match intervals.last_mut() {
            Some(prev) if prev.1 == w[0] => prev.1 = w[1],
            _ => intervals.push((w[0], w[1])),
        }
    }
    if intervals.last().is_some_and(|iv| iv.1 == *cuts.last().expect("non-empty")) {
        return Err(Error::Numerical("cubic region is unbounded".into()));
    }
    Ok(FeasibleRegion { intervals, method })
}

/// Region where every `𝕊_i(z) = z - 1 + ϱλ_i - ϱ²λ_i²` passes the
/// bilinear + Hermite-Biehler Schur test, by grid scan.
pub fn feasible_rho_hb(l: &InteractingLaplacian, grid_step: f64, rho_max: f64) -> Result<FeasibleRegion> {
    check_scan_args(grid_step, rho_max)?;
    let lams = nonzero_eigenvalues(l)?;
    let inside = |rho: f64| {
        lams.iter().all(|&lam| {
            hb::schur_via_hermite_biehler(&hb::step_polynomial(rho, lam)).unwrap_or(false)
        })
    };
    Ok(FeasibleRegion {
        intervals: scan(&inside, grid_step, rho_max),
        method: RegionMethod::TheoremHb,
    })
}

/// Per-eigenvalue diagnostics of the closed-form `ε = ϱ` criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenDiagnostics {
    pub lambda: (f64, f64),
    /// `f_i(ϱ, λ_i, arg λ_i)`; absent for real `λ_i`.
    pub f_value: Option<f64>,
    /// `(θ, [ϱ_1, ϱ_2, ϱ_3, ϱ_4])`; a root is absent where its square root
    /// is not real or its denominator vanishes.
    pub excluded_roots: Vec<(f64, [Option<f64>; 4])>,
    /// `|1 - ϱλ_i + ϱ²λ_i²|`.
    pub magnitude: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepSizeDiagnostics {
    pub rho: f64,
    pub eigen: Vec<EigenDiagnostics>,
    /// `ϱ` stays `ROOT_MARGIN` away from every sampled excluded root.
    pub avoids_roots_some_theta: bool,
    /// No eigenvalue has `ϱ` within `ROOT_MARGIN` of an excluded root for
    /// every sampled `θ`.
    pub avoids_roots_all_theta: bool,
    /// Closed-form verdict: real `λ_i` need `ϱ < 1/λ_i`; complex `λ_i` need
    /// `f_i > 0` and `avoids_roots_some_theta`.
    pub hb_verdict: bool,
    /// `max_i |1 - ϱλ_i + ϱ²λ_i²| < 1`.
    pub direct_verdict: bool,
    /// Bilinear transform + Hermite-Biehler on each `𝕊_i`.
    pub bilinear_hb_verdict: bool,
}

/// `f_i(ϱ, λ, arg λ)` of the closed-form `ε = ϱ` criterion.
pub fn f_value(rho: f64, lambda: Complex<f64>) -> f64 {
    let (m, phi) = (lambda.norm(), lambda.arg());
    let (cp, sp2) = (phi.cos(), (2.0 * phi).sin());
    -rho.powi(3) * m.powi(3) + rho * rho * m * m * cp * cp - 2.0 * rho * m * sp2 - rho * m + 2.0 * cp
}

/// `ϱ_{1..4}(θ)` from the discriminants `Δx`, `Δy`.
pub fn excluded_roots(lambda: Complex<f64>, theta: f64) -> [Option<f64>; 4] {
    let (m, phi) = (lambda.norm(), lambda.arg());
    let (cp, sp) = (phi.cos(), phi.sin());
    let (c2, s2) = ((2.0 * phi).cos(), (2.0 * phi).sin());
    let dx = m * m * (cp * cp * (8.0 * theta.cos() - 7.0) + 4.0 * (1.0 - theta.cos()));
    let dy = m * m * (sp * sp - 4.0 * s2 * theta.sin());
    let pair = |center: f64, disc: f64, denom: f64| -> [Option<f64>; 2] {
        if disc < 0.0 || denom.abs() <= 1e-14 * m * m {
            return [None, None];
        }
        let r = disc.sqrt();
        [Some((center + r) / denom), Some((center - r) / denom)]
    };
    let [r1, r2] = pair(m * cp, dx, 2.0 * m * m * c2);
    let [r3, r4] = pair(m * sp, dy, 2.0 * m * m * s2);
    [r1, r2, r3, r4]
}

/// Evaluates the closed-form `ε = ϱ` conditions at `ϱ` on a θ-grid of
/// `theta_points` samples, next to the direct and bilinear verdicts.
pub fn theorem_hb_check(
    l: &InteractingLaplacian,
    rho: f64,
    theta_points: usize,
) -> Result<StepSizeDiagnostics> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::invalid("rho", format!("{rho} is not positive")));
    }
    let lams = nonzero_eigenvalues(l)?;
    let imag_tol = 1e-9 * max_abs(l.matrix()).max(1.0);
    let thetas: Vec<f64> = (0..theta_points.max(1))
        .map(|k| 2.0 * PI * k as f64 / theta_points.max(1) as f64)
        .collect();
    let near = |r: &Option<f64>| r.is_some_and(|r| (r - rho).abs() <= ROOT_MARGIN);

    let mut eigen_diag = Vec::with_capacity(lams.len());
    let (mut some_ok, mut all_ok, mut hb_ok) = (true, true, true);
    for &lam in &lams {
        let magnitude = (Complex::new(1.0, 0.0) - lam * rho + lam * lam * (rho * rho)).norm();
        if lam.im.abs() <= imag_tol {
            hb_ok &= rho < 1.0 / lam.re;
            eigen_diag.push(EigenDiagnostics {
                lambda: (lam.re, lam.im),
                f_value: None,
                excluded_roots: Vec::new(),
                magnitude,
            });
            continue;
        }
        let f = f_value(rho, lam);
        let roots: Vec<(f64, [Option<f64>; 4])> = thetas
            .iter()
            .map(|&t| (t, excluded_roots(lam, t)))
            .filter(|(_, r)| r.iter().any(Option::is_some))
            .collect();
        let hits = roots.iter().filter(|(_, r)| r.iter().any(near)).count();
        some_ok &= hits == 0;
        all_ok &= hits < thetas.len();
        hb_ok &= f > 0.0;
        eigen_diag.push(EigenDiagnostics {
            lambda: (lam.re, lam.im),
            f_value: Some(f),
            excluded_roots: roots,
            magnitude,
        });
    }
    let direct_verdict = eigen_diag.iter().all(|e| e.magnitude < 1.0);
    let bilinear_hb_verdict = lams
        .iter()
        .map(|&lam| hb::schur_via_hermite_biehler(&hb::step_polynomial(rho, lam)))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .all(|b| b);
    Ok(StepSizeDiagnostics {
        rho,
        eigen: eigen_diag,
        avoids_roots_some_theta: some_ok,
        avoids_roots_all_theta: all_ok,
        hb_verdict: hb_ok && some_ok,
        direct_verdict,
        bilinear_hb_verdict,
    })
}
