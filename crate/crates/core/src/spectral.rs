//! Spectral analysis of the iteration matrix `I - Λ L D`: consensus,
//! convergence and stability verdicts, the limit direction, and the
//! multi-issue classification of `(I - Λ L D) ⊗ C`.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigen, max_abs};
use crate::netcore::{AppraisalKind, AppraisalMatrix, MidsMatrix, SystemSpec, TOL_STRUCT};

/// Default tolerance for deciding that an eigenvalue equals 1.
pub const TOL_EIG: f64 = 1e-8;

/// Singular-value threshold for the unit-eigenvalue null vectors.
const NULL_THRESHOLD: f64 = 1e-10;

/// Smallest admissible `|ς'ι|` before normalisation is refused.
const MIN_OVERLAP: f64 = 1e-12;

/// Eigenvalues of a square real matrix.
pub fn eigen(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    eigen::eigenvalues(m)
}

/// Eigenvector of `m` for `lambda`, with `‖Mv - λv‖∞ ≤ 1e-8 ‖M‖` checked.
pub fn eigenvector(m: &DMatrix<f64>, lambda: Complex<f64>) -> Result<DVector<Complex<f64>>> {
    let v = eigen::eigenvector(m, lambda)?;
    let mc = m.map(|x| Complex::new(x, 0.0));
    let res = (&mc * &v - v.map(|x| x * lambda))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if res > 1e-8 * max_abs(m).max(1.0) {
        return Err(Error::Numerical(format!(
            "{lambda} is not an eigenvalue to working accuracy (residual {res:e})"
        )));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// All opinions reach a common value.
    Consensus,
    /// Every opinion settles, possibly at different values (clusters).
    Convergence,
    /// All opinions go to zero.
    Stability,
    DivergentOrMarginal,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Consensus => "consensus",
            Classification::Convergence => "convergence",
            Classification::Stability => "stability",
            Classification::DivergentOrMarginal => "divergent-or-marginal",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub unit_eigen_count: usize,
    /// Largest modulus among the eigenvalues not counted as 1.
    pub rho_rest: f64,
    /// Left unit eigenvector ς, scaled so that `ς'ι = 1`.
    pub left_vec: Option<DVector<f64>>,
    /// Right unit eigenvector ι, scaled so its largest entry is `+1`.
    pub right_vec: Option<DVector<f64>>,
    pub classification: Classification,
}

impl SpectralReport {
    /// `ι ς'`, the projector onto the limit direction.
    pub fn limit_projector(&self) -> Option<DMatrix<f64>> {
        match (&self.left_vec, &self.right_vec) {
            (Some(l), Some(r)) => Some(r * l.transpose()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitPrediction {
    pub phi: DVector<f64>,
    /// Common value `ς'ξ(0)` when the system reaches consensus.
    pub alpha: Option<f64>,
}

/// Classifies the issue-free system from the spectrum of `I - Λ L D`.
pub fn classify_system(sys: &SystemSpec, tol_eig: f64) -> Result<SpectralReport> {
    let m = sys.iteration_matrix();
    let ones = DVector::from_element(sys.agents(), 1.0);
    // ι ∥ 1 exactly when Λ L D 1 = 0 (the unit eigenvalue being simple)
    let drift = (sys.coupling() * &ones).amax();
    let ones_is_fixed = drift <= tol_eig * max_abs(&m).max(1.0);
    classify_iteration(&m, ones_is_fixed, tol_eig)
}

/// Classification of an arbitrary iteration matrix; `ones_is_fixed` says
/// whether the all-ones vector is a unit eigenvector.
pub fn classify_iteration(
    m: &DMatrix<f64>,
    ones_is_fixed: bool,
    tol_eig: f64,
) -> Result<SpectralReport> {
    let eigenvalues = eigen(m)?;
    let one = Complex::new(1.0, 0.0);
    let unit: Vec<Complex<f64>> = eigenvalues
        .iter()
        .copied()
        .filter(|z| (z - one).norm() <= tol_eig)
        .collect();
    if unit.len() >= 2 {
        let spread = unit
            .iter()
            .flat_map(|a| unit.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        if spread > tol_eig / 10.0 {
            return Err(Error::AmbiguousMultiplicity {
                count: unit.len(),
                spread,
            });
        }
    }
    let unit_eigen_count = unit.len();
    let rho_rest = eigenvalues
        .iter()
        .filter(|z| (*z - one).norm() > tol_eig)
        .map(|z| z.norm())
        .fold(0.0, f64::max);

    let classification = if unit_eigen_count == 0 && rho_rest < 1.0 - tol_eig {
        Classification::Stability
    } else if unit_eigen_count == 1 && rho_rest < 1.0 - tol_eig {
        if ones_is_fixed {
            Classification::Consensus
        } else {
            Classification::Convergence
        }
    } else {
        Classification::DivergentOrMarginal
    };

    let (left_vec, right_vec) = if unit_eigen_count == 1 {
        match unit_vectors(m) {
            Ok((l, r)) => (Some(l), Some(r)),
            Err(e) if classification == Classification::DivergentOrMarginal => {
                log::debug!("no unit eigenvectors for a marginal system: {e}");
                (None, None)
            }
            Err(e) => return Err(e),
        }
    } else {
        (None, None)
    };

    Ok(SpectralReport {
        eigenvalues,
        unit_eigen_count,
        rho_rest,
        left_vec,
        right_vec,
        classification,
    })
}

/// Left and right null vectors of `M - I`, normalised so that `ς'ι = 1`.
fn unit_vectors(m: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = m.nrows();
    let shifted = m - DMatrix::identity(n, n);
    let mut right = eigen::real_null_vector(&shifted, NULL_THRESHOLD)?;
    let left = eigen::real_null_vector(&shifted.transpose(), NULL_THRESHOLD)?;
    let overlap = left.dot(&right);
    if overlap.abs() < MIN_OVERLAP {
        return Err(Error::Defective(overlap.abs()));
    }
    let pivot = right
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .expect("non-empty vector");
    right /= pivot;
    let left = &left / left.dot(&right);
    Ok((left, right))
}

/// Predicted steady state `φ = ι ς' ξ(0)`.
pub fn predict_limit(sys: &SystemSpec, xi0: &DVector<f64>) -> Result<LimitPrediction> {
    let report = classify_system(sys, TOL_EIG)?;
    predict_limit_from(&report, xi0)
}

pub fn predict_limit_from(report: &SpectralReport, xi0: &DVector<f64>) -> Result<LimitPrediction> {
    match report.classification {
        Classification::Consensus | Classification::Convergence => {}
        Classification::Stability => {
            return Ok(LimitPrediction {
                phi: DVector::zeros(xi0.len()),
                alpha: None,
            })
        }
        Classification::DivergentOrMarginal => {
            return Err(Error::Precondition(
                "no limit exists for a divergent or marginal system".into(),
            ))
        }
    }
    let (left, right) = match (&report.left_vec, &report.right_vec) {
        (Some(l), Some(r)) => (l, r),
        _ => return Err(Error::Precondition("report carries no unit eigenvectors".into())),
    };
    if left.len() != xi0.len() {
        return Err(Error::Dimension(format!(
            "initial state has {} entries, system has {} agents",
            xi0.len(),
            left.len()
        )));
    }
    let weight = left.dot(xi0);
    let phi = right * weight;
    let alpha = (report.classification == Classification::Consensus).then(|| phi.mean());
    Ok(LimitPrediction { phi, alpha })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsensusStructure {
    RowSumsZero,
    RowSumsMinusOne,
    Neither,
}

/// Row-sum structure that lets an antagonistic appraisal network reach
/// consensus: `D 1 = 0` or `D 1 = -1`.
pub fn antagonistic_consensus_structure(d: &AppraisalMatrix) -> Result<ConsensusStructure> {
    if d.kind() != AppraisalKind::Antagonistic {
        return Err(Error::Precondition("appraisal network is not antagonistic".into()));
    }
    let sums: Vec<f64> = d.matrix().row_iter().map(|r| r.sum()).collect();
    Ok(if sums.iter().all(|s| s.abs() <= TOL_STRUCT) {
        ConsensusStructure::RowSumsZero
    } else if sums.iter().all(|s| (s + 1.0).abs() <= TOL_STRUCT) {
        ConsensusStructure::RowSumsMinusOne
    } else {
        ConsensusStructure::Neither
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiIssueVerdict {
    Stable,
    Convergent,
    DivergentOrMarginal,
}

#[derive(Debug, Clone)]
pub struct MultiIssueReport {
    pub verdict: MultiIssueVerdict,
    /// `|λ_max(C)|`.
    pub c_radius: f64,
    /// Largest modulus of `I - Λ L D` once the unit eigenvalue is removed.
    pub rest_radius: f64,
    pub c_eigenvalues: Vec<Complex<f64>>,
    /// Set when `|λ★_max · λ_max(C)| < 1` holds but `|λ_max(C)| > 1`, which
    /// still diverges along the unit direction.
    pub unit_direction_diverges: bool,
}

/// Stability / convergence of `ξ(k+1) = ((I - Λ L D) ⊗ C) ξ(k)`.
pub fn classify_multi_issue(sys: &SystemSpec, tol_eig: f64) -> Result<MultiIssueReport> {
    let c = sys
        .mids
        .as_ref()
        .ok_or_else(|| Error::Precondition("system has no issue-coupling matrix".into()))?;
    let issue_free = classify_system(sys, tol_eig)?;
    if issue_free.unit_eigen_count != 1 {
        return Err(Error::Precondition(format!(
            "I - ΛLD must have a simple eigenvalue 1, found {} unit eigenvalues",
            issue_free.unit_eigen_count
        )));
    }
    classify_kronecker(issue_free.rho_rest, c, tol_eig)
}

fn classify_kronecker(rest_radius: f64, c: &MidsMatrix, tol_eig: f64) -> Result<MultiIssueReport> {
    let c_eigenvalues = eigen(c.matrix())?;
    let c_radius = c_eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let product = rest_radius * c_radius;
    let unit_direction_diverges = product < 1.0 - tol_eig && c_radius > 1.0 + tol_eig;
    if unit_direction_diverges {
        log::warn!(
            "|λ★ λ_max(C)| = {product:.6} < 1 but |λ_max(C)| = {c_radius:.6} > 1; \
             the unit direction still grows"
        );
    }
    let verdict = if c_radius < 1.0 - tol_eig && product < 1.0 - tol_eig {
        MultiIssueVerdict::Stable
    } else if product < 1.0 - tol_eig
        && c_radius <= 1.0 + tol_eig
        && powers_converge(c, tol_eig)?
    {
        MultiIssueVerdict::Convergent
    } else {
        MultiIssueVerdict::DivergentOrMarginal
    };
    Ok(MultiIssueReport {
        verdict,
        c_radius,
        rest_radius,
        c_eigenvalues,
        unit_direction_diverges,
    })
}

/// Whether `lim C^k` exists: every eigenvalue is inside the unit disk except
/// possibly a semisimple eigenvalue 1.
pub fn powers_converge(c: &MidsMatrix, tol_eig: f64) -> Result<bool> {
    let ev = eigen(c.matrix())?;
    let one = Complex::new(1.0, 0.0);
    // defective unit eigenvalues split by about sqrt(machine eps), so the
    // cluster is gathered with a wider radius than tol_eig
    let cluster_radius = tol_eig.sqrt().max(tol_eig);
    let (unit, rest): (Vec<&Complex<f64>>, Vec<&Complex<f64>>) = ev
        .iter()
        .partition(|z| (*z - one).norm() <= cluster_radius);
    if rest.iter().any(|z| z.norm() >= 1.0 - tol_eig) {
        return Ok(false);
    }
    if unit.is_empty() {
        return Ok(true);
    }
    let n = c.issues();
    let shifted = c.matrix() - DMatrix::identity(n, n);
    let scale = max_abs(c.matrix()).max(1.0);
    let geometric = n - eigen::rank(&(shifted / scale), cluster_radius);
    Ok(geometric == unit.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::netcore::{InteractingLaplacian, SusceptibilityMatrix};

    fn sorted_re(ev: &[Complex<f64>]) -> Vec<f64> {
        let mut v: Vec<f64> = ev.iter().map(|z| z.re).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    #[test]
    fn example1_spectrum_and_consensus() {
        let sys = fixtures::example1();
        let report = classify_system(&sys, TOL_EIG).unwrap();
        let ev = sorted_re(&report.eigenvalues);
        for (got, want) in ev.iter().zip([1.0, 0.5276, 0.0474]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
        assert_eq!(report.classification, Classification::Consensus);
        assert_eq!(report.unit_eigen_count, 1);
        let iota = report.right_vec.as_ref().unwrap();
        assert!(iota.iter().all(|x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn c2_eigenvalues() {
        let ev = sorted_re(&eigen(fixtures::c2().matrix()).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn antagonistic_experiment_forms_clusters() {
        let sys = fixtures::sec5_antag_issue_free();
        let report = classify_system(&sys, TOL_EIG).unwrap();
        assert_eq!(report.classification, Classification::Convergence);
    }

    #[test]
    fn degroot_reduction_reaches_consensus() {
        let l = fixtures::sec5_laplacian();
        let sys = SystemSpec::new(
            SusceptibilityMatrix::uniform(4, 0.1).unwrap(),
            l,
            AppraisalMatrix::new(DMatrix::identity(4, 4)).unwrap(),
        )
        .unwrap();
        assert_eq!(
            classify_system(&sys, TOL_EIG).unwrap().classification,
            Classification::Consensus
        );
    }

    #[test]
    fn leader_system_limit_is_leader_opinion() {
        let sys = fixtures::sec5_coop_issue_free();
        let x0 = DVector::from_column_slice(&[25.0, 25.0, 75.0, 85.0]);
        let pred = predict_limit(&sys, &x0).unwrap();
        for v in pred.phi.iter() {
            assert!((v - 75.0).abs() < 1e-9);
        }
        assert!((pred.alpha.unwrap() - 75.0).abs() < 1e-9);
    }

    #[test]
    fn zero_initial_state_predicts_zero() {
        let pred = predict_limit(&fixtures::example1(), &DVector::zeros(3)).unwrap();
        assert_eq!(pred.phi, DVector::zeros(3));
    }

    #[test]
    fn divergent_system_has_no_limit() {
        // Λ large enough to push an eigenvalue out of the unit disk
        let sys = fixtures::example1()
            .with_lambda(SusceptibilityMatrix::uniform(3, 5.0).unwrap())
            .unwrap();
        let report = classify_system(&sys, TOL_EIG).unwrap();
        assert_eq!(report.classification, Classification::DivergentOrMarginal);
        assert!(predict_limit_from(&report, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn consensus_structures() {
        assert_eq!(
            antagonistic_consensus_structure(&fixtures::example1_appraisal()).unwrap(),
            ConsensusStructure::RowSumsZero
        );
        let neg = AppraisalMatrix::new(-DMatrix::<f64>::identity(3, 3)).unwrap();
        assert_eq!(
            antagonistic_consensus_structure(&neg).unwrap(),
            ConsensusStructure::RowSumsMinusOne
        );
        assert_eq!(
            antagonistic_consensus_structure(&fixtures::sec5_d2()).unwrap(),
            ConsensusStructure::Neither
        );
        assert!(antagonistic_consensus_structure(&fixtures::sec5_d1()).is_err());
    }

    #[test]
    fn multi_issue_verdicts() {
        let v = |s: &SystemSpec| classify_multi_issue(s, TOL_EIG).unwrap().verdict;
        assert_eq!(v(&fixtures::sec5_coop_stable()), MultiIssueVerdict::Stable);
        assert_eq!(v(&fixtures::sec5_antag_stable()), MultiIssueVerdict::Stable);
        assert_eq!(v(&fixtures::sec5_antag()), MultiIssueVerdict::Convergent);
        assert_eq!(v(&fixtures::sec5_coop()), MultiIssueVerdict::Convergent);
        let doubled = fixtures::sec5_coop_issue_free()
            .with_mids(MidsMatrix::new(DMatrix::identity(2, 2) * 2.0).unwrap());
        let report = classify_multi_issue(&doubled, TOL_EIG).unwrap();
        assert!(report.rest_radius > 0.5);
        assert_eq!(report.verdict, MultiIssueVerdict::DivergentOrMarginal);
        assert!(classify_multi_issue(&fixtures::sec5_coop_issue_free(), TOL_EIG).is_err());
    }

    #[test]
    fn multi_issue_requires_simple_unit_eigenvalue() {
        // L = 0 leaves every eigenvalue at 1
        let sys = SystemSpec::new(
            SusceptibilityMatrix::uniform(2, 1.0).unwrap(),
            InteractingLaplacian::new(DMatrix::zeros(2, 2)).unwrap(),
            AppraisalMatrix::new(DMatrix::identity(2, 2)).unwrap(),
        )
        .unwrap()
        .with_mids(fixtures::c1());
        assert!(matches!(
            classify_multi_issue(&sys, TOL_EIG),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn powers_converge_examples() {
        assert!(powers_converge(&fixtures::c1(), TOL_EIG).unwrap());
        let jordan = MidsMatrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        assert!(!powers_converge(&jordan, TOL_EIG).unwrap());
        assert!(powers_converge(&fixtures::c2_star(), TOL_EIG).unwrap());
        let flip = MidsMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        assert!(!powers_converge(&flip, TOL_EIG).unwrap());
        assert!(powers_converge(&MidsMatrix::new(DMatrix::identity(3, 3)).unwrap(), TOL_EIG).unwrap());
    }

    #[test]
    fn eigenvector_checks_residual() {
        let c2 = fixtures::c2();
        let v = eigenvector(c2.matrix(), Complex::new(0.3, 0.0)).unwrap();
        assert!((v[0] / v[1] + Complex::new(4.0 / 3.0, 0.0)).norm() < 1e-10);
        assert!(eigenvector(c2.matrix(), Complex::new(0.5, 0.0)).is_err());
    }
}
