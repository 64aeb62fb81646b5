//! Validated matrix types for the interaction and appraisal networks, the
//! conversions between stochastic and Laplacian forms, and topology checks.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for structural checks (row sums, zero patterns).
pub const TOL_STRUCT: f64 = 1e-12;

fn check_square(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(what, "non-finite entry"));
    }
    Ok(())
}

/// Laplacian of the interaction graph: zero row sums, non-positive
/// off-diagonal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractingLaplacian(DMatrix<f64>);

impl InteractingLaplacian {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tol(m, TOL_STRUCT)
    }

    pub fn with_tol(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        check_square(&m, "Laplacian")?;
        let n = m.nrows();
        for i in 0..n {
            let row_sum: f64 = m.row(i).iter().sum();
            if row_sum.abs() > tol {
                return Err(Error::invalid(
                    "Laplacian",
                    format!("row {} sums to {row_sum:e}, expected 0", i + 1),
                ));
            }
            for j in 0..n {
                let v = m[(i, j)];
                if i == j && v < -tol {
                    return Err(Error::invalid(
                        "Laplacian",
                        format!("negative diagonal entry {v} at ({}, {})", i + 1, j + 1),
                    ));
                }
                if i != j && v > tol {
                    return Err(Error::invalid(
                        "Laplacian",
                        format!("positive off-diagonal entry {v} at ({}, {})", i + 1, j + 1),
                    ));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Nonnegative row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix(DMatrix<f64>);

impl StochasticMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tol(m, TOL_STRUCT)
    }

    pub fn with_tol(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        check_square(&m, "stochastic matrix")?;
        for (i, row) in m.row_iter().enumerate() {
            if let Some(v) = row.iter().find(|&&v| v < -tol) {
                return Err(Error::invalid(
                    "stochastic matrix",
                    format!("negative entry {v} in row {}", i + 1),
                ));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::invalid(
                    "stochastic matrix",
                    format!("row {} sums to {s}, expected 1", i + 1),
                ));
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AppraisalKind {
    Cooperative,
    Antagonistic,
}

/// Signed appraisal matrix. Cooperative matrices (all entries nonnegative)
/// need row absolute sums in `(0, 1]`; antagonistic ones need them equal to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AppraisalMatrix {
    m: DMatrix<f64>,
    kind: AppraisalKind,
}

impl AppraisalMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tol(m, TOL_STRUCT)
    }

    pub fn with_tol(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        check_square(&m, "appraisal matrix")?;
        let kind = if m.iter().all(|&v| v >= 0.0) {
            AppraisalKind::Cooperative
        } else {
            AppraisalKind::Antagonistic
        };
        for (i, row) in m.row_iter().enumerate() {
            let s: f64 = row.iter().map(|v| v.abs()).sum();
            let ok = match kind {
                AppraisalKind::Cooperative => s > 0.0 && s <= 1.0 + tol,
                AppraisalKind::Antagonistic => (s - 1.0).abs() <= tol,
            };
            if !ok {
                let expect = match kind {
                    AppraisalKind::Cooperative => "in (0, 1]",
                    AppraisalKind::Antagonistic => "equal to 1",
                };
                return Err(Error::invalid(
                    "appraisal matrix",
                    format!("row {} has absolute sum {s}, expected {expect}", i + 1),
                ));
            }
        }
        Ok(Self { m, kind })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn kind(&self) -> AppraisalKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }
}

/// Diagonal of per-agent susceptibility factors; every factor is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityMatrix(DVector<f64>);

impl SusceptibilityMatrix {
    pub fn new(diag: DVector<f64>) -> Result<Self> {
        Self::with_tol(diag, TOL_STRUCT)
    }

    pub fn with_tol(diag: DVector<f64>, tol: f64) -> Result<Self> {
        if let Some((i, v)) = diag
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || v.abs() <= tol)
        {
            return Err(Error::invalid(
                "susceptibility",
                format!("factor {} is {v}; factors must be finite and nonzero", i + 1),
            ));
        }
        Ok(Self(diag))
    }

    pub fn from_slice(diag: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(diag))
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(DVector::from_element(n, value))
    }

    pub fn diag(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.0)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Multi-issue dependence structure coupling an agent's positions across issues.
#[derive(Debug, Clone, PartialEq)]
pub struct MidsMatrix(DMatrix<f64>);

impl MidsMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_square(&m, "MiDS matrix")?;
        if m.nrows() == 0 {
            return Err(Error::invalid("MiDS matrix", "needs at least one issue"));
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn issues(&self) -> usize {
        self.0.nrows()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(&self.0 * factor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConversionParams {
    epsilon: f64,
}

impl ConversionParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid("step size", format!("epsilon must be > 0, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Everything an analysis needs: susceptibilities, interaction Laplacian,
/// appraisal matrix, and optionally the multi-issue coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub lambda: SusceptibilityMatrix,
    pub laplacian: InteractingLaplacian,
    pub appraisal: AppraisalMatrix,
    pub mids: Option<MidsMatrix>,
}

impl SystemSpec {
    pub fn new(
        lambda: SusceptibilityMatrix,
        laplacian: InteractingLaplacian,
        appraisal: AppraisalMatrix,
    ) -> Result<Self> {
        let n = laplacian.dim();
        if lambda.dim() != n || appraisal.dim() != n {
            return Err(Error::Dimension(format!(
                "susceptibility has {} agents, Laplacian {}, appraisal {}",
                lambda.dim(),
                n,
                appraisal.dim()
            )));
        }
        Ok(Self {
            lambda,
            laplacian,
            appraisal,
            mids: None,
        })
    }

    pub fn with_mids(mut self, mids: MidsMatrix) -> Self {
        self.mids = Some(mids);
        self
    }

    pub fn without_mids(mut self) -> Self {
        self.mids = None;
        self
    }

    pub fn with_lambda(mut self, lambda: SusceptibilityMatrix) -> Result<Self> {
        if lambda.dim() != self.agents() {
            return Err(Error::Dimension("susceptibility size differs from agent count".into()));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn agents(&self) -> usize {
        self.laplacian.dim()
    }

    pub fn issues(&self) -> usize {
        self.mids.as_ref().map_or(1, MidsMatrix::issues)
    }

    /// `Λ L` (diagonal scaling of the Laplacian rows).
    pub fn lambda_laplacian(&self) -> DMatrix<f64> {
        let mut m = self.laplacian.matrix().clone();
        for (i, mut row) in m.row_iter_mut().enumerate() {
            row *= self.lambda.diag()[i];
        }
        m
    }

    /// `Λ L D`.
    pub fn coupling(&self) -> DMatrix<f64> {
        self.lambda_laplacian() * self.appraisal.matrix()
    }

    /// Issue-free iteration matrix `I - Λ L D`.
    pub fn iteration_matrix(&self) -> DMatrix<f64> {
        let n = self.agents();
        DMatrix::identity(n, n) - self.coupling()
    }
}

pub fn matrix_from_rows(rows: &[&[f64]]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Dimension(format!(
            "row {} has {} entries, expected {ncols}",
            i + 1,
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// `L = (I - P) / ε`, the Laplacian whose Euler step reproduces `P`.
pub fn stochastic_to_laplacian(
    p: &StochasticMatrix,
    params: ConversionParams,
) -> Result<InteractingLaplacian> {
    let n = p.matrix().nrows();
    let l = (DMatrix::identity(n, n) - p.matrix()) / params.epsilon();
    // zero the row sums exactly: put any rounding residue on the diagonal
    let mut l = l;
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| l[(i, j)]).sum();
        l[(i, i)] = -off;
    }
    InteractingLaplacian::new(l)
}

/// `P = I - ε L`; fails when `ε` makes an entry negative.
pub fn laplacian_to_stochastic(
    l: &InteractingLaplacian,
    params: ConversionParams,
) -> Result<StochasticMatrix> {
    let n = l.dim();
    let p = DMatrix::identity(n, n) - l.matrix() * params.epsilon();
    if let Some(((i, j), v)) = p
        .iter()
        .enumerate()
        .map(|(k, v)| ((k % n, k / n), v))
        .find(|(_, v)| **v < -TOL_STRUCT)
    {
        return Err(Error::invalid(
            "step size",
            format!(
                "epsilon {} makes entry ({}, {}) negative ({v})",
                params.epsilon(),
                i + 1,
                j + 1
            ),
        ));
    }
    StochasticMatrix::with_tol(p.map(|v| v.max(0.0)), 1e-10)
}

/// Entrywise absolute value of an appraisal matrix whose rows have absolute
/// sum 1.
pub fn abs_matrix(d: &AppraisalMatrix) -> Result<StochasticMatrix> {
    for (i, row) in d.matrix().row_iter().enumerate() {
        let s: f64 = row.iter().map(|v| v.abs()).sum();
        if (s - 1.0).abs() > TOL_STRUCT {
            return Err(Error::invalid(
                "appraisal matrix",
                format!("row {} has absolute sum {s}, expected 1", i + 1),
            ));
        }
    }
    StochasticMatrix::new(d.matrix().abs())
}

/// Whether two matrices have the same nonzero pattern (self-loops included).
pub fn same_topology(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<bool> {
    same_topology_with_tol(a, b, TOL_STRUCT)
}

pub fn same_topology_with_tol(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "cannot compare topologies of {:?} and {:?} matrices",
            a.shape(),
            b.shape()
        )));
    }
    let (r, c) = a.shape();
    for i in 0..r {
        for j in 0..c {
            if (a[(i, j)].abs() > tol) != (b[(i, j)].abs() > tol) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Agents from which every other agent can be reached. An edge `j -> i`
/// exists when `l_ij < -tol` (agent `i` listens to agent `j`).
pub fn spanning_tree_roots(l: &InteractingLaplacian) -> Vec<usize> {
    let m = l.matrix();
    let n = m.nrows();
    (0..n)
        .filter(|&root| {
            let mut seen = vec![false; n];
            seen[root] = true;
            let mut queue = VecDeque::from([root]);
            let mut count = 1;
            while let Some(j) = queue.pop_front() {
                for i in 0..n {
                    if !seen[i] && i != j && m[(i, j)] < -TOL_STRUCT {
                        seen[i] = true;
                        count += 1;
                        queue.push_back(i);
                    }
                }
            }
            count == n
        })
        .collect()
}

pub fn has_spanning_tree(l: &InteractingLaplacian) -> bool {
    !spanning_tree_roots(l).is_empty()
}

/// Classifies a raw signed matrix after checking `0 < Σ_j |δ_ij| <= 1`.
pub fn appraisal_kind(d: &DMatrix<f64>) -> Result<AppraisalKind> {
    check_square(d, "appraisal matrix")?;
    for (i, row) in d.row_iter().enumerate() {
        let s: f64 = row.iter().map(|v| v.abs()).sum();
        if !(s > 0.0 && s <= 1.0 + TOL_STRUCT) {
            return Err(Error::invalid(
                "appraisal matrix",
                format!("row {} has absolute sum {s}, expected in (0, 1]", i + 1),
            ));
        }
    }
    let min = d.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if min >= 0.0 {
        AppraisalKind::Cooperative
    } else {
        AppraisalKind::Antagonistic
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        matrix_from_rows(rows).unwrap()
    }

    #[test]
    fn experiment_p_gives_published_laplacian() {
        let p = fixtures::sec5_p();
        let l = stochastic_to_laplacian(&p, ConversionParams::new(1.0).unwrap()).unwrap();
        let row1 = [0.78, -0.12, -0.36, -0.3];
        for (j, v) in row1.iter().enumerate() {
            assert!((l.matrix()[(0, j)] - v).abs() < 1e-15);
        }
        let expect = fixtures::sec5_laplacian();
        assert!((l.matrix() - expect.matrix()).abs().max() < 1e-15);
    }

    #[test]
    fn identity_maps_to_zero_laplacian() {
        let p = StochasticMatrix::new(DMatrix::identity(3, 3)).unwrap();
        let l = stochastic_to_laplacian(&p, ConversionParams::new(0.3).unwrap()).unwrap();
        assert_eq!(l.matrix(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn swap_matrix_laplacian() {
        let p = StochasticMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let l = stochastic_to_laplacian(&p, ConversionParams::new(1.0).unwrap()).unwrap();
        assert_eq!(l.matrix(), &m(&[&[1.0, -1.0], &[-1.0, 1.0]]));
    }

    #[test]
    fn laplacian_back_to_stochastic() {
        let zero = InteractingLaplacian::new(DMatrix::zeros(2, 2)).unwrap();
        let p = laplacian_to_stochastic(&zero, ConversionParams::new(1.0).unwrap()).unwrap();
        assert_eq!(p.matrix(), &DMatrix::identity(2, 2));

        let l = InteractingLaplacian::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]).unwrap();
        let p = laplacian_to_stochastic(&l, ConversionParams::new(0.5).unwrap()).unwrap();
        assert_eq!(p.matrix(), &m(&[&[0.5, 0.5], &[0.5, 0.5]]));

        assert!(laplacian_to_stochastic(&l, ConversionParams::new(2.0).unwrap()).is_err());
    }

    #[test]
    fn experiment_round_trip() {
        let p = fixtures::sec5_p();
        let eps = ConversionParams::new(1.0).unwrap();
        let back = laplacian_to_stochastic(&stochastic_to_laplacian(&p, eps).unwrap(), eps).unwrap();
        assert!((back.matrix() - p.matrix()).abs().max() <= 1e-14);
    }

    #[test]
    fn conversion_rejects_bad_inputs() {
        assert!(ConversionParams::new(0.0).is_err());
        assert!(ConversionParams::new(-1.0).is_err());
        assert!(StochasticMatrix::from_rows(&[&[0.5, 0.4], &[0.0, 1.0]]).is_err());
        assert!(StochasticMatrix::from_rows(&[&[1.5, -0.5], &[0.0, 1.0]]).is_err());
    }

    #[test]
    fn abs_matrix_examples() {
        let id = AppraisalMatrix::new(DMatrix::identity(3, 3)).unwrap();
        assert_eq!(abs_matrix(&id).unwrap().matrix(), &DMatrix::identity(3, 3));
        let neg = AppraisalMatrix::new(-DMatrix::<f64>::identity(3, 3)).unwrap();
        assert_eq!(abs_matrix(&neg).unwrap().matrix(), &DMatrix::identity(3, 3));
        let d2 = fixtures::sec5_d2();
        let star = abs_matrix(&d2).unwrap();
        let row: Vec<f64> = star.matrix().row(0).iter().copied().collect();
        assert_eq!(row, vec![0.2, 0.2, 0.3, 0.3]);
        // cooperative with a short row is valid but has no stochastic abs matrix
        let short = AppraisalMatrix::from_rows(&[&[0.5, 0.0], &[0.0, 1.0]]).unwrap();
        assert!(abs_matrix(&short).is_err());
    }

    #[test]
    fn topology_examples() {
        let d2 = fixtures::sec5_d2();
        let star = abs_matrix(&d2).unwrap();
        assert!(same_topology(d2.matrix(), star.matrix()).unwrap());
        assert!(!same_topology(&DMatrix::identity(2, 2), &DMatrix::zeros(2, 2)).unwrap());
        let ones = DMatrix::from_element(2, 2, 1.0);
        assert!(!same_topology(&ones, &DMatrix::zeros(2, 2)).unwrap());
        // D1 and D2 differ only in signs, so their zero patterns coincide
        assert!(same_topology(fixtures::sec5_d1().matrix(), d2.matrix()).unwrap());
        assert!(same_topology(&DMatrix::zeros(2, 2), &DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn spanning_tree_examples() {
        let l = fixtures::example1_laplacian();
        assert!(has_spanning_tree(&l));
        let zero = InteractingLaplacian::new(DMatrix::zeros(3, 3)).unwrap();
        assert!(!has_spanning_tree(&zero));
        let sec5 = fixtures::sec5_laplacian();
        assert_eq!(spanning_tree_roots(&sec5), vec![2]);
        let single = InteractingLaplacian::new(DMatrix::zeros(1, 1)).unwrap();
        assert!(has_spanning_tree(&single));
    }

    #[test]
    fn appraisal_kind_examples() {
        assert_eq!(appraisal_kind(fixtures::sec5_d1().matrix()).unwrap(), AppraisalKind::Cooperative);
        assert_eq!(appraisal_kind(fixtures::sec5_d2().matrix()).unwrap(), AppraisalKind::Antagonistic);
        assert_eq!(appraisal_kind(&DMatrix::identity(3, 3)).unwrap(), AppraisalKind::Cooperative);
        assert!(appraisal_kind(&m(&[&[0.8, 0.8], &[0.0, 1.0]])).is_err());
        assert!(appraisal_kind(&DMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn antagonistic_rows_must_sum_to_one() {
        assert!(AppraisalMatrix::from_rows(&[&[0.5, -0.4], &[0.0, 1.0]]).is_err());
        assert!(AppraisalMatrix::from_rows(&[&[0.5, 0.4], &[0.0, 1.0]]).is_ok());
    }

    #[test]
    fn laplacian_validation() {
        assert!(InteractingLaplacian::from_rows(&[&[1.0, -0.5], &[0.0, 0.0]]).is_err());
        assert!(InteractingLaplacian::from_rows(&[&[-1.0, 1.0], &[0.0, 0.0]]).is_err());
        assert!(SusceptibilityMatrix::from_slice(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn system_dimension_check() {
        let lam = SusceptibilityMatrix::from_slice(&[1.0, 1.0]).unwrap();
        let err = SystemSpec::new(lam, fixtures::example1_laplacian(), fixtures::example1_appraisal());
        assert!(matches!(err, Err(Error::Dimension(_))));
    }
}
