use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("parse error in {source_name} at line {line}: {reason}")]
    Parse {
        source_name: String,
        line: u64,
        reason: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("ambiguous unit-eigenvalue multiplicity: {count} eigenvalues near 1 with spread {spread:e}")]
    AmbiguousMultiplicity { count: usize, spread: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("interaction graph has no spanning tree")]
    NoSpanningTree,

    #[error("epsilon {epsilon} outside the admissible range {range}")]
    EpsilonOutOfRange { epsilon: f64, range: String },

    #[error("defective unit eigenvalue: |left'right| = {0:e} too small to normalize")]
    Defective(f64),

    #[error("sample cap {m_cap} reached with residual {gamma:e} above target {gamma0:e}")]
    SampleCapExhausted { m_cap: usize, gamma: f64, gamma0: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (as opposed to malformed input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::AmbiguousMultiplicity { .. }
                | Error::Defective(_)
                | Error::SampleCapExhausted { .. }
                | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
