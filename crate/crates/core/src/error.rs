use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e} after {subdivisions} subdivisions")]
    QuadratureNonConvergence {
        estimate: f64,
        tolerance: f64,
        subdivisions: usize,
    },

    #[error("gaussian fit rejected: R^2 = {r2:.4} below {threshold}")]
    FitFailure { r2: f64, threshold: f64 },

    #[error("found {found} envelope maxima, at least {required} are needed")]
    InsufficientPeaks { found: usize, required: usize },

    #[error("node {index} lost at t = {time_fs} fs")]
    NodeLost { index: usize, time_fs: f64 },

    #[error("regression is rank deficient: all abscissae are equal")]
    RankDeficient,
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::InsufficientPeaks { .. } | Error::RankDeficient
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::QuadratureNonConvergence { .. } => "quadrature_non_convergence",
            Error::FitFailure { .. } => "fit_failure",
            Error::InsufficientPeaks { .. } => "insufficient_peaks",
            Error::NodeLost { .. } => "node_lost",
            Error::RankDeficient => "rank_deficient",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
