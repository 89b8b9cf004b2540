use alloc::boxed::Box;
use alloc::string::String;

use crate::raiser::RaiseSolution;

pub type Result<T> = core::result::Result<T, Error>;

/// Every failure the library reports.
///
/// [`Error::is_contract_violation`] separates caller mistakes from numeric
/// failures; the CLI maps the two classes to distinct exit codes.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("{op}: contract violation: {detail}")]
    Contract { op: &'static str, detail: String },

    #[error("{op}: degree caps differ ({left} vs {right})")]
    CapMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },

    #[error("{op}: domain error: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("{op}: out of range: {detail}")]
    OutOfRange { op: &'static str, detail: String },

    #[error("{op}: precondition failed: {detail}")]
    Precondition { op: &'static str, detail: String },

    #[error("{0}: non-finite value")]
    NonFinite(&'static str),

    #[error("tangency_index: not a tangency (normalized constant term {constant:e})")]
    NotATangency { constant: f64 },

    #[error("{op}: no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence {
        op: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("select_k_sequence: no admissible k in [{k_min}, {k_max}] ({branch}); nearest miss {near_miss:?}")]
    SearchExhausted {
        k_min: u32,
        k_max: u32,
        branch: &'static str,
        /// The candidate that came closest, with its smallest margin.
        near_miss: Option<(u32, f64)>,
    },

    #[error("solve_raise_closed_form: branch flip, radicand {radicand:e} for even root of degree {degree}")]
    BranchFlip { radicand: f64, degree: usize },

    #[error("newton_polish: diverged after {iterations} iterations, best residual {best_residual:e}")]
    Divergence {
        iterations: usize,
        best_residual: f64,
        best: Box<RaiseSolution>,
    },

    #[error("k={k}: symbolically admissible, numerically degenerate ({detail})")]
    DegenerateK { k: u32, detail: String },

    #[error("{op}: ill-posed: {detail}")]
    IllPosed { op: &'static str, detail: String },
}

impl Error {
    pub(crate) fn contract(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Contract {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn precondition(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// Caller-side mistakes (bad shapes, bad indices, violated preconditions)
    /// as opposed to numeric failures of a well-posed request.
    pub fn is_contract_violation(&self) -> bool {
        matches!(
            self,
            Error::Contract { .. }
                | Error::CapMismatch { .. }
                | Error::Domain { .. }
                | Error::OutOfRange { .. }
                | Error::Precondition { .. }
                | Error::NotATangency { .. }
        )
    }
}
