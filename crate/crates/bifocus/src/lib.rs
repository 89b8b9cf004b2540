//! Scenario runner and file formats for `bifocus-core`.
//!
//! A scenario is a JSON file naming a kind (`validate`, `raise`, `order_n`,
//! `renorm` or `universal`), its input models and numeric knobs. Running it
//! writes `results.csv`, `summary.txt` and, for the raising kinds,
//! `output_model.json` into a run directory.

pub mod config;
pub mod io;
pub mod parallel;
pub mod reference;
pub mod runner;

use std::path::Path;

pub use reference::gen_reference;
pub use runner::{run_scenario, RunReport};

/// Why a run stopped, grouped by exit code.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Failure {
    /// Bad input: config, model files or a library precondition.
    #[error("{0}")]
    Contract(String),
    /// The numerics failed: divergence, exhausted search, degenerate `k`.
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Contract(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Io(_) => 1,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

impl From<bifocus_core::Error> for Failure {
    fn from(e: bifocus_core::Error) -> Self {
        if e.is_contract_violation() {
            Failure::Contract(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}
