//! Jet-level machinery for corank-2 homoclinic tangencies at bi-focus orbits.
//!
//! The crate is `no_std` with `alloc`. Modules build on each other in this
//! order: [`jets`] (truncated bivariate series), [`model`] (local and global
//! maps), [`tangency`] (index detection and splitting), [`raiser`] (the
//! index-raising solve and its orchestration) and [`renorm`] (first-return
//! maps, rescaling and universal approximation).

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod jets;
pub mod math;
pub mod model;
pub mod raiser;
pub mod renorm;
pub mod tangency;

pub use error::{Error, Result};
pub use jets::{ConstantTerm, Jet2, JetPair};
pub use model::{BiFocusSpectrum, GenericityReport, GlobalMapModel, PhasePoint};
pub use raiser::{RaiseSolution, RotatedLead, TangencyBag};
pub use renorm::{RenormalizedMap, RescalingScheme, SchemeVariant};
pub use tangency::{SplittingChart, TangencyIndex};
