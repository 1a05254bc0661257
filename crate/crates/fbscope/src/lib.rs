//! Numerical toolkit for one-phase Bernoulli free boundaries.
//!
//! The crate solves the singularly perturbed problem Δu_ε = β_ε(u_ε),
//! evaluates the Weiss monotonicity functional M = D - H and the frequency
//! N = (D - |B_1|)/H on gridded and closed-form fields, classifies free
//! boundary points by their density and frequency limits, and runs the
//! Jones-β / terminal-ball covering machinery, checking the quantitative
//! identities these objects satisfy at desk scale.

pub mod error;
pub mod geom;

pub mod field;

pub mod analytic;
pub mod functionals;
pub mod perturb;

pub use error::{Error, Result};

/// Toolkit version embedded in every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
