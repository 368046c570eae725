//! Certified lower bounds on the logarithmic negativity of two-mode optical
//! states measured with photon-number-resolving weak homodyne detectors.

pub mod bound;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod linalg;
pub mod negativity;
pub mod sdp;

pub use error::{Error, Result};

/// Numerical tolerances shared across modules.
pub mod tolerances {
    pub const TOL_HERM: f64 = 1e-10;
    pub const TOL_TRACE: f64 = 1e-10;
    pub const TOL_PSD: f64 = 1e-9;
    pub const PROB_FLOOR: f64 = 1e-12;
    /// Maximum discarded coherent-state probability.
    pub const TAIL_TOL: f64 = 1e-6;
    pub const TOL_COMPLETE: f64 = 1e-6;
}
