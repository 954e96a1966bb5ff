//! Centralized numerical tolerances.
//!
//! Every algebraic sanity check in the crate (normalization, hermiticity,
//! positivity, probability bookkeeping) uses [`Tolerances::algebraic`];
//! the Fock-truncation check of the photon-pair source uses
//! [`Tolerances::truncation`]. Both can be overridden through the runner
//! configuration.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Tolerance for norm / trace / hermiticity / eigenvalue checks.
    pub algebraic: f64,
    /// Maximum admissible relative weight above the Fock cutoff.
    pub truncation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebraic: 1e-9,
            truncation: 1e-4,
        }
    }
}

/// Default algebraic tolerance (norms, traces, eigenvalues).
pub const ALGEBRAIC: f64 = 1e-9;
/// Default truncation-error budget for the two-mode squeezed source.
pub const TRUNCATION: f64 = 1e-4;
