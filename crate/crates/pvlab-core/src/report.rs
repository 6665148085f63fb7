//! Reconstruction-error reports shared by the Gaussian and discrete oracles.

use alloc::string::String;
use alloc::vec::Vec;

use crate::context::Context;

/// Numerical thresholds separating round-off from genuine gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// A gap below this counts as equality.
    pub equality: f64,
    /// Allowed increase of L* along a nested chain.
    pub monotone: f64,
    /// Minimum gap required to call an improvement strict.
    pub strict_margin: f64,
    /// Allowed mismatch between the gap and its total-variance form.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { equality: 1e-10, monotone: 1e-9, strict_margin: 1e-6, identity: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub context: Context,
    /// Minimum reconstruction error `E[Var(x_T | x_S)]`.
    pub l_star: f64,
    /// `L*` of the previous context minus this one. `None` on the first row.
    pub gap_to_prev: Option<f64>,
    /// Expected conditional variance of the refined conditional mean over
    /// the newly added frames, computed independently of `gap_to_prev`.
    pub gap_identity: Option<f64>,
    pub equality: Option<bool>,
    /// Set when a context covariance had to be regularized.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub chain_kind: String,
    pub n_frames: usize,
    pub dim: usize,
    pub rows: Vec<OracleRow>,
}

impl OracleReport {
    pub fn l_stars(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.l_star).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.gap_to_prev).collect()
    }

    /// Index of the first row whose `L*` exceeds its predecessor by more
    /// than `tol`.
    pub fn first_monotonicity_violation(&self, tol: f64) -> Option<usize> {
        self.rows.iter().position(|r| r.gap_to_prev.is_some_and(|g| g < -tol))
    }

    pub fn is_monotone(&self, tol: f64) -> bool {
        self.first_monotonicity_violation(tol).is_none()
    }

    /// Largest disagreement between each gap and its total-variance form.
    pub fn max_identity_error(&self) -> f64 {
        self.rows
            .iter()
            .filter_map(|r| Some((r.gap_to_prev? - r.gap_identity?).abs()))
            .fold(0.0, f64::max)
    }
}
