use serde::{Deserialize, Serialize};

/// Numerical tolerances shared across the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Slack allowed when checking set membership.
    pub membership: f64,
    /// Minimum eigenvalue accepted for matrices that must be PSD.
    pub psd: f64,
    /// Relative symmetry error accepted on input matrices.
    pub symmetry: f64,
    /// Threshold below which a row normal counts as zero.
    pub zero_row: f64,
    /// Cost difference below which two candidates are considered tied.
    pub cost_compare: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { membership: 1e-6, psd: 1e-9, symmetry: 1e-9, zero_row: 1e-12, cost_compare: 1e-9 }
    }
}

pub const MEMBERSHIP_TOL: f64 = 1e-6;
pub const PSD_TOL: f64 = 1e-9;
