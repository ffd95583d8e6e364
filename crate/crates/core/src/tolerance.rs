//! Numerical policy shared by every module.
//!
//! All thresholds that decide between "zero" and "not zero" live here so the
//! eigensolver, the state validator and the minimizers agree with each other.

/// The set of thresholds used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigenvalues above `-psd_clamp` are clamped to zero; below it a matrix is not PSD.
    pub psd_clamp: f64,
    /// Eigenvalues (and probabilities) below this contribute nothing to an entropy.
    pub log_cutoff: f64,
    /// Eigenvalues above this count toward the numerical rank of a unit-trace state.
    pub rank_threshold: f64,
    /// Maximum allowed Hermiticity residual / trace deviation of a valid state.
    pub state_residual: f64,
    /// Slack allowed on the argument of the binary entropy.
    pub entropy_domain_slack: f64,
    /// POVM weights at or below this value are rejected.
    pub povm_weight_floor: f64,
    /// Four-element POVMs whose direction tetrahedron volume determinant is at or below this are coplanar.
    pub coplanarity_floor: f64,
    /// Largest condition number accepted when solving for POVM weights.
    pub max_condition: f64,
    /// Outcomes with probability below this are skipped.
    pub outcome_cutoff: f64,
    /// Deviations below this are reported as "orthogonal measurement is optimal".
    pub deviation_threshold: f64,
    /// Two discord values closer than this are treated as a tie (smaller m wins).
    pub tie_break: f64,
}

pub const TOL: Tolerances = Tolerances {
    psd_clamp: 1e-10,
    log_cutoff: 1e-14,
    rank_threshold: 1e-9,
    state_residual: 1e-10,
    entropy_domain_slack: 1e-12,
    povm_weight_floor: 1e-10,
    coplanarity_floor: 1e-8,
    max_condition: 1e10,
    outcome_cutoff: 1e-14,
    deviation_threshold: 1e-9,
    tie_break: 1e-12,
};

/// Largest matrix dimension handled by the dense eigensolver.
///
/// Two-qubit work needs 4; the 2xN entanglement bound needs up to 16.
pub const MAX_EIG_DIM: usize = 16;
