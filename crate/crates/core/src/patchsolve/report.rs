use serde::{Deserialize, Serialize};

/// Diagnostics of one constrained local solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    /// `|B x - t| / |t|` for lifts, `|A x - b| / |b|` for weighted solves.
    pub residual: f64,
    /// Relative size of the kernel component (lifts) or of the bordering
    /// multiplier (weighted solves).
    pub constraint_violation: f64,
    pub kernel_dim: usize,
    pub harmonic_dim: usize,
    /// Free-form notes on tolerance-driven decisions.
    pub decisions: Vec<String>,
}
