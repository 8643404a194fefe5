//! Numerical tolerances and default parameters shared across modules.

/// Relative residual target of linear solves.
pub const TOL_LIN: f64 = 1e-10;

/// Zero-mean tolerance per unit area.
pub const TOL_MEAN: f64 = 1e-10;

/// Absolute tolerance used to deduplicate resonant values.
pub const RESONANCE_DEDUP: f64 = 1e-9;

/// Distinct triples closer than this are reported as collisions.
pub const RESONANCE_COLLISION: f64 = 1e-6;

/// Relative tolerance of the resonance identity in index sets.
pub const RESONANCE_IDENTITY: f64 = 1e-12;

/// Default Lebesgue exponent for residual norms.
pub const DEFAULT_S: f64 = 1.05;

/// Relative step in `ln λ` for λ-derivatives.
pub const LAMBDA_FD_STEP: f64 = 1e-4;

/// Default ε grid.
pub const EPS_GRID: [f64; 4] = [3e-2, 1e-2, 3e-3, 1e-3];

/// λ ladder of the bubble checks, applied to `λ^{1+γ}`.
pub const LAMBDA_LADDER: [f64; 4] = [10.0, 30.0, 100.0, 300.0];

/// Newton: residual target.
pub const NEWTON_TOL: f64 = 1e-9;
/// Newton: iteration cap.
pub const NEWTON_MAX_ITER: usize = 12;
/// Newton: backtracking cap.
pub const NEWTON_MAX_BACKTRACK: usize = 30;

/// Critical point search: gradient target.
pub const TOL_GRAD: f64 = 1e-8;
/// Stability probe: number of perturbations.
pub const N_PERT: usize = 8;
/// Stability probe: relative perturbation size.
pub const ETA_PERT: f64 = 1e-3;

/// Smallest admissible `λ r₀` for an assembled ansatz.
pub const MIN_LAMBDA_R0: f64 = 10.0;
