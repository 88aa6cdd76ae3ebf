//! Central numeric policy. Every tolerance the kernel and the analysis
//! layers rely on is named here so a change is visible in one place.

/// Symmetry check: |s_ij - s_ji| <= SYM_TOL_REL * max|S| before the
/// symmetric eigensolver accepts its input.
pub const SYM_TOL_REL: f64 = 1e-12;

/// Jacobi rotation is skipped when |a_pq| <= JACOBI_OFF_REL * sqrt(|a_pp a_qq|).
/// The relative form keeps small eigenvalues of graded positive definite
/// matrices accurate to their own scale rather than to the matrix scale.
pub const JACOBI_OFF_REL: f64 = 1e-15;

/// Hard cap on Jacobi sweeps; hitting it is a numerical failure.
pub const JACOBI_SWEEP_CAP: usize = 64;

/// Linear solves verify ||Mv - b|| <= SOLVE_RESIDUAL_REL * (||M|| ||v|| + ||b||).
pub const SOLVE_RESIDUAL_REL: f64 = 1e-9;

/// Rank decisions in pivoted QR: diagonal entries of R below
/// RANK_THRESHOLD_REL times the largest initial column norm do not count.
pub const RANK_THRESHOLD_REL: f64 = 1e-9;

/// Canonical-form invariant: ||A P - P Ac|| relative residual bound.
pub const CANONICAL_RESIDUAL_REL: f64 = 1e-8;

/// tau bisection stops only when the bracket is narrower than this...
pub const TAU_TIME_ABS: f64 = 1e-10;

/// ...and the level mismatch |phi(tau) - sigma| is within this.
pub const TAU_PHI_ABS: f64 = 1e-9;

/// Integration horizon for the phi ODE. phi' >= ||A_cl|| > 0 guarantees a
/// crossing far earlier for every admissible gain; this is a safety net.
pub const TAU_HORIZON: f64 = 1.0;

/// Jordan basis must reproduce the closed loop: relative bound on
/// ||T (-lambda I + N) T^-1 - A_cl||.
pub const JORDAN_RECONSTRUCT_REL: f64 = 1e-8;

/// cond(T_lambda) beyond this is treated as numerically meaningless. The
/// eigenvector matrix has the exact structure Lambda C Lambda^{-1} with a
/// small-integer C, so partial-pivot LU stays entrywise accurate far past
/// the usual 1e12 comfort zone; the cap catches genuine degeneracy only.
pub const JORDAN_CONDITION_CAP: f64 = 1e30;

/// State norm beyond which a simulation is declared diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// Absolute time tolerance when bisecting an event-trigger crossing.
pub const EVENT_BISECT_TIME_ABS: f64 = 1e-9;

/// Largest state dimension the library accepts.
pub const MAX_DIM: usize = 8;
