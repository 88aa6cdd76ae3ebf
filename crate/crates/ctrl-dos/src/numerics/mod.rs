//! Small dense-matrix kernel: norms, symmetric eigenvalues, matrix
//! exponential, linear solves, fixed-step ODE integration.
//!
//! Everything is sized for control problems with n <= 8 states (augmented
//! propagators reach 2n). All operations are pure and safe to call from
//! parallel sweep workers.

pub mod eig;
pub mod expm;
pub mod matrix;
pub mod policy;
pub mod rk4;
pub mod solve;

pub use eig::{spectral_norm, sym_eig, sym_eigvals};
pub use expm::expm;
pub use matrix::{dot, norm2, Matrix, Vector};
pub use rk4::{rk4_integrate, rk4_step};
pub use solve::{inverse, least_squares_particular, solve};
