//! Special functions and the nonlinear least-squares engine.

mod bessel;
mod lsq;

pub use bessel::{bessel_i0, bessel_i0_scaled, bessel_k0, bessel_k0_scaled};
pub use lsq::{
    finite_difference_jacobian, least_squares, FitProblem, FitResult, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE_GRAD, DEFAULT_TOLERANCE_STEP,
};
