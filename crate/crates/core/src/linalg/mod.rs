//! Dense matrix calculus shared by the cone oracles.
//!
//! Matrices are stored full and row-stacked when vectorized. Real symmetric
//! matrices use `f64` entries and Hermitian matrices use `Complex64`; most
//! routines are generic over [`Scalar`] so a single code path serves both.

mod dense;
mod divdiff;
mod eig;
mod layout;
mod ptrace;
mod spectral;
mod vectorize;

pub use dense::{cholesky_retry, congruence, herm_part, inner, inv_pd, sqrt_pd, PdFactor};
pub use divdiff::{divided_diff_first, divided_diff_second, divided_diff_third, DividedDiffTable, ScalarFn};
pub use eig::{eig_factor, Eig};
pub use layout::{Block, Layout};
pub use ptrace::{partial_trace, partial_trace_adjoint};
pub use spectral::{
    d2_basis, d2spectral, d3spectral, dspectral, dspectral_inverse, dspectral_with, hadamard, hadamard_div, spectral_apply,
};
pub use vectorize::{mat_to_vec, unvec, vec_dim, vec_to_mat, write_vec, HermMatrix};

use nalgebra::ComplexField;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric/Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("eigenvalue {value} outside the domain of {func}")]
    Domain { func: &'static str, value: f64 },
    #[error("linear map is singular")]
    Singular,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Entry type of a matrix slice: `f64` for symmetric, `Complex64` for Hermitian.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync + 'static {
    const IS_COMPLEX: bool;
    fn from_parts(re: f64, im: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn lift(x: f64) -> Self {
        Self::from_parts(x, 0.0)
    }
    /// Real values carried per matrix entry in a vectorization.
    fn width() -> usize {
        if Self::IS_COMPLEX {
            2
        } else {
            1
        }
    }
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;
    fn from_parts(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
}
