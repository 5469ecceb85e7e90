//! Barrier oracles for every supported cone.
//!
//! Each cone works on a slice of the real vectorized space. Matrix blocks use
//! the row-stacked vectorization from [`crate::linalg`]; Hessian products act
//! on the symmetric/Hermitian part of their argument, so inverse Hessian
//! products are the inverses on that subspace.

pub mod check;
mod classical;
mod epigraph;
mod nonneg;
mod perspective;
mod psd;
mod qce;
mod qe;
mod qkd;
mod qre;
mod set;
mod soc;
mod spec;
mod util;

pub use classical::{ClassEntr, ClassRelEntr};
pub use epigraph::Epigraph;
pub use nonneg::NonNegOrthant;
pub use perspective::{ncp_value, OpPerspecEpi, OpPerspecTr, PerspecFunc, Perspective};
pub use psd::PosSemidefinite;
pub use qce::QuantCondEntr;
pub use qe::QuantEntr;
pub use qkd::{GInfo, QuantKeyDist, ZInfo};
pub use qre::QuantRelEntr;
pub use set::ConeSet;
pub use soc::SecondOrder;
pub use spec::{ConeSpec, KrausOp};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{Layout, LinalgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("point is not in the interior of the cone")]
    Infeasible,
    #[error("numerical breakdown in {0}")]
    Numerical(&'static str),
    #[error("invalid cone parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Barrier oracle of one cone.
///
/// `set_point` loads the primal slice and caches factorizations; the other
/// methods are only meaningful after a feasible `set_point`.
pub trait Cone: Send {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn nu(&self) -> f64;
    fn layout(&self) -> Layout;
    fn is_complex(&self) -> bool {
        false
    }

    /// Loads `s` and returns whether it lies in the interior.
    fn set_point(&mut self, s: &[f64]) -> bool;
    fn feasible(&self) -> bool;
    fn barrier(&self) -> f64;
    fn grad(&self) -> DVector<f64>;
    fn hess_prod(&mut self, v: &[f64]) -> DVector<f64>;
    fn inv_hess_prod(&mut self, v: &[f64]) -> Result<DVector<f64>, ConeError>;

    /// `D^3 F(s)[ds, ds]`, or `None` when the cone has no third-order oracle.
    fn third_dir(&mut self, _ds: &[f64]) -> Option<DVector<f64>> {
        None
    }

    /// Primal and dual initial slices `(s0, z0)`.
    fn init_point(&mut self) -> (DVector<f64>, DVector<f64>);

    fn as_symmetric(&mut self) -> Option<&mut dyn SymmetricCone> {
        None
    }
}

/// Nesterov-Todd scaling and Jordan algebra of a self-scaled cone.
///
/// After `nt_update(s, z)` the scaling point `w` satisfies `H(w) s = z`,
/// `W^T W = H(w)^{-1}` and `lambda = W^{-T} s = W z`.
pub trait SymmetricCone {
    fn nt_update(&mut self, s: &[f64], z: &[f64]) -> Result<(), ConeError>;
    fn nt_hess_prod(&self, v: &[f64]) -> DVector<f64>;
    fn nt_inv_hess_prod(&self, v: &[f64]) -> DVector<f64>;
    fn lambda(&self) -> DVector<f64>;
    fn w_prod(&self, v: &[f64]) -> DVector<f64>;
    fn w_inv_prod(&self, v: &[f64]) -> DVector<f64>;
    fn w_inv_t_prod(&self, v: &[f64]) -> DVector<f64>;
    /// `W^T v`; cones with a self-adjoint scaling keep the default.
    fn w_t_prod(&self, v: &[f64]) -> DVector<f64> {
        self.w_prod(v)
    }
    fn jordan_prod(&self, u: &[f64], v: &[f64]) -> DVector<f64>;
    /// `x` with `u ∘ x = v`.
    fn jordan_div(&self, u: &[f64], v: &[f64]) -> Result<DVector<f64>, ConeError>;
    fn identity(&self) -> DVector<f64>;
    /// Largest `alpha` in `[0, 1]` with `s + alpha ds` in the cone.
    fn step_to_boundary(&self, s: &[f64], ds: &[f64]) -> f64;
    /// Real matrix `X` with `H(w)^{-1}[V] = X V X` on the block, if the cone has one.
    fn nt_scaling_matrix(&self) -> Option<DMatrix<f64>> {
        None
    }
}
