use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{LinalgError, Scalar};

const SYM_TOL: f64 = 1e-12;

/// Length of the real vectorization of an `n x n` matrix.
pub fn vec_dim<T: Scalar>(n: usize) -> usize {
    n * n * T::width()
}

/// Row-stacks `m`; complex entries are split into `(re, im)` pairs.
pub fn mat_to_vec<T: Scalar>(m: &DMatrix<T>) -> DVector<f64> {
    let mut out = DVector::zeros(vec_dim::<T>(m.nrows()));
    write_vec(m, out.as_mut_slice());
    out
}

pub fn write_vec<T: Scalar>(m: &DMatrix<T>, out: &mut [f64]) {
    let n = m.nrows();
    let w = T::width();
    for i in 0..n {
        for j in 0..n {
            let x = m[(i, j)];
            let k = (i * n + j) * w;
            out[k] = x.re();
            if w == 2 {
                out[k + 1] = x.im();
            }
        }
    }
}

/// Inverse of [`mat_to_vec`] without any symmetry check.
pub fn unvec<T: Scalar>(v: &[f64], n: usize) -> DMatrix<T> {
    let w = T::width();
    debug_assert_eq!(v.len(), n * n * w);
    DMatrix::from_fn(n, n, |i, j| {
        let k = (i * n + j) * w;
        if w == 2 {
            T::from_parts(v[k], v[k + 1])
        } else {
            T::from_parts(v[k], 0.0)
        }
    })
}

/// A symmetric or Hermitian matrix of either entry type.
#[derive(Debug, Clone, PartialEq)]
pub enum HermMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl HermMatrix {
    pub fn dim(&self) -> usize {
        match self {
            HermMatrix::Real(m) => m.nrows(),
            HermMatrix::Complex(m) => m.nrows(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, HermMatrix::Complex(_))
    }

    pub fn to_vec(&self) -> DVector<f64> {
        match self {
            HermMatrix::Real(m) => mat_to_vec(m),
            HermMatrix::Complex(m) => mat_to_vec(m),
        }
    }
}

fn checked<T: Scalar>(v: &[f64], n: usize) -> Result<DMatrix<T>, LinalgError> {
    let expected = vec_dim::<T>(n);
    if v.len() != expected {
        return Err(LinalgError::DimensionMismatch { expected, got: v.len() });
    }
    let m = unvec::<T>(v, n);
    let mut dev: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for i in 0..n {
        for j in 0..n {
            let a = m[(i, j)];
            let b = m[(j, i)].conjugate();
            dev = dev.max((a - b).modulus());
            scale = scale.max(a.modulus());
        }
    }
    if dev > SYM_TOL * scale {
        return Err(LinalgError::NotHermitian(dev));
    }
    if dev == 0.0 {
        return Ok(m);
    }
    Ok(super::herm_part(&m))
}

/// Unpacks a vectorized symmetric (or Hermitian when `complex`) matrix.
pub fn vec_to_mat(v: &[f64], n: usize, complex: bool) -> Result<HermMatrix, LinalgError> {
    if complex {
        checked::<Complex64>(v, n).map(HermMatrix::Complex)
    } else {
        checked::<f64>(v, n).map(HermMatrix::Real)
    }
}
