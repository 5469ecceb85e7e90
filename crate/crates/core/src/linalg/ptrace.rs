use nalgebra::DMatrix;

use super::{LinalgError, Scalar};

struct Split {
    dims: Vec<usize>,
    traced: Vec<bool>,
    kept_dim: usize,
}

impl Split {
    fn new(n: usize, dims: &[usize], sys: &[usize]) -> Result<Self, LinalgError> {
        let total: usize = dims.iter().product();
        if total != n {
            return Err(LinalgError::DimensionMismatch { expected: total, got: n });
        }
        let mut traced = vec![false; dims.len()];
        for &s in sys {
            if s >= dims.len() {
                return Err(LinalgError::DimensionMismatch { expected: dims.len(), got: s });
            }
            traced[s] = true;
        }
        let kept_dim = dims.iter().zip(&traced).filter(|(_, &t)| !t).map(|(d, _)| d).product();
        Ok(Self { dims: dims.to_vec(), traced, kept_dim })
    }

    /// Splits a row-major tensor index into (kept index, traced index).
    fn split(&self, mut idx: usize) -> (usize, usize) {
        let (mut kept, mut tr) = (0, 0);
        let (mut ks, mut ts) = (1, 1);
        for k in (0..self.dims.len()).rev() {
            let d = self.dims[k];
            let digit = idx % d;
            idx /= d;
            if self.traced[k] {
                tr += digit * ts;
                ts *= d;
            } else {
                kept += digit * ks;
                ks *= d;
            }
        }
        (kept, tr)
    }
}

/// Traces out the subsystems listed in `sys` of a matrix on `⊗ C^{dims[i]}`.
pub fn partial_trace<T: Scalar>(x: &DMatrix<T>, dims: &[usize], sys: &[usize]) -> Result<DMatrix<T>, LinalgError> {
    let n = x.nrows();
    let sp = Split::new(n, dims, sys)?;
    let parts: Vec<(usize, usize)> = (0..n).map(|i| sp.split(i)).collect();
    let mut out = DMatrix::zeros(sp.kept_dim, sp.kept_dim);
    for i in 0..n {
        let (ki, ti) = parts[i];
        for j in 0..n {
            let (kj, tj) = parts[j];
            if ti == tj {
                out[(ki, kj)] += x[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Adjoint of [`partial_trace`]: tensors `m` with identities on the traced subsystems.
pub fn partial_trace_adjoint<T: Scalar>(
    m: &DMatrix<T>,
    dims: &[usize],
    sys: &[usize],
) -> Result<DMatrix<T>, LinalgError> {
    let n: usize = dims.iter().product();
    let sp = Split::new(n, dims, sys)?;
    if m.nrows() != sp.kept_dim {
        return Err(LinalgError::DimensionMismatch { expected: sp.kept_dim, got: m.nrows() });
    }
    let parts: Vec<(usize, usize)> = (0..n).map(|i| sp.split(i)).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let (ki, ti) = parts[i];
        let (kj, tj) = parts[j];
        if ti == tj {
            m[(ki, kj)]
        } else {
            T::zero()
        }
    }))
}
