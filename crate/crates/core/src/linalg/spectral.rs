use nalgebra::DMatrix;

use super::{divided_diff_first, divided_diff_second, Eig, LinalgError, Scalar, ScalarFn};

fn check_dim<T: Scalar>(eig: &Eig<T>, v: &DMatrix<T>) -> Result<(), LinalgError> {
    if v.nrows() != eig.dim() || v.ncols() != eig.dim() {
        return Err(LinalgError::DimensionMismatch { expected: eig.dim(), got: v.nrows() });
    }
    Ok(())
}

/// Entrywise product with a real matrix.
pub fn hadamard<T: Scalar>(d: &DMatrix<f64>, m: &DMatrix<T>) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * T::lift(d[(i, j)]))
}

/// Entrywise division by a real matrix.
pub fn hadamard_div<T: Scalar>(d: &DMatrix<f64>, m: &DMatrix<T>) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * T::lift(1.0 / d[(i, j)]))
}

/// `U g(Lambda) U^†`.
pub fn spectral_apply<T: Scalar>(g: ScalarFn, x: &DMatrix<T>) -> Result<DMatrix<T>, LinalgError> {
    let e = Eig::new(x)?;
    if let Some(&l) = e.lam.iter().find(|&&l| !g.in_domain(l)) {
        return Err(LinalgError::Domain { func: g.name(), value: l });
    }
    Ok(e.apply(|l| g.value(l)))
}

/// First derivative `U [g^[1] ⊙ (U^† V U)] U^†`.
pub fn dspectral<T: Scalar>(g: ScalarFn, eig: &Eig<T>, v: &DMatrix<T>) -> Result<DMatrix<T>, LinalgError> {
    check_dim(eig, v)?;
    let d1 = divided_diff_first(g, &eig.lam)?;
    Ok(dspectral_with(&d1, eig, v))
}

pub fn dspectral_with<T: Scalar>(d1: &DMatrix<f64>, eig: &Eig<T>, v: &DMatrix<T>) -> DMatrix<T> {
    eig.from_basis(&hadamard(d1, &eig.to_basis(v)))
}

/// Inverse of the first derivative map: elementwise division in the eigenbasis.
pub fn dspectral_inverse<T: Scalar>(g: ScalarFn, eig: &Eig<T>, v: &DMatrix<T>) -> Result<DMatrix<T>, LinalgError> {
    check_dim(eig, v)?;
    let d1 = divided_diff_first(g, &eig.lam)?;
    if d1.iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return Err(LinalgError::Singular);
    }
    Ok(eig.from_basis(&hadamard_div(&d1, &eig.to_basis(v))))
}

/// Second derivative `D^2 g(X)[V, W]`.
pub fn d2spectral<T: Scalar>(
    g: ScalarFn,
    eig: &Eig<T>,
    v: &DMatrix<T>,
    w: &DMatrix<T>,
) -> Result<DMatrix<T>, LinalgError> {
    check_dim(eig, v)?;
    check_dim(eig, w)?;
    let d2 = divided_diff_second(g, &eig.lam)?;
    Ok(eig.from_basis(&d2_basis(&d2, &eig.to_basis(v), &eig.to_basis(w))))
}

/// `sum_k g^[2]_k ⊙ (V_k W_k^† + W_k V_k^†)` with `V`, `W` already in the eigenbasis.
pub fn d2_basis<T: Scalar>(d2: &[DMatrix<f64>], v: &DMatrix<T>, w: &DMatrix<T>) -> DMatrix<T> {
    let n = v.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let mut acc = T::zero();
        for (k, dk) in d2.iter().enumerate() {
            acc += (v[(i, k)] * w[(k, j)] + w[(i, k)] * v[(k, j)]) * T::lift(dk[(i, j)]);
        }
        acc
    })
}

/// Third derivative `D^3 g(X)[A, B, C]`, summed over the six argument orders.
pub fn d3spectral<T: Scalar>(
    g: ScalarFn,
    eig: &Eig<T>,
    a: &DMatrix<T>,
    b: &DMatrix<T>,
    c: &DMatrix<T>,
) -> Result<DMatrix<T>, LinalgError> {
    for m in [a, b, c] {
        check_dim(eig, m)?;
    }
    if let Some(&l) = eig.lam.iter().find(|&&l| !g.in_domain(l)) {
        return Err(LinalgError::Domain { func: g.name(), value: l });
    }
    let (a, b, c) = (eig.to_basis(a), eig.to_basis(b), eig.to_basis(c));
    let n = eig.dim();
    let lam = &eig.lam;
    let orders: [[&DMatrix<T>; 3]; 6] = [[&a, &b, &c], [&a, &c, &b], [&b, &a, &c], [&b, &c, &a], [&c, &a, &b], [&c, &b, &a]];
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = T::zero();
            for k in 0..n {
                for l in 0..n {
                    let coef = g.dd3(lam[i], lam[k], lam[l], lam[j]);
                    let mut s = T::zero();
                    for o in &orders {
                        s += o[0][(i, k)] * o[1][(k, l)] * o[2][(l, j)];
                    }
                    acc += s * T::lift(coef);
                }
            }
            out[(i, j)] = acc;
        }
    }
    Ok(eig.from_basis(&out))
}
