use nalgebra::{DMatrix, DVector};

use crate::linalg::{herm_part, unvec, write_vec, Scalar};

/// Hermitian part of the matrix stored in `v`.
pub(crate) fn herm<T: Scalar>(v: &[f64], n: usize) -> DMatrix<T> {
    herm_part(&unvec::<T>(v, n))
}

pub(crate) fn mdim<T: Scalar>(n: usize) -> usize {
    n * n * T::width()
}

/// Concatenates scalars and matrices into one vector.
pub(crate) struct Packer {
    out: Vec<f64>,
}

impl Packer {
    pub fn new(cap: usize) -> Self {
        Self { out: Vec::with_capacity(cap) }
    }

    pub fn scalar(mut self, x: f64) -> Self {
        self.out.push(x);
        self
    }

    pub fn slice(mut self, x: &[f64]) -> Self {
        self.out.extend_from_slice(x);
        self
    }

    pub fn mat<T: Scalar>(mut self, m: &DMatrix<T>) -> Self {
        let k = self.out.len();
        self.out.resize(k + mdim::<T>(m.nrows()), 0.0);
        write_vec(&herm_part(m), &mut self.out[k..]);
        self
    }

    pub fn done(self) -> DVector<f64> {
        DVector::from_vec(self.out)
    }
}

/// Sequential reader over a vectorized slice.
pub(crate) struct Reader<'a> {
    v: &'a [f64],
    at: usize,
}

impl<'a> Reader<'a> {
    pub fn new(v: &'a [f64]) -> Self {
        Self { v, at: 0 }
    }

    pub fn scalar(&mut self) -> f64 {
        self.at += 1;
        self.v[self.at - 1]
    }

    pub fn slice(&mut self, k: usize) -> &'a [f64] {
        self.at += k;
        &self.v[self.at - k..self.at]
    }

    pub fn mat<T: Scalar>(&mut self, n: usize) -> DMatrix<T> {
        let k = mdim::<T>(n);
        herm(self.slice(k), n)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Logarithm of the determinant of a positive definite matrix from its eigenvalues.
pub(crate) fn logdet(lam: &DVector<f64>) -> f64 {
    lam.iter().map(|l| l.ln()).sum()
}

/// `A^{-1} V A^{-1}` style products given `A^{-1}`.
pub(crate) fn sandwich<T: Scalar>(a: &DMatrix<T>, v: &DMatrix<T>) -> DMatrix<T> {
    herm_part(&(a * v * a))
}

pub(crate) fn identity<T: Scalar>(n: usize) -> DMatrix<T> {
    DMatrix::identity(n, n)
}

/// Real trace of a Hermitian matrix.
pub(crate) fn rtrace<T: Scalar>(m: &DMatrix<T>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re()).sum()
}

/// `-2 A^{-1} dA A^{-1} dA A^{-1}` given `A^{-1}`: third derivative of `-log det`.
pub(crate) fn logdet_third<T: Scalar>(inv: &DMatrix<T>, d: &DMatrix<T>) -> DMatrix<T> {
    let a = inv * d;
    &a * &a * inv * T::lift(-2.0)
}

/// Dense matrix of a Hermitian-to-Hermitian map in compact coordinates.
pub(crate) fn assemble_herm_op<T: Scalar>(n: usize, mut op: impl FnMut(&DMatrix<T>) -> DMatrix<T>) -> DMatrix<f64> {
    let layout = crate::linalg::Layout::new(vec![crate::linalg::Block::Herm { n, complex: T::IS_COMPLEX }]);
    layout.assemble(|v| Packer::new(v.len()).mat(&op(&herm(v.as_slice(), n))).done())
}

/// Solves with a compact-coordinate factor on a Hermitian matrix.
pub(crate) fn solve_herm<T: Scalar>(fac: &crate::linalg::PdFactor, n: usize, r: &DMatrix<T>) -> DMatrix<T> {
    let layout = crate::linalg::Layout::new(vec![crate::linalg::Block::Herm { n, complex: T::IS_COMPLEX }]);
    let rv = Packer::new(0).mat(r).done();
    let x = fac.solve(&layout.to_compact(rv.as_slice()));
    herm(layout.from_compact(x.as_slice()).as_slice(), n)
}
