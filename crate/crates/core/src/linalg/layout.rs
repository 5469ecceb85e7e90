use nalgebra::{DMatrix, DVector};

const RT2: f64 = std::f64::consts::SQRT_2;

/// One piece of a cone's vectorized slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Scalars(usize),
    Herm { n: usize, complex: bool },
}

impl Block {
    pub fn vec_dim(&self) -> usize {
        match *self {
            Block::Scalars(k) => k,
            Block::Herm { n, complex } => n * n * if complex { 2 } else { 1 },
        }
    }

    pub fn compact_dim(&self) -> usize {
        match *self {
            Block::Scalars(k) => k,
            Block::Herm { n, complex: false } => n * (n + 1) / 2,
            Block::Herm { n, complex: true } => n * n,
        }
    }
}

/// Orthonormal coordinates on the symmetric/Hermitian subspace of a slice.
///
/// `to_compact` is the adjoint of `from_compact`, and `from_compact ∘ to_compact`
/// is the orthogonal projection onto the Hermitian subspace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub blocks: Vec<Block>,
}

impl Layout {
    pub fn new(blocks: Vec<Block>) -> Self {
        Self { blocks }
    }

    pub fn vec_dim(&self) -> usize {
        self.blocks.iter().map(Block::vec_dim).sum()
    }

    pub fn compact_dim(&self) -> usize {
        self.blocks.iter().map(Block::compact_dim).sum()
    }

    pub fn to_compact(&self, v: &[f64]) -> DVector<f64> {
        let mut out = Vec::with_capacity(self.compact_dim());
        let mut off = 0;
        for b in &self.blocks {
            match *b {
                Block::Scalars(k) => out.extend_from_slice(&v[off..off + k]),
                Block::Herm { n, complex } => {
                    let w = if complex { 2 } else { 1 };
                    let at = |i: usize, j: usize, c: usize| v[off + (i * n + j) * w + c];
                    for i in 0..n {
                        out.push(at(i, i, 0));
                        for j in i + 1..n {
                            out.push((at(i, j, 0) + at(j, i, 0)) / RT2);
                            if complex {
                                out.push((at(i, j, 1) - at(j, i, 1)) / RT2);
                            }
                        }
                    }
                }
            }
            off += b.vec_dim();
        }
        DVector::from_vec(out)
    }

    pub fn from_compact(&self, c: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.vec_dim());
        let (mut off, mut k) = (0, 0);
        for b in &self.blocks {
            match *b {
                Block::Scalars(m) => {
                    out.rows_mut(off, m).copy_from_slice(&c[k..k + m]);
                    k += m;
                }
                Block::Herm { n, complex } => {
                    let w = if complex { 2 } else { 1 };
                    for i in 0..n {
                        out[off + (i * n + i) * w] = c[k];
                        k += 1;
                        for j in i + 1..n {
                            let re = c[k] / RT2;
                            out[off + (i * n + j) * w] = re;
                            out[off + (j * n + i) * w] = re;
                            k += 1;
                            if complex {
                                let im = c[k] / RT2;
                                out[off + (i * n + j) * w + 1] = im;
                                out[off + (j * n + i) * w + 1] = -im;
                                k += 1;
                            }
                        }
                    }
                }
            }
            off += b.vec_dim();
        }
        out
    }

    /// Orthogonal projection onto the Hermitian subspace.
    pub fn project(&self, v: &[f64]) -> DVector<f64> {
        self.from_compact(self.to_compact(v).as_slice())
    }

    /// Dense matrix of a linear operator in compact coordinates.
    pub fn assemble(&self, mut op: impl FnMut(&DVector<f64>) -> DVector<f64>) -> DMatrix<f64> {
        let m = self.compact_dim();
        let mut out = DMatrix::zeros(m, m);
        let mut e = vec![0.0; m];
        for j in 0..m {
            e[j] = 1.0;
            let col = self.to_compact(op(&self.from_compact(&e)).as_slice());
            out.set_column(j, &col);
            e[j] = 0.0;
        }
        out
    }
}
