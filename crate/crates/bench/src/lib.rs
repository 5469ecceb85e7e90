//! Problem generators shared by the benchmarks.

use nalgebra::{DMatrix, DVector};
use qconic::cones::ConeSpec;
use qconic::kkt::SparseSym;
use qconic::model::Model;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_spd(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(n, n)
}

/// Symmetric constraint matrix with about `density` of its entries nonzero.
pub fn sparse_row(n: usize, density: f64, rng: &mut impl Rng) -> SparseSym {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            if rng.gen_bool(density) {
                let x = rng.gen_range(-1.0..1.0);
                v[i * n + j] = x;
                v[j * n + i] = x;
            }
        }
    }
    SparseSym::from_vec(n, &v)
}

/// `min <C, X>  s.t.  <A_i, X> = b_i, X psd` with a strictly feasible pair.
pub fn random_sdp(n: usize, p: usize, rng: &mut impl Rng) -> Model {
    let x0 = random_spd(n, rng);
    let mut c = random_spd(n, rng);
    let mut a = DMatrix::zeros(p, n * n);
    let mut b = DVector::zeros(p);
    for i in 0..p {
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let ai = (&m + m.transpose()) * 0.5;
        b[i] = ai.dot(&x0);
        c += &ai * rng.gen_range(-0.5..0.5);
        a.set_row(i, &DVector::from_column_slice(ai.as_slice()).transpose());
    }
    let c = DVector::from_column_slice(c.as_slice());
    Model::new(c, a, b, None, None, vec![ConeSpec::PosSemidefinite { n, complex: false }], 0.0).unwrap()
}

/// `min t  s.t.  (t, X, Y)` in QRE with `X` fixed and `diag(Y) = 1`.
pub fn toy_qre(n: usize) -> Model {
    let nv = 1 + 2 * n * n;
    let mut c = DVector::zeros(nv);
    c[0] = 1.0;
    let mut rows = vec![];
    let mut b = vec![];
    for i in 0..n {
        for j in i..n {
            let mut r = vec![0.0; nv];
            r[1 + i * n + j] += 0.5;
            r[1 + j * n + i] += 0.5;
            rows.push(r);
            b.push(if i == j { 2.0 } else { 1.0 });
        }
        let mut r = vec![0.0; nv];
        r[1 + n * n + i * n + i] = 1.0;
        rows.push(r);
        b.push(1.0);
    }
    let a = DMatrix::from_fn(rows.len(), nv, |i, j| rows[i][j]);
    Model::new(c, a, DVector::from_vec(b), None, None, vec![ConeSpec::QuantRelEntr { n, complex: false }], 0.0).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use qconic::ipm::{solve, SolStatus, SolverSettings};

    #[test]
    fn generated_problems_are_solvable() {
        let quiet = SolverSettings { verbose: 0, ..Default::default() };
        let mut r = rng(0);
        for m in [toy_qre(2), toy_qre(4), random_sdp(6, 8, &mut r)] {
            assert_eq!(solve(&m, &quiet).sol_status, SolStatus::Optimal);
        }
        let r2 = solve(&toy_qre(2), &quiet);
        assert!((r2.p_obj - 2.772588704578).abs() < 1e-6);
    }
}
