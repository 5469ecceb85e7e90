use nalgebra::{DMatrix, DVector};

use super::LinalgError;

const CONFLUENT: f64 = 1e-10;
// Below this relative spread, higher divided differences switch to a Taylor
// expansion about the mean; the recursive quotient loses ~eps/spread digits.
const NEAR: f64 = 1e-5;

/// Scalar functions with auditable derivatives; all are defined on `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarFn {
    Log,
    NegLog,
    XLogX,
    NegXLogX,
    /// `c * x^p`.
    Pow { p: f64, c: f64 },
}

impl ScalarFn {
    pub fn inv() -> Self {
        ScalarFn::Pow { p: -1.0, c: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalarFn::Log => "log",
            ScalarFn::NegLog => "neg_log",
            ScalarFn::XLogX => "x_log_x",
            ScalarFn::NegXLogX => "neg_x_log_x",
            ScalarFn::Pow { .. } => "power",
        }
    }

    pub fn in_domain(&self, x: f64) -> bool {
        x > 0.0 && x.is_finite()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.deriv(x, 0)
    }

    /// `k`-th derivative, `k <= 5`.
    pub fn deriv(&self, x: f64, k: u32) -> f64 {
        let sgn = |k: u32| if k % 2 == 0 { 1.0 } else { -1.0 };
        let fact = |k: u32| (1..=k).map(|i| i as f64).product::<f64>();
        match *self {
            ScalarFn::Log | ScalarFn::NegLog => {
                let v = if k == 0 { x.ln() } else { sgn(k + 1) * fact(k - 1) / x.powi(k as i32) };
                if *self == ScalarFn::Log {
                    v
                } else {
                    -v
                }
            }
            ScalarFn::XLogX | ScalarFn::NegXLogX => {
                let v = match k {
                    0 => x * x.ln(),
                    1 => x.ln() + 1.0,
                    _ => sgn(k) * fact(k - 2) / x.powi(k as i32 - 1),
                };
                if *self == ScalarFn::XLogX {
                    v
                } else {
                    -v
                }
            }
            ScalarFn::Pow { p, c } => {
                let coef: f64 = (0..k).map(|i| p - i as f64).product();
                c * coef * x.powf(p - k as f64)
            }
        }
    }

    fn check(&self, x: f64) -> Result<(), LinalgError> {
        if self.in_domain(x) {
            Ok(())
        } else {
            Err(LinalgError::Domain { func: self.name(), value: x })
        }
    }

    /// First divided difference `g^[1](a, b)`.
    pub fn dd1(&self, a: f64, b: f64) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if b - a <= CONFLUENT * 1f64.max(a.abs()).max(b.abs()) {
            return self.deriv(0.5 * (a + b), 1);
        }
        // r = (b - a) / a, evaluated in forms that stay accurate as r -> 0
        let r = (b - a) / a;
        match *self {
            ScalarFn::Log => r.ln_1p() / (b - a),
            ScalarFn::NegLog => -r.ln_1p() / (b - a),
            ScalarFn::XLogX => b * (r.ln_1p() / (b - a)) + a.ln(),
            ScalarFn::NegXLogX => -(b * (r.ln_1p() / (b - a)) + a.ln()),
            ScalarFn::Pow { p, c } => c * a.powf(p - 1.0) * (p * r.ln_1p()).exp_m1() / r,
        }
    }

    fn taylor(&self, xs: &[f64], order: u32) -> f64 {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let d: Vec<f64> = xs.iter().map(|x| x - m).collect();
        let fact = |k: u32| (1..=k).map(|i| i as f64).product::<f64>();
        // complete homogeneous symmetric polynomial of degree 2; degree 1 vanishes at the mean
        let mut h2 = 0.0;
        for i in 0..d.len() {
            for j in i..d.len() {
                h2 += d[i] * d[j];
            }
        }
        self.deriv(m, order) / fact(order) + self.deriv(m, order + 2) / fact(order + 2) * h2
    }

    /// Second divided difference, symmetric in its arguments.
    pub fn dd2(&self, a: f64, b: f64, c: f64) -> f64 {
        let mut x = [a, b, c];
        x.sort_by(f64::total_cmp);
        let scale = 1f64.max(x[0].abs()).max(x[2].abs());
        let spread = x[2] - x[0];
        if spread <= CONFLUENT * scale {
            return 0.5 * self.deriv((x[0] + x[1] + x[2]) / 3.0, 2);
        }
        if spread <= NEAR * scale {
            return self.taylor(&x, 2);
        }
        (self.dd1(x[0], x[1]) - self.dd1(x[1], x[2])) / (x[0] - x[2])
    }

    /// Third divided difference, symmetric in its arguments.
    pub fn dd3(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        let mut x = [a, b, c, d];
        x.sort_by(f64::total_cmp);
        let scale = 1f64.max(x[0].abs()).max(x[3].abs());
        let spread = x[3] - x[0];
        if spread <= CONFLUENT * scale {
            return self.deriv(x.iter().sum::<f64>() / 4.0, 3) / 6.0;
        }
        if spread <= NEAR * scale {
            return self.taylor(&x, 3);
        }
        (self.dd2(x[0], x[1], x[2]) - self.dd2(x[1], x[2], x[3])) / (x[0] - x[3])
    }
}

/// Matrix of `g^[1](lam_i, lam_j)`.
pub fn divided_diff_first(g: ScalarFn, lam: &DVector<f64>) -> Result<DMatrix<f64>, LinalgError> {
    for &l in lam.iter() {
        g.check(l)?;
    }
    let n = lam.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = g.dd1(lam[i], lam[j]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Matrices `k = 0..n` of `g^[2](lam_i, lam_j, lam_k)`.
pub fn divided_diff_second(g: ScalarFn, lam: &DVector<f64>) -> Result<Vec<DMatrix<f64>>, LinalgError> {
    for &l in lam.iter() {
        g.check(l)?;
    }
    let n = lam.len();
    Ok((0..n)
        .map(|k| {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = g.dd2(lam[i], lam[j], lam[k]);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            m
        })
        .collect())
}

/// `g^[3](a, b, c, d)` for a single quadruple.
pub fn divided_diff_third(g: ScalarFn, a: f64, b: f64, c: f64, d: f64) -> f64 {
    g.dd3(a, b, c, d)
}

/// First and (lazily) second divided differences over one spectrum.
#[derive(Debug, Clone)]
pub struct DividedDiffTable {
    pub g: ScalarFn,
    pub lam: DVector<f64>,
    pub first: DMatrix<f64>,
    second: Option<Vec<DMatrix<f64>>>,
}

impl DividedDiffTable {
    pub fn new(g: ScalarFn, lam: &DVector<f64>) -> Result<Self, LinalgError> {
        Ok(Self { g, lam: lam.clone(), first: divided_diff_first(g, lam)?, second: None })
    }

    pub fn second(&mut self) -> &[DMatrix<f64>] {
        if self.second.is_none() {
            self.second = Some(divided_diff_second(self.g, &self.lam).expect("domain checked"));
        }
        self.second.as_deref().unwrap()
    }
}
