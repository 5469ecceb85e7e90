use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{
    ClassEntr, ClassRelEntr, Cone, ConeError, GInfo, NonNegOrthant, OpPerspecEpi, OpPerspecTr, PerspecFunc,
    PosSemidefinite, QuantCondEntr, QuantEntr, QuantKeyDist, QuantRelEntr, SecondOrder, ZInfo,
};

/// Kraus operator given as a complex matrix; real cones require zero imaginary parts.
pub type KrausOp = DMatrix<Complex64>;

/// Parameters of one cone, independent of any loaded point.
#[derive(Debug, Clone, PartialEq)]
pub enum ConeSpec {
    NonNegOrthant { n: usize },
    PosSemidefinite { n: usize, complex: bool },
    /// Dimension `n + 1`.
    SecondOrder { n: usize },
    ClassEntr { n: usize },
    ClassRelEntr { n: usize },
    QuantEntr { n: usize, complex: bool },
    QuantRelEntr { n: usize, complex: bool },
    QuantCondEntr { dims: Vec<usize>, sys: Vec<usize>, complex: bool },
    QuantKeyDist { g: GInfo, z: ZInfo, complex: bool },
    OpPerspecTr { n: usize, func: PerspecFunc, complex: bool },
    OpPerspecEpi { n: usize, func: PerspecFunc, complex: bool },
}

fn mdim(n: usize, complex: bool) -> usize {
    n * n * if complex { 2 } else { 1 }
}

impl ConeSpec {
    /// Side length of the matrix variables (or vector length for the classical cones).
    pub fn n(&self) -> usize {
        match self {
            ConeSpec::NonNegOrthant { n }
            | ConeSpec::PosSemidefinite { n, .. }
            | ConeSpec::SecondOrder { n }
            | ConeSpec::ClassEntr { n }
            | ConeSpec::ClassRelEntr { n }
            | ConeSpec::QuantEntr { n, .. }
            | ConeSpec::QuantRelEntr { n, .. }
            | ConeSpec::OpPerspecTr { n, .. }
            | ConeSpec::OpPerspecEpi { n, .. } => *n,
            ConeSpec::QuantCondEntr { dims, .. } => dims.iter().product(),
            ConeSpec::QuantKeyDist { g, .. } => match g {
                GInfo::Identity(n) => *n,
                GInfo::Kraus(ks) => ks.first().map_or(0, |k| k.ncols()),
            },
        }
    }

    pub fn is_complex(&self) -> bool {
        match self {
            ConeSpec::PosSemidefinite { complex, .. }
            | ConeSpec::QuantEntr { complex, .. }
            | ConeSpec::QuantRelEntr { complex, .. }
            | ConeSpec::QuantCondEntr { complex, .. }
            | ConeSpec::QuantKeyDist { complex, .. }
            | ConeSpec::OpPerspecTr { complex, .. }
            | ConeSpec::OpPerspecEpi { complex, .. } => *complex,
            _ => false,
        }
    }

    pub fn dim(&self) -> usize {
        let n = self.n();
        let c = self.is_complex();
        match self {
            ConeSpec::NonNegOrthant { .. } => n,
            ConeSpec::PosSemidefinite { .. } => mdim(n, c),
            ConeSpec::SecondOrder { .. } => n + 1,
            ConeSpec::ClassEntr { .. } => 2 + n,
            ConeSpec::ClassRelEntr { .. } => 1 + 2 * n,
            ConeSpec::QuantEntr { .. } => 2 + mdim(n, c),
            ConeSpec::QuantRelEntr { .. } | ConeSpec::OpPerspecTr { .. } => 1 + 2 * mdim(n, c),
            ConeSpec::QuantCondEntr { .. } | ConeSpec::QuantKeyDist { .. } => 1 + mdim(n, c),
            ConeSpec::OpPerspecEpi { .. } => 3 * mdim(n, c),
        }
    }

    pub fn nu(&self) -> f64 {
        let n = self.n() as f64;
        match self {
            ConeSpec::NonNegOrthant { .. } | ConeSpec::PosSemidefinite { .. } => n,
            ConeSpec::SecondOrder { .. } => 2.0,
            ConeSpec::ClassEntr { .. } | ConeSpec::QuantEntr { .. } => 2.0 + n,
            ConeSpec::ClassRelEntr { .. } | ConeSpec::QuantRelEntr { .. } | ConeSpec::OpPerspecTr { .. } => {
                1.0 + 2.0 * n
            }
            ConeSpec::QuantCondEntr { .. } | ConeSpec::QuantKeyDist { .. } => 1.0 + n,
            ConeSpec::OpPerspecEpi { .. } => 3.0 * n,
        }
    }

    /// Whether the cone is self-scaled and supports Nesterov-Todd steps.
    pub fn is_symmetric(&self) -> bool {
        matches!(self, ConeSpec::NonNegOrthant { .. } | ConeSpec::PosSemidefinite { .. } | ConeSpec::SecondOrder { .. })
    }

    /// Whether the cone triggers the automatic inverse-Hessian-avoidance mode.
    pub fn prefers_invhess_avoidance(&self) -> bool {
        matches!(
            self,
            ConeSpec::QuantRelEntr { .. } | ConeSpec::OpPerspecTr { .. } | ConeSpec::OpPerspecEpi { .. }
        )
    }

    /// Short keyword used in reports and in the CBF extension.
    pub fn keyword(&self) -> &'static str {
        match self {
            ConeSpec::NonNegOrthant { .. } => "nonneg",
            ConeSpec::PosSemidefinite { .. } => "psd",
            ConeSpec::SecondOrder { .. } => "soc",
            ConeSpec::ClassEntr { .. } => "class_entr",
            ConeSpec::ClassRelEntr { .. } => "class_rel_entr",
            ConeSpec::QuantEntr { .. } => "quant_entr",
            ConeSpec::QuantRelEntr { .. } => "quant_rel_entr",
            ConeSpec::QuantCondEntr { .. } => "quant_cond_entr",
            ConeSpec::QuantKeyDist { .. } => "quant_key_dist",
            ConeSpec::OpPerspecTr { .. } => "op_perspec_tr",
            ConeSpec::OpPerspecEpi { .. } => "op_perspec_epi",
        }
    }

    /// Checks parameters without building the oracle.
    pub fn validate(&self) -> Result<(), ConeError> {
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<Box<dyn Cone>, ConeError> {
        fn both<A: Cone + 'static, B: Cone + 'static>(complex: bool, a: impl FnOnce() -> A, b: impl FnOnce() -> B) -> Box<dyn Cone> {
            if complex {
                Box::new(b())
            } else {
                Box::new(a())
            }
        }
        if self.n() == 0 {
            return Err(ConeError::InvalidParams(format!("{} needs a positive dimension", self.keyword())));
        }
        Ok(match self.clone() {
            ConeSpec::NonNegOrthant { n } => Box::new(NonNegOrthant::new(n)),
            ConeSpec::PosSemidefinite { n, complex } => {
                both(complex, || PosSemidefinite::<f64>::new(n), || PosSemidefinite::<Complex64>::new(n))
            }
            ConeSpec::SecondOrder { n } => Box::new(SecondOrder::new(n)),
            ConeSpec::ClassEntr { n } => Box::new(ClassEntr::new(n)),
            ConeSpec::ClassRelEntr { n } => Box::new(ClassRelEntr::new(n)),
            ConeSpec::QuantEntr { n, complex } => {
                both(complex, || QuantEntr::<f64>::new(n), || QuantEntr::<Complex64>::new(n))
            }
            ConeSpec::QuantRelEntr { n, complex } => {
                both(complex, || QuantRelEntr::<f64>::new(n), || QuantRelEntr::<Complex64>::new(n))
            }
            ConeSpec::QuantCondEntr { dims, sys, complex } => {
                if complex {
                    Box::new(QuantCondEntr::<Complex64>::new(dims, sys)?)
                } else {
                    Box::new(QuantCondEntr::<f64>::new(dims, sys)?)
                }
            }
            ConeSpec::QuantKeyDist { g, z, complex } => {
                if complex {
                    Box::new(QuantKeyDist::<Complex64>::new(g, z)?)
                } else {
                    Box::new(QuantKeyDist::<f64>::new(g, z)?)
                }
            }
            ConeSpec::OpPerspecTr { n, func, complex } => {
                if complex {
                    Box::new(OpPerspecTr::<Complex64>::new(n, func)?)
                } else {
                    Box::new(OpPerspecTr::<f64>::new(n, func)?)
                }
            }
            ConeSpec::OpPerspecEpi { n, func, complex } => {
                if complex {
                    Box::new(OpPerspecEpi::<Complex64>::new(n, func)?)
                } else {
                    Box::new(OpPerspecEpi::<f64>::new(n, func)?)
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_and_parameters_match_built_oracles() {
        let specs = vec![
            ConeSpec::NonNegOrthant { n: 3 },
            ConeSpec::PosSemidefinite { n: 2, complex: true },
            ConeSpec::SecondOrder { n: 3 },
            ConeSpec::ClassEntr { n: 2 },
            ConeSpec::ClassRelEntr { n: 2 },
            ConeSpec::QuantEntr { n: 2, complex: false },
            ConeSpec::QuantRelEntr { n: 2, complex: true },
            ConeSpec::QuantCondEntr { dims: vec![2, 2], sys: vec![1], complex: false },
            ConeSpec::QuantKeyDist { g: GInfo::Identity(4), z: ZInfo::Blocks(2), complex: true },
            ConeSpec::OpPerspecTr { n: 2, func: PerspecFunc::Log, complex: false },
            ConeSpec::OpPerspecEpi { n: 2, func: PerspecFunc::Power(0.5), complex: true },
        ];
        for s in specs {
            let c = s.build().unwrap();
            assert_eq!(c.dim(), s.dim(), "{}", s.keyword());
            assert_eq!(c.nu(), s.nu(), "{}", s.keyword());
            assert_eq!(c.is_complex(), s.is_complex(), "{}", s.keyword());
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ConeSpec::NonNegOrthant { n: 0 }.build().is_err());
        assert!(ConeSpec::OpPerspecTr { n: 2, func: PerspecFunc::Power(3.0), complex: false }.build().is_err());
        assert!(ConeSpec::QuantCondEntr { dims: vec![2], sys: vec![3], complex: false }.build().is_err());
    }
}
