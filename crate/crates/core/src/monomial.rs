//! Differential monomials `M[f] = f^n0 (f')^n1 ... (f^(k))^nk` and
//! differential polynomials built from them.

use std::fmt;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{jet_eval, LaurentJet, Series};

/// Exponent vector `[n0, n1, ..., nk]` of a differential monomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialSpec {
    exponents: Vec<u32>,
    explicit_order: Option<usize>,
}

/// Degree statistics of a monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialStats {
    /// `d_M = sum n_i`.
    pub degree: u64,
    /// `Gamma_M = sum (i + 1) n_i`.
    pub weight: u64,
    /// `D_M = Gamma_M - d_M = sum i n_i`.
    pub derivative_weight: u64,
}

/// Outcome of the degree threshold `d_M > ((k + 2) D_M + 2 (k + 1)) / k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Threshold {
    pub order: usize,
    pub rhs: Ratio<i64>,
    pub satisfied: bool,
}

impl MonomialSpec {
    /// Builds a spec; trailing zero exponents are dropped.
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        let mut exponents = exponents;
        while exponents.len() > 1 && exponents.last() == Some(&0) {
            exponents.pop();
        }
        if exponents.iter().all(|&n| n == 0) {
            return Err(Error::InvalidMonomial("all exponents are zero".into()));
        }
        Ok(MonomialSpec { exponents, explicit_order: None })
    }

    /// Spec with a stated order `k`. Only pure powers `f^n0` may state an
    /// order other than the highest derivative present.
    pub fn with_order(exponents: Vec<u32>, order: usize) -> Result<Self> {
        let mut spec = MonomialSpec::new(exponents)?;
        let top = spec.top_index();
        if top != 0 && top != order {
            return Err(Error::InvalidMonomial(format!(
                "stated order {order} differs from highest derivative {top}"
            )));
        }
        if order == 0 {
            return Err(Error::InvalidMonomial("order must be at least 1".into()));
        }
        spec.explicit_order = Some(order);
        Ok(spec)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn explicit_order(&self) -> Option<usize> {
        self.explicit_order
    }

    fn top_index(&self) -> usize {
        self.exponents.iter().rposition(|&n| n > 0).unwrap_or(0)
    }

    /// The order `k`: the stated one, else the highest derivative present.
    pub fn order(&self) -> Result<usize> {
        match (self.explicit_order, self.top_index()) {
            (Some(k), _) => Ok(k),
            (None, 0) => Err(Error::UndefinedOrder),
            (None, k) => Ok(k),
        }
    }

    pub fn stats(&self) -> MonomialStats {
        stats(self)
    }

    pub fn threshold(&self) -> Result<Threshold> {
        threshold_check(self)
    }

    /// Rescaling exponent `D_M / d_M`.
    pub fn alpha(&self) -> f64 {
        let s = self.stats();
        s.derivative_weight as f64 / s.degree as f64
    }

    /// `M[f]` as an expression tree of derivative nodes.
    pub fn apply(&self, f: &Expr) -> Expr {
        product_expr(f, &self.exponents)
    }
}

impl fmt::Display for MonomialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.exponents)
    }
}

fn product_expr(f: &Expr, exponents: &[u32]) -> Expr {
    let mut out: Option<Expr> = None;
    for (i, &n) in exponents.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let factor = f.clone().deriv(i as u32);
        let factor = if n == 1 { factor } else { factor.powi(n as i32) };
        out = Some(match out {
            None => factor,
            Some(acc) => acc * factor,
        });
    }
    out.unwrap_or_else(|| Expr::constant(1.0))
}

/// `(d_M, Gamma_M, D_M)`.
pub fn stats(spec: &MonomialSpec) -> MonomialStats {
    let degree: u64 = spec.exponents.iter().map(|&n| n as u64).sum();
    let weight: u64 = spec.exponents.iter().enumerate().map(|(i, &n)| (i as u64 + 1) * n as u64).sum();
    MonomialStats { degree, weight, derivative_weight: weight - degree }
}

/// Decides `d_M > ((k + 2) D_M + 2 (k + 1)) / k` in exact rational arithmetic.
pub fn threshold_check(spec: &MonomialSpec) -> Result<Threshold> {
    let k = spec.order()?;
    let s = stats(spec);
    let k_i = k as i64;
    let rhs = Ratio::new((k_i + 2) * s.derivative_weight as i64 + 2 * (k_i + 1), k_i);
    let satisfied = Ratio::from_integer(s.degree as i64) > rhs;
    Ok(Threshold { order: k, rhs, satisfied })
}

/// Jet of `M[f]` at `z0` with `extra_order + 1` coefficients.
pub fn monomial_eval(spec: &MonomialSpec, f: &Expr, z0: Complex64, extra_order: usize) -> Result<LaurentJet> {
    let top = spec.exponents.len() - 1;
    let mut work = extra_order + 1;
    for _ in 0..4 {
        let base = jet_eval(f, z0, work + top + 2)?.to_series();
        let mut acc: Option<Series> = None;
        let mut d = base;
        for (i, &n) in spec.exponents.iter().enumerate() {
            if i > 0 {
                d = d.deriv();
            }
            if n == 0 {
                continue;
            }
            let p = d.powi(n as i32, work)?;
            acc = Some(match acc {
                None => p,
                Some(a) => a.mul(&p),
            });
        }
        let s = acc.expect("spec has a positive exponent").check_finite()?;
        if s.is_zero() || s.c.len() > extra_order {
            return Ok(LaurentJet::from_series(&s.truncate_len(extra_order + 1), extra_order));
        }
        work *= 2;
    }
    Err(Error::PrecisionLoss { needed: extra_order + 1 })
}

/// One term `alpha * prod_j (f^(j))^S_j` of a differential polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyTerm {
    pub coefficient: Expr,
    pub exponents: Vec<u32>,
}

/// Differential polynomial `P[f] = sum_i alpha_i prod_j (f^(j))^S_ij`.
///
/// Coefficients are parameter-free expressions; whether they are small with
/// respect to `f` is an asymptotic hypothesis and is not checked.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffPolynomial {
    terms: Vec<PolyTerm>,
}

/// `(d(P), theta(P))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyStats {
    /// Minimal total degree over terms.
    pub degree: u32,
    /// Maximal derivative weight `sum_j j S_ij` over terms.
    pub theta: u32,
}

impl DiffPolynomial {
    pub fn new(terms: Vec<PolyTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidMonomial("differential polynomial has no terms".into()));
        }
        for t in &terms {
            if let Expr::Const(c) = t.coefficient {
                if c == Complex64::new(0.0, 0.0) {
                    return Err(Error::InvalidMonomial("zero coefficient".into()));
                }
            }
            if !t.coefficient.is_parameter_free() {
                return Err(Error::InvalidMonomial("coefficient has free parameters".into()));
            }
            if t.exponents.iter().all(|&n| n == 0) {
                return Err(Error::InvalidMonomial("term without f-factors".into()));
            }
        }
        Ok(DiffPolynomial { terms })
    }

    /// One-term polynomial with unit coefficient.
    pub fn from_monomial(spec: &MonomialSpec) -> Self {
        DiffPolynomial {
            terms: vec![PolyTerm { coefficient: Expr::constant(1.0), exponents: spec.exponents.clone() }],
        }
    }

    pub fn terms(&self) -> &[PolyTerm] {
        &self.terms
    }

    pub fn stats(&self) -> PolyStats {
        poly_stats(self)
    }

    /// `P[f]` as an expression.
    pub fn apply(&self, f: &Expr) -> Expr {
        let mut out: Option<Expr> = None;
        for t in &self.terms {
            let prod = product_expr(f, &t.exponents);
            let term = match &t.coefficient {
                Expr::Const(c) if *c == Complex64::new(1.0, 0.0) => prod,
                a => a.clone() * prod,
            };
            out = Some(match out {
                None => term,
                Some(acc) => acc + term,
            });
        }
        out.expect("non-empty")
    }
}

pub fn poly_stats(p: &DiffPolynomial) -> PolyStats {
    let degree = p.terms.iter().map(|t| t.exponents.iter().sum::<u32>()).min().unwrap_or(0);
    let theta = p
        .terms
        .iter()
        .map(|t| t.exponents.iter().enumerate().map(|(j, &s)| j as u32 * s).sum::<u32>())
        .max()
        .unwrap_or(0);
    PolyStats { degree, theta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, parse_with_params, Family};
    use crate::jet::derivative_at;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec(e: &[u32]) -> MonomialSpec {
        MonomialSpec::new(e.to_vec()).unwrap()
    }

    #[test]
    fn stats_examples() {
        let s = stats(&spec(&[2, 0, 1, 1]));
        assert_eq!((s.degree, s.weight, s.derivative_weight), (4, 9, 5));
        let s = stats(&spec(&[7, 1]));
        assert_eq!((s.degree, s.weight, s.derivative_weight), (8, 9, 1));
        let s = stats(&spec(&[0, 1]));
        assert_eq!((s.degree, s.weight, s.derivative_weight), (1, 2, 1));
    }

    #[test]
    fn threshold_examples() {
        let t = threshold_check(&spec(&[0, 1])).unwrap();
        assert_eq!(t.rhs, Ratio::from_integer(7));
        assert!(!t.satisfied);
        let t = threshold_check(&spec(&[7, 1])).unwrap();
        assert_eq!(t.rhs, Ratio::from_integer(7));
        assert!(t.satisfied);
        let t = threshold_check(&spec(&[6, 1])).unwrap();
        assert!(!t.satisfied);
    }

    #[test]
    fn pure_power_needs_order() {
        assert_eq!(threshold_check(&spec(&[3])), Err(Error::UndefinedOrder));
        assert_eq!(threshold_check(&spec(&[3, 0, 0])), Err(Error::UndefinedOrder));
        let t = threshold_check(&MonomialSpec::with_order(vec![1, 0], 1).unwrap()).unwrap();
        assert_eq!(t.rhs, Ratio::from_integer(4));
        assert!(MonomialSpec::with_order(vec![1, 1], 2).is_err());
        assert!(MonomialSpec::new(vec![0, 0]).is_err());
    }

    #[test]
    fn reduced_threshold_agrees() {
        for k in 1..=12usize {
            for n in 1..=40u32 {
                let mut e = vec![0u32; k + 1];
                e[0] = n;
                e[k] = 1;
                let t = threshold_check(&spec(&e)).unwrap();
                let reduced = Ratio::from_integer(n as i64) > Ratio::new((k * k + 3 * k + 2) as i64, k as i64);
                assert_eq!(t.satisfied, reduced, "n = {n}, k = {k}");
            }
        }
    }

    #[test]
    fn eval_examples() {
        let fam = Family::new(parse_with_params("m*z", &["m"]).unwrap(), "m", vec![c(2.0, 0.0)]).unwrap();
        let f = fam.instantiate(0).unwrap();
        let j = monomial_eval(&spec(&[7, 1]), &f, c(1.0, 0.0), 2).unwrap();
        assert_eq!(j.valuation, 0);
        assert!((j.coeffs[0] - c(256.0, 0.0)).norm() < 1e-10);

        let f = parse("3*z - 1").unwrap();
        let j = monomial_eval(&spec(&[0, 1]), &f, c(0.4, 0.2), 3).unwrap();
        assert_eq!(j.valuation, 0);
        assert_eq!(j.coeffs[0], c(3.0, 0.0));
        assert!(j.coeffs[1..].iter().all(|x| x.norm() == 0.0));

        let j = monomial_eval(&MonomialSpec::with_order(vec![1, 0], 1).unwrap(), &parse("z").unwrap(), c(0.0, 0.0), 2)
            .unwrap();
        assert_eq!(j.valuation, 1);
        assert_eq!(j.coeffs[0], c(1.0, 0.0));
    }

    #[test]
    fn eval_agrees_with_expression_form() {
        let f = parse("sin(z) + z^2/3").unwrap();
        let s = spec(&[2, 0, 1]);
        let m = s.apply(&f);
        for z in [c(0.4, 0.1), c(-1.0, 0.8)] {
            let a = monomial_eval(&s, &f, z, 3).unwrap();
            let b = jet_eval(&m, z, 3).unwrap();
            for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
                assert!((x - y).norm() <= 1e-12 * (1.0 + y.norm()));
            }
        }
    }

    #[test]
    fn poly_stats_examples() {
        let p = DiffPolynomial::new(vec![PolyTerm { coefficient: Expr::constant(1.0), exponents: vec![2, 1] }]).unwrap();
        assert_eq!(poly_stats(&p), PolyStats { degree: 3, theta: 1 });
        let p = DiffPolynomial::new(vec![
            PolyTerm { coefficient: Expr::constant(1.0), exponents: vec![3] },
            PolyTerm { coefficient: parse("z").unwrap(), exponents: vec![1, 0, 2] },
        ])
        .unwrap();
        assert_eq!(poly_stats(&p), PolyStats { degree: 3, theta: 4 });
        assert!(DiffPolynomial::new(vec![PolyTerm { coefficient: Expr::constant(0.0), exponents: vec![1] }]).is_err());
    }

    fn arb_spec() -> impl Strategy<Value = MonomialSpec> {
        prop::collection::vec(0u32..5, 1..6)
            .prop_filter("some positive exponent", |v| v.iter().any(|&n| n > 0))
            .prop_map(|v| MonomialSpec::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn weight_is_degree_plus_derivative_weight(s in arb_spec()) {
            let st = stats(&s);
            prop_assert_eq!(st.weight, st.degree + st.derivative_weight);
        }

        #[test]
        fn monomial_as_polynomial(s in arb_spec()) {
            let p = DiffPolynomial::from_monomial(&s).stats();
            let st = stats(&s);
            prop_assert_eq!(p.degree as u64, st.degree);
            prop_assert_eq!(p.theta as u64, st.derivative_weight);
        }

        #[test]
        fn eval_is_product_of_derivatives(s in arb_spec(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let f = parse("exp(z/2) + z^3 - 2").unwrap();
            let z = c(x, y);
            let j = monomial_eval(&s, &f, z, 0).unwrap();
            let mut prod = c(1.0, 0.0);
            let mut ok = true;
            for (i, &n) in s.exponents().iter().enumerate() {
                let d = derivative_at(&f, z, i).unwrap().finite().unwrap();
                if d.norm() < 1e-6 { ok = false; }
                prod *= d.powi(n as i32);
            }
            prop_assume!(ok);
            let got = j.value().finite().unwrap();
            prop_assert!((got - prod).norm() <= 1e-10 * prod.norm());
        }
    }
}
