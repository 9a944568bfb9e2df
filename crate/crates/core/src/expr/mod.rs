//! Meromorphic expressions in one complex variable.
//!
//! An [`Expr`] is an immutable tree over the variable `z`, complex literals,
//! declared parameters, the field operations, integer powers, `exp`, `sin`,
//! `cos` and an explicit derivative node `D(expr, k)`. Expressions are
//! produced by [`parse`] (or the builder methods) and consumed by the jet
//! evaluator.
//!
//! The textual form produced by `Display` parses back to the same tree.

mod parser;

use std::collections::BTreeSet;
use std::fmt;
use std::ops;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use parser::{parse, parse_with_params, RESERVED};

/// Expression tree node.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var,
    Const(Complex64),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    /// `D(e, k)`: the k-th derivative of `e` with respect to `z`, `k >= 1`.
    Deriv(Box<Expr>, u32),
}

impl Expr {
    pub fn var() -> Expr {
        Expr::Var
    }

    /// Complex literal.
    ///
    /// # Panics
    /// If either part is NaN or infinite.
    pub fn constant(c: impl Into<Complex64>) -> Expr {
        let c = c.into();
        assert!(c.re.is_finite() && c.im.is_finite(), "non-finite literal {c}");
        Expr::Const(c)
    }

    pub fn try_constant(c: Complex64) -> Result<Expr> {
        if c.re.is_finite() && c.im.is_finite() {
            Ok(Expr::Const(c))
        } else {
            Err(Error::NonFiniteLiteral)
        }
    }

    pub fn param(name: impl Into<String>) -> Expr {
        Expr::Param(name.into())
    }

    pub fn powi(self, n: i32) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }

    /// k-th derivative node. `k = 0` returns the expression unchanged.
    pub fn deriv(self, k: u32) -> Expr {
        if k == 0 {
            self
        } else {
            Expr::Deriv(Box::new(self), k)
        }
    }

    /// Names of parameters occurring in the tree.
    pub fn free_params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Param(p) = e {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn is_parameter_free(&self) -> bool {
        self.free_params().is_empty()
    }

    /// Sum of all derivative orders in the tree; an upper bound on the number
    /// of extra coefficients derivative nodes consume during jet evaluation.
    pub fn derivative_weight(&self) -> u32 {
        let mut w = 0;
        self.visit(&mut |e| {
            if let Expr::Deriv(_, k) = e {
                w += *k;
            }
        });
        w
    }

    pub fn has_derivative(&self) -> bool {
        self.derivative_weight() > 0
    }

    /// Node count.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Var | Expr::Const(_) | Expr::Param(_) => {}
            Expr::Neg(a)
            | Expr::Pow(a, _)
            | Expr::Exp(a)
            | Expr::Sin(a)
            | Expr::Cos(a)
            | Expr::Deriv(a, _) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    /// Rebuilds the tree bottom-up, letting `leaf` replace `Var`/`Param`
    /// leaves and `deriv` rebuild derivative nodes from their mapped child.
    fn map_tree(
        &self,
        leaf: &impl Fn(&Expr) -> Expr,
        deriv: &impl Fn(Expr, u32) -> Expr,
    ) -> Expr {
        let m = |e: &Expr| Box::new(e.map_tree(leaf, deriv));
        match self {
            Expr::Var | Expr::Param(_) => leaf(self),
            Expr::Const(c) => Expr::Const(*c),
            Expr::Neg(a) => Expr::Neg(m(a)),
            Expr::Add(a, b) => Expr::Add(m(a), m(b)),
            Expr::Sub(a, b) => Expr::Sub(m(a), m(b)),
            Expr::Mul(a, b) => Expr::Mul(m(a), m(b)),
            Expr::Div(a, b) => Expr::Div(m(a), m(b)),
            Expr::Pow(a, n) => Expr::Pow(m(a), *n),
            Expr::Exp(a) => Expr::Exp(m(a)),
            Expr::Sin(a) => Expr::Sin(m(a)),
            Expr::Cos(a) => Expr::Cos(m(a)),
            Expr::Deriv(a, k) => deriv(a.map_tree(leaf, deriv), *k),
        }
    }

    /// Replaces every occurrence of parameter `name` by the literal `value`.
    pub fn substitute(&self, name: &str, value: Complex64) -> Result<Expr> {
        let lit = Expr::try_constant(value)?;
        Ok(self.map_tree(
            &|e| match e {
                Expr::Param(p) if p == name => lit.clone(),
                other => other.clone(),
            },
            &|a, k| Expr::Deriv(Box::new(a), k),
        ))
    }
}

/// Returns an expression in the new variable equal to `expr(c0 + c1 * z)`.
///
/// Derivative nodes pick up the chain-rule factor `c1^(-k)` so that `D(e, k)`
/// keeps meaning the k-th derivative in the original variable.
pub fn affine_precompose(expr: &Expr, c0: Complex64, c1: Complex64) -> Result<Expr> {
    if c1 == Complex64::new(0.0, 0.0) || !c1.is_finite() {
        return Err(Error::DegenerateScale);
    }
    if !c0.is_finite() {
        return Err(Error::NonFiniteLiteral);
    }
    let inner = Expr::Const(c0) + Expr::Const(c1) * Expr::Var;
    Ok(expr.map_tree(
        &|e| match e {
            Expr::Var => inner.clone(),
            other => other.clone(),
        },
        &|a, k| Expr::Const(c1.powi(-(k as i32))) * Expr::Deriv(Box::new(a), k),
    ))
}

/// A one-parameter family `base(p)` for `p` over a finite value list.
#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    base: Expr,
    parameter: String,
    values: Vec<Complex64>,
}

impl Family {
    pub fn new(base: Expr, parameter: impl Into<String>, values: Vec<Complex64>) -> Result<Self> {
        let parameter = parameter.into();
        let free = base.free_params();
        if !free.contains(&parameter) {
            return Err(Error::InvalidFamily(format!(
                "parameter `{parameter}` does not occur in the base expression"
            )));
        }
        if let Some(other) = free.iter().find(|p| **p != parameter) {
            return Err(Error::InvalidFamily(format!("parameter `{other}` is left unbound")));
        }
        if values.is_empty() {
            return Err(Error::InvalidFamily("empty value sequence".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLiteral);
        }
        Ok(Family { base, parameter, values })
    }

    /// Family over the integers `lo..=hi`.
    pub fn integer_range(base: Expr, parameter: impl Into<String>, lo: i64, hi: i64) -> Result<Self> {
        let values = (lo..=hi).map(|n| Complex64::new(n as f64, 0.0)).collect();
        Family::new(base, parameter, values)
    }

    pub fn base(&self) -> &Expr {
        &self.base
    }

    pub fn parameter(&self) -> &str {
        &self.parameter
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn instantiate(&self, index: usize) -> Result<Expr> {
        instantiate(self, index)
    }
}

/// Member `index` of the family, with the parameter replaced by its literal.
pub fn instantiate(family: &Family, index: usize) -> Result<Expr> {
    let value = family
        .values
        .get(index)
        .copied()
        .ok_or(Error::IndexOutOfRange { index, len: family.values.len() })?;
    family.base.substitute(&family.parameter, value)
}

macro_rules! binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}

binop!(Add, add, Add);
binop!(Sub, sub, Sub);
binop!(Mul, mul, Mul);
binop!(Div, div, Div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

fn write_real(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    // Debug formatting is the shortest representation that round-trips.
    write!(f, "{x:?}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var => write!(f, "z"),
            Expr::Param(p) => write!(f, "{p}"),
            Expr::Const(c) => {
                if c.im == 0.0 && c.im.is_sign_positive() && c.re.is_sign_positive() {
                    write_real(f, c.re)
                } else if c.re == 0.0 && c.re.is_sign_positive() && c.im.is_sign_positive() {
                    write_real(f, c.im)?;
                    write!(f, "i")
                } else {
                    write!(f, "complex(")?;
                    write_real(f, c.re)?;
                    write!(f, ", ")?;
                    write_real(f, c.im)?;
                    write!(f, ")")
                }
            }
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => {
                if !matches!(**a, Expr::Pow(..)) {
                    write!(f, "{a}^{n}")
                } else {
                    write!(f, "({a})^{n}")
                }
            }
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Deriv(a, k) => write!(f, "D({a}, {k})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn instantiate_substitutes_parameter() {
        let fam = Family::integer_range(parse_with_params("n*z", &["n"]).unwrap(), "n", 1, 3).unwrap();
        let e = fam.instantiate(1).unwrap();
        assert_eq!(e, Expr::constant(2.0) * Expr::Var);
        assert!(e.is_parameter_free());
    }

    #[test]
    fn instantiate_out_of_range() {
        let fam = Family::new(parse_with_params("exp(n*z)", &["n"]).unwrap(), "n", vec![c(5.0, 0.0)]).unwrap();
        assert_eq!(fam.instantiate(0).unwrap(), parse("exp(5*z)").unwrap());
        assert_eq!(fam.instantiate(1), Err(Error::IndexOutOfRange { index: 1, len: 1 }));
    }

    #[test]
    fn linear_minus_literal_family() {
        let fam = Family::new(parse_with_params("m*z - 1", &["m"]).unwrap(), "m", vec![c(3.0, 0.0)]).unwrap();
        assert_eq!(fam.instantiate(0).unwrap(), parse("3*z - 1").unwrap());
    }

    #[test]
    fn family_rejects_absent_or_unbound_parameters() {
        assert!(Family::new(parse("z").unwrap(), "n", vec![c(1.0, 0.0)]).is_err());
        let two = parse_with_params("n*z + m", &["n", "m"]).unwrap();
        assert!(Family::new(two, "n", vec![c(1.0, 0.0)]).is_err());
        let one = parse_with_params("n*z", &["n"]).unwrap();
        assert!(Family::new(one, "n", vec![]).is_err());
    }

    #[test]
    fn instantiate_only_touches_parameter_leaves() {
        let base = parse_with_params("D(sin(n*z)^2, 2) / (z - n)", &["n"]).unwrap();
        let fam = Family::new(base.clone(), "n", vec![c(0.5, -1.0)]).unwrap();
        let inst = fam.instantiate(0).unwrap();
        assert_eq!(inst.size(), base.size());
    }

    #[test]
    fn degenerate_scale_rejected() {
        assert_eq!(affine_precompose(&Expr::Var, c(0.0, 0.0), c(0.0, 0.0)), Err(Error::DegenerateScale));
    }

    #[test]
    fn display_round_trips_literals() {
        for src in ["complex(-1.5, 2.0)", "2.5i", "0.1", "1e-7", "complex(-0.0, 0.0)", "(-z)^2", "(z^2)^3"] {
            let e = parse(src).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{src}");
        }
    }
}
