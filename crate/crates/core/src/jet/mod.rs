//! Laurent-jet evaluation of expressions.
//!
//! [`jet_eval`] expands an expression at a point as a truncated Laurent
//! series. Poles are first class: division simply moves the valuation, and
//! pole orders of `f^(k)` fall out of the valuation of the expansion.

mod series;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;

pub(crate) use series::{Series, EXACT};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Truncated Laurent expansion `f(z0 + h) = sum_{i<=K} c_i h^(v+i) + O(h^(v+K+1))`.
///
/// When `zero` is set the coefficients are all zero and `valuation` is the
/// exponent through which the expansion is known to vanish:
/// `f(z0 + h) = O(h^valuation)`. An exact zero (the literal `0` and
/// expressions built from it) reports `i64::MAX`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaurentJet {
    pub valuation: i64,
    pub coeffs: Vec<Complex64>,
    pub zero: bool,
}

impl LaurentJet {
    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of `h^e` (zero outside the stored window).
    pub fn coeff_of_power(&self, e: i64) -> Complex64 {
        if self.zero {
            return ZERO;
        }
        let i = e - self.valuation;
        if i < 0 || i as usize >= self.coeffs.len() {
            ZERO
        } else {
            self.coeffs[i as usize]
        }
    }

    /// Value at the expansion point on the Riemann sphere.
    pub fn value(&self) -> ExtendedComplex {
        if self.zero || self.valuation > 0 {
            ExtendedComplex::Finite(ZERO)
        } else if self.valuation == 0 {
            ExtendedComplex::Finite(self.coeffs[0])
        } else {
            ExtendedComplex::Pole((-self.valuation) as u32)
        }
    }

    pub(crate) fn from_series(s: &Series, k: usize) -> Self {
        if s.is_zero() {
            let valuation = if s.val >= EXACT { i64::MAX } else { s.val };
            return LaurentJet { valuation, coeffs: vec![ZERO; k + 1], zero: true };
        }
        let mut coeffs = s.c.clone();
        coeffs.resize(k + 1, ZERO);
        LaurentJet { valuation: s.val, coeffs, zero: false }
    }

    pub(crate) fn to_series(&self) -> Series {
        if self.zero {
            Series::zero(if self.valuation == i64::MAX { EXACT } else { self.valuation })
        } else {
            Series { val: self.valuation, c: self.coeffs.clone() }
        }
    }

    /// Jet of the derivative, one order shorter when the constant term drops.
    pub fn derivative(&self) -> LaurentJet {
        let d = self.to_series().deriv();
        let k = if d.is_zero() { self.order() } else { d.c.len() - 1 };
        LaurentJet::from_series(&d, k)
    }

    pub fn recip(&self) -> Result<LaurentJet> {
        let r = self.to_series().recip()?;
        Ok(LaurentJet::from_series(&r, self.order()))
    }

    pub fn mul(&self, other: &LaurentJet) -> LaurentJet {
        let p = self.to_series().mul(&other.to_series());
        let k = self.order().min(other.order());
        LaurentJet::from_series(&p, k)
    }

    pub fn powi(&self, n: i32) -> Result<LaurentJet> {
        let p = self.to_series().powi(n, self.coeffs.len())?;
        Ok(LaurentJet::from_series(&p, self.order()))
    }

}

/// A point of the Riemann sphere, with the order recorded at poles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ExtendedComplex {
    Finite(Complex64),
    Pole(u32),
}

impl ExtendedComplex {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            ExtendedComplex::Finite(c) => Some(c),
            ExtendedComplex::Pole(_) => None,
        }
    }

    pub fn is_pole(self) -> bool {
        matches!(self, ExtendedComplex::Pole(_))
    }
}

/// Series of `expr` at `z0` with working length `n`.
pub(crate) fn series_of(expr: &Expr, z0: Complex64, n: usize) -> Result<Series> {
    let s = match expr {
        Expr::Var => Series::variable(z0, n),
        Expr::Const(c) => Series::constant(*c, n),
        Expr::Param(p) => return Err(Error::FreeParameter(p.clone())),
        Expr::Neg(a) => series_of(a, z0, n)?.neg(),
        Expr::Add(a, b) => series_of(a, z0, n)?.add(&series_of(b, z0, n)?),
        Expr::Sub(a, b) => series_of(a, z0, n)?.sub(&series_of(b, z0, n)?),
        Expr::Mul(a, b) => series_of(a, z0, n)?.mul(&series_of(b, z0, n)?),
        Expr::Div(a, b) => series_of(a, z0, n)?.div(&series_of(b, z0, n)?)?,
        Expr::Pow(a, k) => series_of(a, z0, n)?.powi(*k, n)?,
        Expr::Exp(a) => series_of(a, z0, n)?.exp(n)?,
        Expr::Sin(a) => series_of(a, z0, n)?.sin_cos(n)?.0,
        Expr::Cos(a) => series_of(a, z0, n)?.sin_cos(n)?.1,
        Expr::Deriv(a, k) => {
            let mut s = series_of(a, z0, n)?;
            for _ in 0..*k {
                s = s.deriv();
            }
            s
        }
    };
    s.check_finite()
}

/// `expr = num / den` with both parts holomorphic at `z0`.
///
/// The numerator's zeros contain every zero of `expr` (and possibly common
/// zeros with the denominator); its argument-principle count has no pole
/// contribution.
pub(crate) fn fraction_of(expr: &Expr, z0: Complex64, n: usize) -> Result<(Series, Series)> {
    let one = || Series::constant(Complex64::new(1.0, 0.0), n);
    let (num, den) = match expr {
        Expr::Var | Expr::Const(_) | Expr::Param(_) => (series_of(expr, z0, n)?, one()),
        Expr::Neg(a) => {
            let (p, q) = fraction_of(a, z0, n)?;
            (p.neg(), q)
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let (pa, qa) = fraction_of(a, z0, n)?;
            let (pb, qb) = fraction_of(b, z0, n)?;
            let l = pa.mul(&qb);
            let r = pb.mul(&qa);
            let num = if matches!(expr, Expr::Add(..)) { l.add(&r) } else { l.sub(&r) };
            (num, qa.mul(&qb))
        }
        Expr::Mul(a, b) => {
            let (pa, qa) = fraction_of(a, z0, n)?;
            let (pb, qb) = fraction_of(b, z0, n)?;
            (pa.mul(&pb), qa.mul(&qb))
        }
        Expr::Div(a, b) => {
            let (pa, qa) = fraction_of(a, z0, n)?;
            let (pb, qb) = fraction_of(b, z0, n)?;
            (pa.mul(&qb), qa.mul(&pb))
        }
        Expr::Pow(a, k) => {
            let (p, q) = fraction_of(a, z0, n)?;
            let m = k.unsigned_abs() as i32;
            if *k >= 0 {
                (p.powi(m, n)?, q.powi(m, n)?)
            } else {
                (q.powi(m, n)?, p.powi(m, n)?)
            }
        }
        Expr::Exp(_) | Expr::Sin(_) | Expr::Cos(_) => (series_of(expr, z0, n)?, one()),
        Expr::Deriv(a, k) => {
            let (p, q) = fraction_of(a, z0, n)?;
            let mut f = p.div(&q)?;
            for _ in 0..*k {
                f = f.deriv();
            }
            let den = q.powi(*k as i32 + 1, n)?;
            (f.mul(&den), den)
        }
    };
    Ok((num.check_finite()?, den.check_finite()?))
}

/// Value and first derivative at a point.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Dual {
    pub v: Complex64,
    pub d: Complex64,
}

impl Dual {
    fn constant(v: Complex64) -> Dual {
        Dual { v, d: ZERO }
    }

    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }

    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }

    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }

    fn powu(self, m: u32) -> Dual {
        if m == 0 {
            return Dual::constant(Complex64::new(1.0, 0.0));
        }
        let up = self.v.powi(m as i32 - 1);
        Dual { v: up * self.v, d: up * self.d * m as f64 }
    }

    /// `log'` of the value: `d / v`.
    pub fn log_derivative(self) -> Complex64 {
        self.d / self.v
    }
}

/// Numerator and denominator of [`fraction_direct`] with their derivatives.
pub(crate) fn fraction_dual(expr: &Expr, z: Complex64) -> Result<(Dual, Dual)> {
    if expr.has_derivative() {
        let n = 4 + expr.derivative_weight() as usize;
        let (p, q) = fraction_of(expr, z, n)?;
        let dual = |s: &Series| Dual { v: s.at(0), d: s.at(1) };
        return Ok((dual(&p), dual(&q)));
    }
    fraction_dual_rec(expr, z)
}

fn fraction_dual_rec(expr: &Expr, z: Complex64) -> Result<(Dual, Dual)> {
    let one = Dual::constant(Complex64::new(1.0, 0.0));
    Ok(match expr {
        Expr::Var => (Dual { v: z, d: Complex64::new(1.0, 0.0) }, one),
        Expr::Const(c) => (Dual::constant(*c), one),
        Expr::Param(p) => return Err(Error::FreeParameter(p.clone())),
        Expr::Neg(a) => {
            let (p, q) = fraction_dual_rec(a, z)?;
            (Dual { v: -p.v, d: -p.d }, q)
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let (pa, qa) = fraction_dual_rec(a, z)?;
            let (pb, qb) = fraction_dual_rec(b, z)?;
            let num = if matches!(expr, Expr::Add(..)) { pa.mul(qb).add(pb.mul(qa)) } else { pa.mul(qb).sub(pb.mul(qa)) };
            (num, qa.mul(qb))
        }
        Expr::Mul(a, b) => {
            let (pa, qa) = fraction_dual_rec(a, z)?;
            let (pb, qb) = fraction_dual_rec(b, z)?;
            (pa.mul(pb), qa.mul(qb))
        }
        Expr::Div(a, b) => {
            let (pa, qa) = fraction_dual_rec(a, z)?;
            let (pb, qb) = fraction_dual_rec(b, z)?;
            (pa.mul(qb), qa.mul(pb))
        }
        Expr::Pow(a, k) => {
            let (p, q) = fraction_dual_rec(a, z)?;
            let m = k.unsigned_abs();
            if *k >= 0 {
                (p.powu(m), q.powu(m))
            } else {
                (q.powu(m), p.powu(m))
            }
        }
        Expr::Exp(a) | Expr::Sin(a) | Expr::Cos(a) => {
            let (p, q) = fraction_dual_rec(a, z)?;
            if q.v == ZERO {
                return Err(Error::EssentialSingularity);
            }
            let w = p.v / q.v;
            let dw = (p.d * q.v - p.v * q.d) / (q.v * q.v);
            let (v, d) = match expr {
                Expr::Exp(_) => (w.exp(), w.exp() * dw),
                Expr::Sin(_) => (w.sin(), w.cos() * dw),
                _ => (w.cos(), -w.sin() * dw),
            };
            (Dual { v, d }, one)
        }
        Expr::Deriv(..) => unreachable!("derivative nodes take the jet path"),
    })
}

/// Runs `eval` with growing padding until at least `k + 1` coefficients
/// (or a zero known through `h^(k+1)`) survive cancellation.
fn with_padding(expr: &Expr, k: usize, eval: impl Fn(usize) -> Result<Series>) -> Result<Series> {
    let mut pad = 2 + expr.derivative_weight() as usize;
    let mut last = None;
    for _ in 0..5 {
        let s = eval(k + 1 + pad)?;
        let done = if s.is_zero() { s.val > k as i64 } else { s.c.len() > k };
        if done {
            return Ok(s.truncate_len(k + 1));
        }
        last = Some(s);
        pad *= 2;
    }
    match last {
        Some(s) if s.is_zero() => Ok(s),
        _ => Err(Error::PrecisionLoss { needed: k + 1 }),
    }
}

/// Laurent expansion of `expr` at `z0` through `K = order` coefficients.
pub fn jet_eval(expr: &Expr, z0: Complex64, order: usize) -> Result<LaurentJet> {
    let s = with_padding(expr, order, |n| series_of(expr, z0, n))?;
    Ok(LaurentJet::from_series(&s, order))
}

/// Jet of the holomorphic numerator of `expr` (see [`fraction_of`]).
pub(crate) fn numerator_jet(expr: &Expr, z0: Complex64, order: usize) -> Result<LaurentJet> {
    let s = with_padding(expr, order, |n| fraction_of(expr, z0, n).map(|(p, _)| p))?;
    Ok(LaurentJet::from_series(&s, order))
}

/// `f^(k)(z0)` on the Riemann sphere; `Pole(|v| + k)` at a pole of order `|v|`.
pub fn derivative_at(expr: &Expr, z0: Complex64, k: usize) -> Result<ExtendedComplex> {
    let jet = jet_eval(expr, z0, k + 2)?;
    if jet.zero {
        return Ok(ExtendedComplex::Finite(ZERO));
    }
    if jet.valuation < 0 {
        return Ok(ExtendedComplex::Pole((-jet.valuation) as u32 + k as u32));
    }
    let c = jet.coeff_of_power(k as i64);
    Ok(ExtendedComplex::Finite(c * factorial(k)))
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn eval_direct(expr: &Expr, z: Complex64) -> Result<Complex64> {
    Ok(match expr {
        Expr::Var => z,
        Expr::Const(c) => *c,
        Expr::Param(p) => return Err(Error::FreeParameter(p.clone())),
        Expr::Neg(a) => -eval_direct(a, z)?,
        Expr::Add(a, b) => eval_direct(a, z)? + eval_direct(b, z)?,
        Expr::Sub(a, b) => eval_direct(a, z)? - eval_direct(b, z)?,
        Expr::Mul(a, b) => eval_direct(a, z)? * eval_direct(b, z)?,
        Expr::Div(a, b) => eval_direct(a, z)? / eval_direct(b, z)?,
        Expr::Pow(a, n) => eval_direct(a, z)?.powi(*n),
        Expr::Exp(a) => eval_direct(a, z)?.exp(),
        Expr::Sin(a) => eval_direct(a, z)?.sin(),
        Expr::Cos(a) => eval_direct(a, z)?.cos(),
        Expr::Deriv(..) => unreachable!("derivative nodes take the jet path"),
    })
}

/// Point value of `expr` at `z`.
///
/// Derivative-free expressions are evaluated directly; anything non-finite or
/// involving derivative nodes goes through a zeroth-order jet.
pub fn eval_point(expr: &Expr, z: Complex64) -> Result<ExtendedComplex> {
    if !expr.has_derivative() {
        let v = eval_direct(expr, z)?;
        if v.re.is_finite() && v.im.is_finite() {
            return Ok(ExtendedComplex::Finite(v));
        }
    }
    Ok(jet_eval(expr, z, 0)?.value())
}
