//! Truncated Laurent series arithmetic.
//!
//! A [`Series`] with valuation `val` and coefficients `c` stands for
//! `sum_i c[i] h^(val + i) + O(h^(val + c.len()))`. An empty coefficient
//! vector is a zero known through `h^val` (exclusive); `val >= EXACT` marks a
//! zero that is exact, such as the literal `0`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) const EXACT: i64 = 1 << 40;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Series {
    pub val: i64,
    pub c: Vec<Complex64>,
}

impl Series {
    pub fn zero(prec: i64) -> Self {
        Series { val: prec.min(EXACT), c: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// First unknown exponent.
    pub fn prec(&self) -> i64 {
        (self.val + self.c.len() as i64).min(EXACT)
    }

    pub fn constant(v: Complex64, len: usize) -> Self {
        if v == ZERO {
            return Series::zero(EXACT);
        }
        let mut c = vec![ZERO; len.max(1)];
        c[0] = v;
        Series { val: 0, c }
    }

    /// The identity `z0 + h`.
    pub fn variable(z0: Complex64, len: usize) -> Self {
        let len = len.max(1);
        let mut c = vec![ZERO; len];
        if z0 == ZERO {
            c[0] = ONE;
            Series { val: 1, c }
        } else {
            c[0] = z0;
            if len > 1 {
                c[1] = ONE;
            }
            Series { val: 0, c }
        }
    }

    /// Coefficient of `h^e`, zero outside the stored range.
    pub fn at(&self, e: i64) -> Complex64 {
        let i = e - self.val;
        if i < 0 || i >= self.c.len() as i64 {
            ZERO
        } else {
            self.c[i as usize]
        }
    }

    /// Drops leading exact zeros.
    fn normalized(mut self) -> Self {
        let lead = self.c.iter().take_while(|x| **x == ZERO).count();
        if lead == self.c.len() {
            return Series::zero(self.prec());
        }
        self.c.drain(..lead);
        self.val += lead as i64;
        self
    }

    pub fn truncate_prec(&self, prec: i64) -> Self {
        if self.val >= prec {
            return Series::zero(prec);
        }
        let keep = ((prec - self.val) as usize).min(self.c.len());
        Series { val: self.val, c: self.c[..keep].to_vec() }
    }

    /// Keeps at most `len` coefficients.
    pub fn truncate_len(mut self, len: usize) -> Self {
        if self.c.len() > len {
            self.c.truncate(len.max(1));
        }
        self
    }

    pub fn check_finite(self) -> Result<Self> {
        if self.c.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
            Ok(self)
        } else {
            Err(Error::Overflow)
        }
    }

    pub fn neg(&self) -> Self {
        Series { val: self.val, c: self.c.iter().map(|x| -x).collect() }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        if s == ZERO {
            return Series::zero(EXACT);
        }
        Series { val: self.val, c: self.c.iter().map(|x| x * s).collect() }
    }

    fn add_signed(&self, other: &Series, sign: f64) -> Self {
        let prec = self.prec().min(other.prec());
        if self.is_zero() {
            return other.truncate_prec(prec).scale(Complex64::new(sign, 0.0));
        }
        if other.is_zero() {
            return self.truncate_prec(prec);
        }
        let lo = self.val.min(other.val);
        if lo >= prec {
            return Series::zero(prec);
        }
        let n = (prec - lo) as usize;
        let mut c = Vec::with_capacity(n);
        let mut leading = true;
        for e in lo..prec {
            let a = self.at(e);
            let b = other.at(e) * sign;
            let s = a + b;
            // Cancellation in a leading term is rounded to an exact zero so
            // that valuations survive f - f style constructions.
            if leading && s.norm() <= 8.0 * f64::EPSILON * a.norm().max(b.norm()) {
                c.push(ZERO);
            } else {
                leading = false;
                c.push(s);
            }
        }
        Series { val: lo, c }.normalized()
    }

    pub fn add(&self, other: &Series) -> Self {
        self.add_signed(other, 1.0)
    }

    pub fn sub(&self, other: &Series) -> Self {
        self.add_signed(other, -1.0)
    }

    pub fn mul(&self, other: &Series) -> Self {
        let val = self.val.saturating_add(other.val);
        if self.is_zero() || other.is_zero() {
            return Series::zero(val);
        }
        let n = self.c.len().min(other.c.len());
        let mut c = vec![ZERO; n];
        for (k, slot) in c.iter_mut().enumerate() {
            let mut acc = ZERO;
            for j in 0..=k {
                acc += self.c[j] * other.c[k - j];
            }
            *slot = acc;
        }
        Series { val, c }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroDivisor);
        }
        let n = self.c.len();
        let inv0 = ONE / self.c[0];
        let mut r = vec![ZERO; n];
        r[0] = inv0;
        for k in 1..n {
            let mut acc = ZERO;
            for j in 1..=k {
                acc += self.c[j] * r[k - j];
            }
            r[k] = -acc * inv0;
        }
        Ok(Series { val: -self.val, c: r })
    }

    pub fn div(&self, other: &Series) -> Result<Self> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn powi(&self, n: i32, len: usize) -> Result<Self> {
        if n == 0 {
            return Ok(Series::constant(ONE, len));
        }
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc: Option<Series> = None;
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => sq.clone(),
                    Some(a) => a.mul(&sq),
                });
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        Ok(acc.expect("n != 0"))
    }

    /// Absolute Taylor coefficients `t[0..n)` of a series with `val >= 0`.
    fn taylor(&self, cap: usize) -> Result<Vec<Complex64>> {
        if !self.is_zero() && self.val < 0 {
            return Err(Error::EssentialSingularity);
        }
        let n = (self.prec().max(1) as usize).min(cap.max(1));
        Ok((0..n as i64).map(|e| self.at(e)).collect())
    }

    pub fn exp(&self, cap: usize) -> Result<Self> {
        let t = self.taylor(cap)?;
        let n = t.len();
        let mut e = vec![ZERO; n];
        e[0] = t[0].exp();
        for k in 1..n {
            let mut acc = ZERO;
            for j in 1..=k {
                acc += t[j] * (j as f64) * e[k - j];
            }
            e[k] = acc / k as f64;
        }
        Ok(Series { val: 0, c: e }.normalized())
    }

    /// `(sin, cos)` of the series.
    pub fn sin_cos(&self, cap: usize) -> Result<(Self, Self)> {
        let t = self.taylor(cap)?;
        let n = t.len();
        let mut s = vec![ZERO; n];
        let mut c = vec![ZERO; n];
        s[0] = t[0].sin();
        c[0] = t[0].cos();
        for k in 1..n {
            let mut as_ = ZERO;
            let mut ac = ZERO;
            for j in 1..=k {
                let w = t[j] * (j as f64);
                as_ += w * c[k - j];
                ac += w * s[k - j];
            }
            s[k] = as_ / k as f64;
            c[k] = -ac / k as f64;
        }
        Ok((Series { val: 0, c: s }.normalized(), Series { val: 0, c }.normalized()))
    }

    /// Termwise derivative in `h`.
    pub fn deriv(&self) -> Self {
        if self.is_zero() {
            return Series::zero(if self.val >= EXACT { EXACT } else { self.val - 1 });
        }
        let c = self
            .c
            .iter()
            .enumerate()
            .map(|(i, x)| x * (self.val + i as i64) as f64)
            .collect();
        Series { val: self.val - 1, c }.normalized()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn reciprocal_of_pole() {
        let z = Series::variable(ZERO, 4);
        let r = z.recip().unwrap();
        assert_eq!(r.val, -1);
        assert_eq!(r.c[0], ONE);
    }

    #[test]
    fn cancellation_raises_valuation() {
        let n = 6;
        let z = Series::variable(ZERO, n);
        let e = z.exp(n).unwrap();
        let d = e.sub(&Series::constant(ONE, n));
        assert_eq!(d.val, 1);
        assert_eq!(d.c.len(), n - 1);
        assert!((d.c[1] - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn exact_zero_survives_multiplication() {
        let zero = Series::constant(ZERO, 3);
        let z = Series::variable(c(2.0), 3);
        let p = zero.mul(&z);
        assert!(p.is_zero());
        assert_eq!(p.val, EXACT);
        assert_eq!(z.add(&zero), z);
    }

    #[test]
    fn derivative_of_constant_term() {
        let s = Series { val: 0, c: vec![c(3.0), c(2.0), c(1.0)] };
        let d = s.deriv();
        assert_eq!(d.val, 0);
        assert_eq!(d.c, vec![c(2.0), c(2.0)]);
    }

    #[test]
    fn sin_cos_at_zero() {
        let z = Series::variable(ZERO, 6);
        let (s, co) = z.sin_cos(6).unwrap();
        assert_eq!(s.val, 1);
        assert!((s.c[2] - c(-1.0 / 6.0)).norm() < 1e-15);
        assert!((co.c[2] - c(-0.5)).norm() < 1e-15);
    }
}
