//! Numerical laboratory for the value distribution of meromorphic functions.
//!
//! The crate evaluates spherical derivatives of higher derivatives, differential
//! monomials and their degree thresholds, Nevanlinna functionals, and audit
//! predicates for normality criteria built on those quantities.
//!
//! Layering, bottom up:
//!
//! - [`expr`]: expression trees, parser, families, affine precomposition.
//! - [`jet`]: truncated Laurent expansions, the evaluation currency.
//! - [`sphere`]: spherical derivatives and Marty-type suprema.
//! - [`monomial`]: differential monomials and polynomials.
//! - [`locate`]: argument-principle root counting and a-point location.
//! - [`nevanlinna`]: proximity, counting and characteristic functions.
//! - [`criteria`]: normality audits, bound cascades, Zalcman rescaling.
//! - [`cli`]: the batch driver behind the `valdist` binary.
//!
//! The guide in `book/` walks through each layer; its code listings are
//! compiled as doctests of this crate.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod criteria;
pub mod error;
pub mod expr;
pub mod jet;
pub mod locate;
pub mod monomial;
pub mod nevanlinna;
mod quad;
pub mod sphere;

pub use error::{Error, Result};
pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    struct Intro;
    #[doc = include_str!("../../../book/src/expressions.md")]
    struct Expressions;
    #[doc = include_str!("../../../book/src/jets.md")]
    struct Jets;
    #[doc = include_str!("../../../book/src/spherical.md")]
    struct Spherical;
    #[doc = include_str!("../../../book/src/monomials.md")]
    struct Monomials;
    #[doc = include_str!("../../../book/src/locating.md")]
    struct Locating;
    #[doc = include_str!("../../../book/src/nevanlinna.md")]
    struct Nevanlinna;
    #[doc = include_str!("../../../book/src/audits.md")]
    struct Audits;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
