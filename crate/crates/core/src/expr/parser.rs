//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := ('-' | '+') unary | power
//! power    := primary ('^' exponent)?
//! exponent := ['-' | '+'] INT | '(' ['-' | '+'] INT ')'
//! primary  := NUMBER | NUMBER 'i' | 'i' | 'pi' | 'z' | PARAM
//!           | ('exp' | 'sin' | 'cos') '(' expr ')'
//!           | 'D' '(' expr ',' INT ')'
//!           | 'complex' '(' SIGNED ',' SIGNED ')'
//!           | '(' expr ')'
//! ```
//!
//! Power binds tighter than unary minus, which binds tighter than `*` and
//! `/`; so `-z^2` is `-(z^2)` and `2 * -z` is accepted.

use num_complex::Complex64;

use super::Expr;
use crate::error::{Error, Result};

/// Identifiers with fixed meaning; they cannot be declared as parameters.
pub const RESERVED: &[&str] = &["z", "i", "pi", "exp", "sin", "cos", "D", "complex"];

/// Parses an expression with no parameters.
pub fn parse(source: &str) -> Result<Expr> {
    parse_with_params(source, &[])
}

/// Parses an expression in which the given names are parameters.
pub fn parse_with_params(source: &str, params: &[&str]) -> Result<Expr> {
    if let Some(bad) = params.iter().find(|p| RESERVED.contains(p)) {
        return Err(Error::Syntax { offset: 0, message: format!("`{bad}` is reserved") });
    }
    let tokens = lex(source)?;
    let mut p = Parser { tokens, pos: 0, params, len: source.len() };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(t) => Err(Error::Syntax { offset: t.offset, message: format!("unexpected {}", t.kind) }),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Number(f64),
    Imag(f64),
    Int(i64),
    Ident(String),
    Sym(char),
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kind::Number(x) | Kind::Imag(x) => write!(f, "number {x}"),
            Kind::Int(n) => write!(f, "integer {n}"),
            Kind::Ident(s) => write!(f, "identifier `{s}`"),
            Kind::Sym(c) => write!(f, "`{c}`"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Kind,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || (ch == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            let mut integral = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                integral = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    integral = false;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let imag = i < bytes.len()
                && bytes[i] == b'i'
                && !bytes.get(i + 1).is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_');
            let value: f64 = text
                .parse()
                .map_err(|_| Error::Syntax { offset: start, message: format!("bad number `{text}`") })?;
            if !value.is_finite() {
                return Err(Error::Syntax { offset: start, message: "number out of range".into() });
            }
            let kind = if imag {
                i += 1;
                Kind::Imag(value)
            } else if integral {
                match text.parse::<i64>() {
                    Ok(n) => Kind::Int(n),
                    Err(_) => Kind::Number(value),
                }
            } else {
                Kind::Number(value)
            };
            out.push(Token { kind, offset: start });
        } else if ch.is_ascii_alphabetic() || ch == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token { kind: Kind::Ident(src[start..i].to_string()), offset: start });
        } else if b"+-*/^(),".contains(&ch) {
            out.push(Token { kind: Kind::Sym(ch as char), offset: i });
            i += 1;
        } else {
            let c = src[i..].chars().next().unwrap_or('?');
            return Err(Error::Syntax { offset: i, message: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    params: &'a [&'a str],
    len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.len, |t| t.offset)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Token { kind: Kind::Sym(s), .. }) if *s == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn error(&self, message: String) -> Error {
        let message = match self.peek() {
            Some(t) => format!("{message}, found {}", t.kind),
            None => format!("{message}, found end of input"),
        };
        Error::Syntax { offset: self.offset(), message }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_sym('+') {
                lhs = lhs + self.term()?;
            } else if self.eat_sym('-') {
                lhs = lhs - self.term()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_sym('*') {
                lhs = lhs * self.unary()?;
            } else if self.eat_sym('/') {
                lhs = lhs / self.unary()?;
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_sym('-') {
            Ok(-self.unary()?)
        } else if self.eat_sym('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if self.eat_sym('^') {
            let paren = self.eat_sym('(');
            let n = self.signed_int()?;
            if paren {
                self.expect_sym(')')?;
            }
            let n = i32::try_from(n).map_err(|_| self.error("exponent out of range".into()))?;
            Ok(base.powi(n))
        } else {
            Ok(base)
        }
    }

    fn signed_int(&mut self) -> Result<i64> {
        let neg = if self.eat_sym('-') {
            true
        } else {
            self.eat_sym('+');
            false
        };
        match self.peek().map(|t| t.kind.clone()) {
            Some(Kind::Int(n)) => {
                self.pos += 1;
                Ok(if neg { -n } else { n })
            }
            _ => Err(self.error("expected integer".into())),
        }
    }

    fn signed_real(&mut self) -> Result<f64> {
        let neg = if self.eat_sym('-') {
            true
        } else {
            self.eat_sym('+');
            false
        };
        let x = match self.peek().map(|t| t.kind.clone()) {
            Some(Kind::Int(n)) => n as f64,
            Some(Kind::Number(x)) => x,
            _ => return Err(self.error("expected real number".into())),
        };
        self.pos += 1;
        Ok(if neg { -x } else { x })
    }

    fn primary(&mut self) -> Result<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("expected expression".into()));
        };
        self.pos += 1;
        match tok.kind {
            Kind::Int(n) => Ok(Expr::Const(Complex64::new(n as f64, 0.0))),
            Kind::Number(x) => Ok(Expr::Const(Complex64::new(x, 0.0))),
            Kind::Imag(y) => Ok(Expr::Const(Complex64::new(0.0, y))),
            Kind::Sym('(') => {
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Kind::Sym(_) => {
                self.pos -= 1;
                Err(self.error("expected expression".into()))
            }
            Kind::Ident(name) => match name.as_str() {
                "z" => Ok(Expr::Var),
                "i" => Ok(Expr::Const(Complex64::new(0.0, 1.0))),
                "pi" => Ok(Expr::Const(Complex64::new(std::f64::consts::PI, 0.0))),
                "exp" | "sin" | "cos" => {
                    self.expect_sym('(')?;
                    let a = self.expr()?;
                    self.expect_sym(')')?;
                    Ok(match name.as_str() {
                        "exp" => a.exp(),
                        "sin" => a.sin(),
                        _ => a.cos(),
                    })
                }
                "D" => {
                    self.expect_sym('(')?;
                    let a = self.expr()?;
                    self.expect_sym(',')?;
                    let at = self.offset();
                    let k = self.signed_int()?;
                    if k < 1 || k > u32::MAX as i64 {
                        return Err(Error::Syntax { offset: at, message: "derivative order must be >= 1".into() });
                    }
                    self.expect_sym(')')?;
                    Ok(Expr::Deriv(Box::new(a), k as u32))
                }
                "complex" => {
                    self.expect_sym('(')?;
                    let re = self.signed_real()?;
                    self.expect_sym(',')?;
                    let im = self.signed_real()?;
                    self.expect_sym(')')?;
                    Ok(Expr::Const(Complex64::new(re, im)))
                }
                other if self.params.contains(&other) => Ok(Expr::Param(name)),
                _ => Err(Error::UnknownIdentifier { name, offset: tok.offset }),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Expr {
        Expr::Const(Complex64::new(re, 0.0))
    }

    #[test]
    fn variable_and_call() {
        assert_eq!(parse("z").unwrap(), Expr::Var);
        assert_eq!(parse("exp(2*z)").unwrap(), (c(2.0) * Expr::Var).exp());
    }

    #[test]
    fn parameter_monomial() {
        let e = parse_with_params("m^8 * z^7", &["m"]).unwrap();
        assert_eq!(e, Expr::param("m").powi(8) * Expr::Var.powi(7));
    }

    #[test]
    fn precedence() {
        assert_eq!(parse("-z^2").unwrap(), -(Expr::Var.powi(2)));
        assert_eq!(parse("2*-z").unwrap(), c(2.0) * -Expr::Var);
        assert_eq!(parse("-z*2").unwrap(), (-Expr::Var) * c(2.0));
        assert_eq!(parse("1 - z + 2").unwrap(), (c(1.0) - Expr::Var) + c(2.0));
        assert_eq!(parse("z/2/3").unwrap(), (Expr::Var / c(2.0)) / c(3.0));
        assert_eq!(parse("z^-2").unwrap(), Expr::Var.powi(-2));
        assert_eq!(parse("z^(-2)").unwrap(), Expr::Var.powi(-2));
    }

    #[test]
    fn literals() {
        assert_eq!(parse("3i").unwrap(), Expr::Const(Complex64::new(0.0, 3.0)));
        assert_eq!(parse("i").unwrap(), Expr::Const(Complex64::new(0.0, 1.0)));
        assert_eq!(parse("1.5e-3").unwrap(), c(1.5e-3));
        assert_eq!(parse("complex(-1, 2.5)").unwrap(), Expr::Const(Complex64::new(-1.0, 2.5)));
        assert_eq!(parse("D(sin(z), 2)").unwrap(), Expr::Var.sin().deriv(2));
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(parse("z + w"), Err(Error::UnknownIdentifier { name: "w".into(), offset: 4 }));
        assert!(matches!(parse("z +"), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse("z ^ 1.5"), Err(Error::Syntax { offset: 4, .. })));
        assert!(matches!(parse("D(z, 0)"), Err(Error::Syntax { offset: 5, .. })));
        assert!(matches!(parse("(z"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("z $"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse("z^2^3"), Err(Error::Syntax { offset: 3, .. })));
        assert!(parse_with_params("z", &["exp"]).is_err());
    }

    fn arb_const() -> impl Strategy<Value = Complex64> {
        prop_oneof![
            (0.0f64..100.0).prop_map(|x| Complex64::new(x, 0.0)),
            (0.0f64..100.0).prop_map(|y| Complex64::new(0.0, y)),
            (-50.0f64..50.0, -50.0f64..50.0).prop_map(|(a, b)| Complex64::new(a, b)),
        ]
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::Var),
            Just(Expr::param("n")),
            arb_const().prop_map(Expr::Const),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| -a),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a / b),
                (inner.clone(), -4i32..5).prop_map(|(a, n)| a.powi(n)),
                inner.clone().prop_map(Expr::exp),
                inner.clone().prop_map(Expr::sin),
                inner.clone().prop_map(Expr::cos),
                (inner, 1u32..4).prop_map(|(a, k)| a.deriv(k)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let back = parse_with_params(&printed, &["n"]).unwrap();
            prop_assert_eq!(back, e);
        }
    }
}
