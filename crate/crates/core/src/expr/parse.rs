use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use super::{Expr, Func, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
}

/// Parse `source` against the given chart variables.
///
/// A leading unary minus on a factor is accepted in addition to the binary grammar,
/// so that canonical forms such as `-x^2 + y` read back.
pub fn parse_expr(source: &str, chart_vars: &[String]) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
        vars: chart_vars,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::div(lhs, self.factor()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::neg(self.factor()?));
        }
        let base = self.base()?;
        if self.eat(b'^') {
            let q = self.exponent()?;
            return Ok(Expr::pow(base, q));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Rational, ParseError> {
        let paren = self.eat(b'(');
        let negative = self.eat(b'-');
        self.skip_ws();
        let q = self.number(paren)?;
        if paren {
            self.expect(b')')?;
        }
        Ok(if negative { -q } else { q })
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::Const(self.number(false)?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(_) => Err(self.err("expected a number, identifier or `(`")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        if self.vars.iter().any(|v| v == name) {
            return Ok(Expr::Var(name.to_string()));
        }
        if let Some(f) = Func::from_name(name) {
            if self.peek() == Some(b'(') {
                self.pos += 1;
                let arg = self.expr()?;
                self.expect(b')')?;
                return Ok(Expr::Apply(f, Box::new(arg)));
            }
        }
        Err(ParseError::UnknownIdentifier {
            name: name.to_string(),
            pos: start,
        })
    }

    fn digits(&mut self) -> &'a [u8] {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    /// Numeric literal; `p/q` is read as one rational only when `ratio` is set.
    fn number(&mut self, ratio: bool) -> Result<Rational, ParseError> {
        let start = self.pos;
        let int_part = self.digits();
        let next_is_digit = |p: &Self, k: usize| p.src.get(p.pos + k).is_some_and(|c| c.is_ascii_digit());
        if ratio && !int_part.is_empty() && self.src.get(self.pos) == Some(&b'/') && next_is_digit(self, 1) {
            self.pos += 1;
            let den = self.digits();
            let n = big(int_part);
            let d = big(den);
            if d.is_zero() {
                return Err(ParseError::Syntax {
                    pos: start,
                    msg: "zero denominator".into(),
                });
            }
            return Ok(Rational::new(n, d));
        }
        let mut frac: &[u8] = &[];
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac = self.digits();
        }
        if int_part.is_empty() && frac.is_empty() {
            self.pos = start;
            return Err(self.err("expected a number"));
        }
        let mut mantissa = int_part.to_vec();
        mantissa.extend_from_slice(frac);
        let mut value = Rational::new(big(&mantissa), BigInt::from(10).pow(frac.len() as u32));
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            let neg = match self.src.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let ex = self.digits();
            if ex.is_empty() {
                self.pos = save;
            } else {
                let k: u32 = std::str::from_utf8(ex)
                    .ok()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| self.err("exponent too large"))?;
                let scale = Rational::from_integer(BigInt::from(10).pow(k));
                value = if neg { value / scale } else { value * scale };
            }
        }
        Ok(value)
    }
}

fn big(digits: &[u8]) -> BigInt {
    if digits.is_empty() {
        return BigInt::zero();
    }
    BigInt::parse_bytes(digits, 10).unwrap_or_else(BigInt::one)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{rat, Poly};

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_monomial() {
        let v = vars(&["x", "y"]);
        let e = parse_expr("3*x^2", &v).unwrap();
        let p = Poly::from_expr(&e, &v).unwrap();
        assert_eq!(p.terms().count(), 1);
    }

    #[test]
    fn contact_target_component() {
        let v = vars(&["x", "y", "z"]);
        let e = parse_expr("z - x*y", &v).unwrap();
        assert_eq!(e.to_string(), "z - x*y");
    }

    #[test]
    fn rationals_and_decimals() {
        let v = vars(&["x"]);
        assert_eq!(parse_expr("1/2", &v).unwrap(), Expr::Const(rat(1, 2)));
        assert_eq!(parse_expr("0.25", &v).unwrap(), Expr::Const(rat(1, 4)));
        assert_eq!(parse_expr("1e-3", &v).unwrap(), Expr::Const(rat(1, 1000)));
        let e = parse_expr("x^(1/3)", &v).unwrap();
        assert_eq!(e, Expr::Pow(Box::new(Expr::var("x")), rat(1, 3)));
        assert_eq!(parse_expr("3/2^2", &v).unwrap(), Expr::Const(rat(3, 4)));
    }

    #[test]
    fn power_binds_tighter_than_division() {
        let v = vars(&["x", "y"]);
        for (src, want) in [("x^2/2", "(1/2)*x^2"), ("y^2/4", "(1/4)*y^2"), ("x^1/3", "(1/3)*x")] {
            let got = Poly::from_expr(&parse_expr(src, &v).unwrap(), &v).unwrap();
            let want = Poly::from_expr(&parse_expr(want, &v).unwrap(), &v).unwrap();
            assert_eq!(got, want, "{src}");
        }
        assert_eq!(
            parse_expr("x^-1", &v).unwrap(),
            Expr::Pow(Box::new(Expr::var("x")), rat(-1, 1))
        );
    }

    #[test]
    fn errors_carry_positions() {
        let v = vars(&["x"]);
        match parse_expr("x + w", &v) {
            Err(ParseError::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "w");
                assert_eq!(pos, 4);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expr("x +", &v), Err(ParseError::Syntax { pos: 3, .. })));
        assert!(matches!(parse_expr("(x", &v), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse_expr("x)", &v), Err(ParseError::Syntax { pos: 1, .. })));
    }
}
