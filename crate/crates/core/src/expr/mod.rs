//! Symbolic scalar expressions over named chart variables.
//!
//! Constants are exact rationals. The polynomial fragment (sums, products,
//! non-negative integer powers, division by nonzero constants) has a canonical
//! normal form in [`poly`]; everything else is evaluated in floating point.

mod eval;
mod parse;
pub mod poly;

use std::collections::BTreeSet;
use std::fmt;
use std::ops;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use eval::{eval_at, Compiled, CompiledVec, EvalError, Point, Value};
pub use parse::{parse_expr, ParseError};
pub use poly::{poly_normalize, Monomial, NotPolynomial, Poly, PolyForm};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Build a rational from a numerator and denominator.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Build an integer-valued rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Convert a rational to the nearest double.
pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact rational value of a finite double.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Rational),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Rational),
    Apply(Func, Box<Expr>),
}

/// Condition that must hold for an expression to be defined at a point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SingularCondition {
    /// The expression must not vanish (denominators, negative powers).
    NonZero(Expr),
    /// The expression must be non-negative (even-root powers).
    NonNegative(Expr),
    /// The expression must be strictly positive (negative even-root powers).
    Positive(Expr),
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(Rational::zero())
    }

    pub fn one() -> Expr {
        Expr::Const(Rational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(int(n))
    }

    pub fn rat(p: i64, q: i64) -> Expr {
        Expr::Const(rat(p, q))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn constant(&self) -> Option<&Rational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_one_const(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            (a, b) if a.is_zero_const() => b,
            (a, b) if b.is_zero_const() => a,
            (a, Expr::Neg(b)) => Expr::Sub(Box::new(a), b),
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
            (a, b) if b.is_zero_const() => a,
            (a, b) if a.is_zero_const() => Expr::neg(b),
            (a, Expr::Neg(b)) => Expr::Add(Box::new(a), b),
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            (a, b) if a.is_zero_const() || b.is_zero_const() => Expr::zero(),
            (a, b) if a.is_one_const() => b,
            (a, b) if b.is_one_const() => a,
            (Expr::Const(c), b) if c == -Rational::one() => Expr::neg(b),
            (a, Expr::Const(c)) if c == -Rational::one() => Expr::neg(a),
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) if !y.is_zero() => Expr::Const(x / y),
            (a, b) if b.is_one_const() => a,
            (a, b) if a.is_zero_const() && b.constant().is_some_and(|c| !c.is_zero()) => {
                Expr::zero()
            }
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, q: Rational) -> Expr {
        if q.is_zero() {
            return Expr::one();
        }
        if q.is_one() {
            return a;
        }
        if let Expr::Const(c) = &a {
            if q.is_integer() {
                if let Some(k) = q.to_integer().to_i32() {
                    if k >= 0 {
                        return Expr::Const(num_traits::pow::Pow::pow(c.clone(), k as u32));
                    } else if !c.is_zero() {
                        let p = num_traits::pow::Pow::pow(c.clone(), (-k) as u32);
                        return Expr::Const(p.recip());
                    }
                }
            }
        }
        Expr::Pow(Box::new(a), q)
    }

    pub fn powi(a: Expr, k: i64) -> Expr {
        Expr::pow(a, int(k))
    }

    pub fn apply(f: Func, a: Expr) -> Expr {
        if let Expr::Const(c) = &a {
            if c.is_zero() {
                return match f {
                    Func::Sin => Expr::zero(),
                    Func::Cos | Func::Exp => Expr::one(),
                };
            }
        }
        Expr::Apply(f, Box::new(a))
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::apply(Func::Sin, a)
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::apply(Func::Cos, a)
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::apply(Func::Exp, a)
    }

    /// Variables occurring in the expression.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Apply(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => v == var,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Apply(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    /// True when evaluation at a rational point stays in the rationals.
    pub fn is_rational_closed(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => true,
            Expr::Neg(a) => a.is_rational_closed(),
            Expr::Pow(a, q) => q.is_integer() && a.is_rational_closed(),
            Expr::Apply(..) => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_rational_closed() && b.is_rational_closed()
            }
        }
    }

    /// Symbolic partial derivative with respect to `var`.
    pub fn differentiate(&self, var: &str) -> Expr {
        self.diff_raw(var).simplify()
    }

    fn diff_raw(&self, var: &str) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(v) => {
                if v == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            _ if !self.depends_on(var) => Expr::zero(),
            Expr::Neg(a) => Expr::neg(a.diff_raw(var)),
            Expr::Add(a, b) => Expr::add(a.diff_raw(var), b.diff_raw(var)),
            Expr::Sub(a, b) => Expr::sub(a.diff_raw(var), b.diff_raw(var)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff_raw(var), (**b).clone()),
                Expr::mul((**a).clone(), b.diff_raw(var)),
            ),
            Expr::Div(a, b) => {
                let num = Expr::sub(
                    Expr::mul(a.diff_raw(var), (**b).clone()),
                    Expr::mul((**a).clone(), b.diff_raw(var)),
                );
                Expr::div(num, Expr::powi((**b).clone(), 2))
            }
            Expr::Pow(a, q) => Expr::mul(
                Expr::mul(
                    Expr::Const(q.clone()),
                    Expr::pow((**a).clone(), q - Rational::one()),
                ),
                a.diff_raw(var),
            ),
            Expr::Apply(f, a) => {
                let outer = match f {
                    Func::Sin => Expr::cos((**a).clone()),
                    Func::Cos => Expr::neg(Expr::sin((**a).clone())),
                    Func::Exp => Expr::exp((**a).clone()),
                };
                Expr::mul(outer, a.diff_raw(var))
            }
        }
    }

    /// Canonical polynomial form when the expression is polynomial; otherwise unchanged.
    pub fn simplify(&self) -> Expr {
        let vars: Vec<String> = self.free_vars().into_iter().collect();
        match Poly::from_expr(self, &vars) {
            Ok(p) => p.to_expr(&vars),
            Err(_) => self.clone(),
        }
    }

    /// Replace variables by expressions.
    pub fn substitute(&self, map: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => map(v).unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::neg(a.substitute(map)),
            Expr::Add(a, b) => Expr::add(a.substitute(map), b.substitute(map)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(map), b.substitute(map)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(map), b.substitute(map)),
            Expr::Div(a, b) => Expr::div(a.substitute(map), b.substitute(map)),
            Expr::Pow(a, q) => Expr::pow(a.substitute(map), q.clone()),
            Expr::Apply(f, a) => Expr::apply(*f, a.substitute(map)),
        }
    }

    /// Conditions under which the expression (and hence all its derivatives) is defined.
    pub fn singular_locus(&self) -> Vec<SingularCondition> {
        let mut out = Vec::new();
        self.collect_singular(&mut out);
        out
    }

    fn collect_singular(&self, out: &mut Vec<SingularCondition>) {
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Neg(a) | Expr::Apply(_, a) => a.collect_singular(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.collect_singular(out);
                b.collect_singular(out);
            }
            Expr::Div(a, b) => {
                a.collect_singular(out);
                b.collect_singular(out);
                out.push(SingularCondition::NonZero((**b).clone()));
            }
            Expr::Pow(a, q) => {
                a.collect_singular(out);
                let even_root = !q.is_integer() && q.denom() % BigInt::from(2) == BigInt::zero();
                let negative = q.is_negative();
                let cond = match (even_root, negative) {
                    (true, true) => Some(SingularCondition::Positive((**a).clone())),
                    (true, false) => Some(SingularCondition::NonNegative((**a).clone())),
                    (false, true) => Some(SingularCondition::NonZero((**a).clone())),
                    (false, false) => None,
                };
                out.extend(cond);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if c.is_negative() => 3,
            Expr::Const(c) if !c.is_integer() => 2,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::Var(_) | Expr::Apply(..) => 5,
        }
    }

    fn ends_with_pow(&self) -> bool {
        match self {
            Expr::Pow(..) => true,
            Expr::Mul(_, b) | Expr::Div(_, b) => b.ends_with_pow(),
            _ => false,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) => write_rational(f, c),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 4)
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)
            }
            Expr::Div(a, b) => {
                if a.ends_with_pow() {
                    write!(f, "(")?;
                    a.fmt_prec(f, 0)?;
                    write!(f, ")")?;
                } else {
                    a.fmt_prec(f, 2)?;
                }
                write!(f, "/")?;
                b.fmt_prec(f, 4)
            }
            Expr::Pow(a, q) => {
                a.fmt_prec(f, 5)?;
                if q.is_integer() && !q.is_negative() {
                    write!(f, "^{}", q.numer())
                } else {
                    write!(f, "^(")?;
                    write_rational(f, q)?;
                    write!(f, ")")
                }
            }
            Expr::Apply(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, c: &Rational) -> fmt::Result {
    if c.is_integer() {
        write!(f, "{}", c.numer())
    } else {
        write!(f, "{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl From<Rational> for Expr {
    fn from(c: Rational) -> Self {
        Expr::Const(c)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::div(self, rhs)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

/// Symbolic partial derivative; free-function form of [`Expr::differentiate`].
pub fn differentiate(e: &Expr, var: &str) -> Expr {
    e.differentiate(var)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    #[test]
    fn power_rule() {
        let e = parse_expr("x^3", &xy()).unwrap();
        assert_eq!(e.differentiate("x").to_string(), "3*x^2");
    }

    #[test]
    fn jacobian_row_of_cubic_target() {
        let e = parse_expr("x^3 - y", &xy()).unwrap();
        assert_eq!(e.differentiate("x").to_string(), "3*x^2");
        assert_eq!(e.differentiate("y").to_string(), "-1");
    }

    #[test]
    fn product_rule_at_zero() {
        let e = parse_expr("sin(x)*x", &xy()).unwrap();
        let d = e.differentiate("x");
        let v = eval_at(&d, &xy(), &Point::Float(vec![0.0, 0.0])).unwrap();
        assert_eq!(v.to_f64(), 0.0);
    }

    #[test]
    fn rational_power_derivative_records_locus() {
        let e = parse_expr("x^(1/3)", &xy()).unwrap();
        let d = e.differentiate("x");
        assert!(d
            .singular_locus()
            .iter()
            .any(|c| matches!(c, SingularCondition::NonZero(_))));
    }

    #[test]
    fn division_printing_keeps_exponent_intact() {
        let e = Expr::div(Expr::powi(Expr::var("x"), 2), Expr::int(3));
        let printed = e.to_string();
        let back = parse_expr(&printed, &xy()).unwrap();
        let p1 = Poly::from_expr(&e, &xy()).unwrap();
        let p2 = Poly::from_expr(&back, &xy()).unwrap();
        assert_eq!(p1, p2, "{printed}");
    }
}
