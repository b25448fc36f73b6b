//! Canonical multivariate polynomials with exact rational coefficients.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::{to_f64, Expr, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not a polynomial: {reason}")]
pub struct NotPolynomial {
    pub reason: String,
}

impl NotPolynomial {
    fn new(reason: impl Into<String>) -> Self {
        NotPolynomial {
            reason: reason.into(),
        }
    }
}

/// Exponent vector, ordered by total degree and then lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }

    pub fn eval_exact(&self, x: &[Rational]) -> Rational {
        let mut acc = Rational::one();
        for (&e, v) in self.0.iter().zip(x) {
            if e > 0 {
                acc *= num_traits::pow::Pow::pow(v.clone(), e);
            }
        }
        acc
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials in `nvars` variables of total degree at most `deg`, ascending.
pub fn monomials_up_to(nvars: usize, deg: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for d in 0..=deg {
        let mut cur = vec![0u32; nvars];
        push_of_degree(nvars, d, 0, &mut cur, &mut out);
    }
    out.sort();
    out
}

fn push_of_degree(nvars: usize, left: u32, idx: usize, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
    if nvars == 0 {
        if left == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    if idx == nvars - 1 {
        cur[idx] = left;
        out.push(Monomial(cur.clone()));
        cur[idx] = 0;
        return;
    }
    for e in 0..=left {
        cur[idx] = e;
        push_of_degree(nvars, left - e, idx + 1, cur, out);
    }
    cur[idx] = 0;
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(nvars), c);
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, Rational::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        Poly::monomial(nvars, Monomial::var(nvars, i), Rational::one())
    }

    pub fn monomial(nvars: usize, m: Monomial, c: Rational) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                (m.degree() == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Rational::one())
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.mul(m), v.clone())).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one(self.nvars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn derivative(&self, var: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.0[var] -= 1;
            out.add_term(m2, c * Rational::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Substitute polynomials (over a possibly different ring) for each variable.
    pub fn compose(&self, args: &[Poly]) -> Poly {
        assert_eq!(args.len(), self.nvars, "compose: arity mismatch");
        let n = args.first().map(|p| p.nvars).unwrap_or(0);
        let mut out = Poly::zero(n);
        let mut powers: Vec<Vec<Poly>> = args.iter().map(|a| vec![Poly::one(n), a.clone()]).collect();
        for (m, c) in &self.terms {
            let mut t = Poly::constant(n, c.clone());
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while powers[i].len() <= e as usize {
                    let next = powers[i].last().unwrap().mul(&args[i]);
                    powers[i].push(next);
                }
                t = t.mul(&powers[i][e as usize]);
            }
            out = out.add(&t);
        }
        out
    }

    pub fn eval_exact(&self, x: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            acc += c * m.eval_exact(x);
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| to_f64(c) * m.eval_f64(x))
            .sum()
    }

    /// Exact quotient by `d` when `d` divides `self`.
    pub fn exact_div(&self, d: &Poly) -> Option<Poly> {
        let (lead_m, lead_c) = d.terms.iter().next_back()?;
        let mut rem = self.clone();
        let mut quot = Poly::zero(self.nvars);
        while let Some((m, c)) = rem.terms.iter().next_back().map(|(m, c)| (m.clone(), c.clone())) {
            if !m.0.iter().zip(&lead_m.0).all(|(a, b)| a >= b) {
                return None;
            }
            let qm = Monomial(m.0.iter().zip(&lead_m.0).map(|(a, b)| a - b).collect());
            let qc = &c / lead_c;
            let t = Poly::monomial(self.nvars, qm, qc);
            rem = rem.sub(&t.mul(d));
            quot = quot.add(&t);
        }
        Some(quot)
    }

    pub fn to_expr(&self, vars: &[String]) -> Expr {
        let mut acc: Option<Expr> = None;
        for (m, c) in self.terms.iter().rev() {
            let mut factors: Vec<Expr> = Vec::new();
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let v = Expr::Var(vars[i].clone());
                factors.push(if e == 1 {
                    v
                } else {
                    Expr::Pow(Box::new(v), Rational::from_integer(BigInt::from(e)))
                });
            }
            let leading = acc.is_none();
            let mag = c.abs();
            let negate_here = leading && c.is_negative();
            if factors.is_empty() {
                factors.push(Expr::Const(if negate_here { -mag.clone() } else { mag.clone() }));
            } else if !mag.is_one() {
                factors.insert(0, Expr::Const(if negate_here { -mag.clone() } else { mag.clone() }));
            } else if negate_here {
                let first = factors.remove(0);
                factors.insert(0, Expr::Neg(Box::new(first)));
            }
            let body = factors
                .into_iter()
                .reduce(|a, b| Expr::Mul(Box::new(a), Box::new(b)))
                .unwrap_or_else(Expr::zero);
            acc = Some(match acc {
                None => body,
                Some(prev) if c.is_negative() => Expr::Sub(Box::new(prev), Box::new(body)),
                Some(prev) => Expr::Add(Box::new(prev), Box::new(body)),
            });
        }
        acc.unwrap_or_else(Expr::zero)
    }

    /// Convert an expression over `vars` into canonical form.
    pub fn from_expr(e: &Expr, vars: &[String]) -> Result<Poly, NotPolynomial> {
        let n = vars.len();
        match e {
            Expr::Const(c) => Ok(Poly::constant(n, c.clone())),
            Expr::Var(v) => vars
                .iter()
                .position(|w| w == v)
                .map(|i| Poly::var(n, i))
                .ok_or_else(|| NotPolynomial::new(format!("variable `{v}` not in ring"))),
            Expr::Neg(a) => Ok(Poly::from_expr(a, vars)?.neg()),
            Expr::Add(a, b) => Ok(Poly::from_expr(a, vars)?.add(&Poly::from_expr(b, vars)?)),
            Expr::Sub(a, b) => Ok(Poly::from_expr(a, vars)?.sub(&Poly::from_expr(b, vars)?)),
            Expr::Mul(a, b) => Ok(Poly::from_expr(a, vars)?.mul(&Poly::from_expr(b, vars)?)),
            Expr::Div(a, b) => {
                let den = Poly::from_expr(b, vars)?;
                match den.as_constant() {
                    Some(c) if !c.is_zero() => Ok(Poly::from_expr(a, vars)?.scale(&c.recip())),
                    _ => Err(NotPolynomial::new("division by a non-constant")),
                }
            }
            Expr::Pow(a, q) => {
                if !q.is_integer() || q.is_negative() {
                    return Err(NotPolynomial::new(format!("power {q} is not a non-negative integer")));
                }
                let k = q
                    .to_integer()
                    .to_u32()
                    .ok_or_else(|| NotPolynomial::new("exponent too large"))?;
                Ok(Poly::from_expr(a, vars)?.pow(k))
            }
            Expr::Apply(f, _) => Err(NotPolynomial::new(format!("transcendental function {}", f.name()))),
        }
    }

    pub fn display<'a>(&'a self, vars: &'a [String]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Poly, &'a [String]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0.to_expr(self.1))
            }
        }
        D(self, vars)
    }
}

/// A polynomial together with the variable order it is expressed in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyForm {
    pub vars: Vec<String>,
    pub poly: Poly,
}

impl PolyForm {
    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn to_expr(&self) -> Expr {
        self.poly.to_expr(&self.vars)
    }
}

impl fmt::Display for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Canonical form over the sorted free variables of `e`.
pub fn poly_normalize(e: &Expr) -> Result<PolyForm, NotPolynomial> {
    let vars: Vec<String> = e.free_vars().into_iter().collect();
    let poly = Poly::from_expr(e, &vars)?;
    // Variables that cancel out are dropped so that equal polynomials print equally.
    let used: Vec<usize> = (0..vars.len()).filter(|&i| poly.degree_in(i) > 0).collect();
    if used.len() == vars.len() {
        return Ok(PolyForm { vars, poly });
    }
    let kept: Vec<String> = used.iter().map(|&i| vars[i].clone()).collect();
    let mut out = Poly::zero(kept.len());
    for (m, c) in poly.terms() {
        let m2 = Monomial(used.iter().map(|&i| m.0[i]).collect());
        out.add_term(m2, c.clone());
    }
    Ok(PolyForm { vars: kept, poly: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, rat};

    fn v(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn commutative_difference_vanishes() {
        let e = parse_expr("x*y - y*x", &v(&["x", "y"])).unwrap();
        assert!(poly_normalize(&e).unwrap().is_zero());
    }

    #[test]
    fn binomial_square_vanishes() {
        let e = parse_expr("(x+y)^2 - x^2 - 2*x*y - y^2", &v(&["x", "y"])).unwrap();
        assert!(poly_normalize(&e).unwrap().is_zero());
    }

    #[test]
    fn transcendental_is_rejected() {
        let e = parse_expr("sin(x)", &v(&["x"])).unwrap();
        assert!(poly_normalize(&e).is_err());
        let e = parse_expr("x^(1/2)", &v(&["x"])).unwrap();
        assert!(poly_normalize(&e).is_err());
        let e = parse_expr("1/x", &v(&["x"])).unwrap();
        assert!(poly_normalize(&e).is_err());
    }

    #[test]
    fn canonical_printing() {
        let e = parse_expr("y - 1/2*y*x + x^3 + 2", &v(&["x", "y"])).unwrap();
        assert_eq!(poly_normalize(&e).unwrap().to_string(), "x^3 - 1/2*x*y + y + 2");
        let e = parse_expr("-x", &v(&["x"])).unwrap();
        assert_eq!(poly_normalize(&e).unwrap().to_string(), "-x");
        let e = parse_expr("0 - 3/4", &v(&["x"])).unwrap();
        assert_eq!(poly_normalize(&e).unwrap().to_string(), "-3/4");
    }

    #[test]
    fn exact_division() {
        let vars = v(&["x", "y"]);
        let a = Poly::from_expr(&parse_expr("x^3 - x*y^2", &vars).unwrap(), &vars).unwrap();
        let d = Poly::from_expr(&parse_expr("x - y", &vars).unwrap(), &vars).unwrap();
        let q = a.exact_div(&d).unwrap();
        assert_eq!(q.mul(&d), a);
        let d2 = Poly::from_expr(&parse_expr("x + 2", &vars).unwrap(), &vars).unwrap();
        assert!(a.exact_div(&d2).is_none());
    }

    #[test]
    fn monomial_enumeration_counts() {
        assert_eq!(monomials_up_to(2, 2).len(), 6);
        assert_eq!(monomials_up_to(3, 8).len(), 165);
        assert_eq!(monomials_up_to(1, 0), vec![Monomial(vec![0])]);
    }

    #[test]
    fn exact_cube_eval() {
        let vars = v(&["x"]);
        let p = Poly::from_expr(&parse_expr("x^3", &vars).unwrap(), &vars).unwrap();
        assert_eq!(p.eval_exact(&[rat(1, 2)]), rat(1, 8));
    }
}
