use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

use super::{to_f64, Expr, Func, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("point has dimension {got}, chart has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expression is singular at the point: {detail}")]
    Singular { detail: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

/// Evaluation point: exact rational or floating coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Point {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

impl Point {
    pub fn len(&self) -> usize {
        match self {
            Point::Exact(v) => v.len(),
            Point::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Point::Exact(v) => v.iter().map(to_f64).collect(),
            Point::Float(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => to_f64(q),
            Value::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Float(_) => None,
        }
    }
}

/// Evaluate `e` at `point`, whose coordinates are ordered like `vars`.
///
/// Exact when the point is rational and `e` stays in the rational fragment.
pub fn eval_at(e: &Expr, vars: &[String], point: &Point) -> Result<Value, EvalError> {
    if point.len() != vars.len() {
        return Err(EvalError::DimensionMismatch {
            expected: vars.len(),
            got: point.len(),
        });
    }
    match point {
        Point::Exact(x) if e.is_rational_closed() => exact(e, vars, x).map(Value::Exact),
        _ => {
            let x = point.to_f64();
            float(e, vars, &x).map(Value::Float)
        }
    }
}

fn lookup(vars: &[String], v: &str) -> Result<usize, EvalError> {
    vars.iter()
        .position(|w| w == v)
        .ok_or_else(|| EvalError::UnknownVariable(v.to_string()))
}

fn exact(e: &Expr, vars: &[String], x: &[Rational]) -> Result<Rational, EvalError> {
    Ok(match e {
        Expr::Const(c) => c.clone(),
        Expr::Var(v) => x[lookup(vars, v)?].clone(),
        Expr::Neg(a) => -exact(a, vars, x)?,
        Expr::Add(a, b) => exact(a, vars, x)? + exact(b, vars, x)?,
        Expr::Sub(a, b) => exact(a, vars, x)? - exact(b, vars, x)?,
        Expr::Mul(a, b) => exact(a, vars, x)? * exact(b, vars, x)?,
        Expr::Div(a, b) => {
            let d = exact(b, vars, x)?;
            if d.is_zero() {
                return Err(EvalError::Singular {
                    detail: format!("denominator {b} vanishes"),
                });
            }
            exact(a, vars, x)? / d
        }
        Expr::Pow(a, q) => {
            let base = exact(a, vars, x)?;
            let k = q.to_integer().to_i32().ok_or_else(|| EvalError::Singular {
                detail: "exponent out of range".into(),
            })?;
            if k >= 0 {
                num_traits::pow::Pow::pow(base, k as u32)
            } else if base.is_zero() {
                return Err(EvalError::Singular {
                    detail: format!("negative power of vanishing {a}"),
                });
            } else {
                num_traits::pow::Pow::pow(base, (-k) as u32).recip()
            }
        }
        Expr::Apply(..) => unreachable!("transcendental functions are routed to float evaluation"),
    })
}

fn real_pow(base: f64, q: &Rational) -> Result<f64, String> {
    if q.is_integer() {
        let k = q.to_integer().to_i32().ok_or("exponent out of range")?;
        if k < 0 && base == 0.0 {
            return Err("negative power of zero".into());
        }
        return Ok(base.powi(k));
    }
    let p = to_f64(q);
    let odd_root = (q.denom() % BigInt::from(2)) != BigInt::zero();
    if base < 0.0 {
        if !odd_root {
            return Err("even root of a negative number".into());
        }
        let mag = (-base).powf(p);
        let odd_num = (q.numer().abs() % BigInt::from(2)) != BigInt::zero();
        return Ok(if odd_num { -mag } else { mag });
    }
    if base == 0.0 && q.is_negative() {
        return Err("negative power of zero".into());
    }
    Ok(base.powf(p))
}

fn float(e: &Expr, vars: &[String], x: &[f64]) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Const(c) => to_f64(c),
        Expr::Var(v) => x[lookup(vars, v)?],
        Expr::Neg(a) => -float(a, vars, x)?,
        Expr::Add(a, b) => float(a, vars, x)? + float(b, vars, x)?,
        Expr::Sub(a, b) => float(a, vars, x)? - float(b, vars, x)?,
        Expr::Mul(a, b) => float(a, vars, x)? * float(b, vars, x)?,
        Expr::Div(a, b) => {
            let d = float(b, vars, x)?;
            if d == 0.0 {
                return Err(EvalError::Singular {
                    detail: format!("denominator {b} vanishes"),
                });
            }
            float(a, vars, x)? / d
        }
        Expr::Pow(a, q) => {
            real_pow(float(a, vars, x)?, q).map_err(|detail| EvalError::Singular { detail })?
        }
        Expr::Apply(f, a) => {
            let v = float(a, vars, x)?;
            match f {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Exp => v.exp(),
            }
        }
    })
}

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Powi(i32),
    RootPow { p: f64, odd_root: bool, odd_num: bool },
    Sin,
    Cos,
    Exp,
}

/// Stack-machine form of an expression for repeated floating evaluation.
///
/// Singular points evaluate to non-finite values instead of erroring.
#[derive(Clone, Debug)]
pub struct Compiled {
    ops: Vec<Op>,
    depth: usize,
}

impl Compiled {
    pub fn new(e: &Expr, vars: &[String]) -> Result<Self, EvalError> {
        let mut ops = Vec::new();
        emit(e, vars, &mut ops)?;
        let mut d: usize = 0;
        let mut depth = 0;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) => d += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div => d -= 1,
                _ => {}
            }
            depth = depth.max(d);
        }
        Ok(Compiled { ops, depth })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.depth <= 32 {
            let mut st = [0.0f64; 32];
            run(&self.ops, x, &mut st)
        } else {
            let mut st = vec![0.0f64; self.depth];
            run(&self.ops, x, &mut st)
        }
    }
}

fn run(ops: &[Op], x: &[f64], st: &mut [f64]) -> f64 {
    let mut sp = 0usize;
    for op in ops {
        match op {
            Op::Const(c) => {
                st[sp] = *c;
                sp += 1;
            }
            Op::Var(i) => {
                st[sp] = x[*i];
                sp += 1;
            }
            Op::Neg => st[sp - 1] = -st[sp - 1],
            Op::Add => {
                sp -= 1;
                st[sp - 1] += st[sp];
            }
            Op::Sub => {
                sp -= 1;
                st[sp - 1] -= st[sp];
            }
            Op::Mul => {
                sp -= 1;
                st[sp - 1] *= st[sp];
            }
            Op::Div => {
                sp -= 1;
                st[sp - 1] /= st[sp];
            }
            Op::Powi(k) => st[sp - 1] = st[sp - 1].powi(*k),
            Op::RootPow { p, odd_root, odd_num } => {
                let b = st[sp - 1];
                st[sp - 1] = if b < 0.0 {
                    if *odd_root {
                        let m = (-b).powf(*p);
                        if *odd_num {
                            -m
                        } else {
                            m
                        }
                    } else {
                        f64::NAN
                    }
                } else {
                    b.powf(*p)
                };
            }
            Op::Sin => st[sp - 1] = st[sp - 1].sin(),
            Op::Cos => st[sp - 1] = st[sp - 1].cos(),
            Op::Exp => st[sp - 1] = st[sp - 1].exp(),
        }
    }
    st[0]
}

fn emit(e: &Expr, vars: &[String], ops: &mut Vec<Op>) -> Result<(), EvalError> {
    match e {
        Expr::Const(c) => ops.push(Op::Const(to_f64(c))),
        Expr::Var(v) => ops.push(Op::Var(lookup(vars, v)?)),
        Expr::Neg(a) => {
            emit(a, vars, ops)?;
            ops.push(Op::Neg);
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            emit(a, vars, ops)?;
            emit(b, vars, ops)?;
            ops.push(match e {
                Expr::Add(..) => Op::Add,
                Expr::Sub(..) => Op::Sub,
                Expr::Mul(..) => Op::Mul,
                _ => Op::Div,
            });
        }
        Expr::Pow(a, q) => {
            emit(a, vars, ops)?;
            if q.is_integer() {
                let k = q.to_integer().to_i32().ok_or_else(|| EvalError::Singular {
                    detail: "exponent out of range".into(),
                })?;
                ops.push(Op::Powi(k));
            } else {
                ops.push(Op::RootPow {
                    p: to_f64(q),
                    odd_root: (q.denom() % BigInt::from(2)) != BigInt::zero(),
                    odd_num: (q.numer().abs() % BigInt::from(2)) != BigInt::zero(),
                });
            }
        }
        Expr::Apply(f, a) => {
            emit(a, vars, ops)?;
            ops.push(match f {
                Func::Sin => Op::Sin,
                Func::Cos => Op::Cos,
                Func::Exp => Op::Exp,
            });
        }
    }
    Ok(())
}

/// A list of compiled expressions sharing one variable order.
#[derive(Clone, Debug)]
pub struct CompiledVec {
    items: Vec<Compiled>,
}

impl CompiledVec {
    pub fn new(es: &[Expr], vars: &[String]) -> Result<Self, EvalError> {
        Ok(CompiledVec {
            items: es.iter().map(|e| Compiled::new(e, vars)).collect::<Result<_, _>>()?,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.items) {
            *o = c.eval(x);
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.items.iter().map(|c| c.eval(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{int, parse_expr, rat};

    fn v(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn exact_values() {
        let vars = v(&["x", "y"]);
        let e = parse_expr("x^2 + y", &vars).unwrap();
        let got = eval_at(&e, &vars, &Point::Exact(vec![int(1), int(2)])).unwrap();
        assert_eq!(got, Value::Exact(int(3)));
        let e = parse_expr("6*x", &vars).unwrap();
        let got = eval_at(&e, &vars, &Point::Exact(vec![int(0), int(0)])).unwrap();
        assert_eq!(got, Value::Exact(int(0)));
        let vx = v(&["x"]);
        let e = parse_expr("x^3", &vx).unwrap();
        assert_eq!(
            eval_at(&e, &vx, &Point::Exact(vec![rat(1, 2)])).unwrap(),
            Value::Exact(rat(1, 8))
        );
    }

    #[test]
    fn errors() {
        let vars = v(&["x"]);
        let e = parse_expr("1/x", &vars).unwrap();
        assert!(matches!(
            eval_at(&e, &vars, &Point::Exact(vec![int(0)])),
            Err(EvalError::Singular { .. })
        ));
        assert!(matches!(
            eval_at(&e, &vars, &Point::Float(vec![1.0, 2.0])),
            Err(EvalError::DimensionMismatch { expected: 1, got: 2 })
        ));
        let e = parse_expr("x^(1/2)", &vars).unwrap();
        assert!(eval_at(&e, &vars, &Point::Float(vec![-1.0])).is_err());
    }

    #[test]
    fn cube_root_of_negative() {
        let vars = v(&["x"]);
        let e = parse_expr("x^(1/3)", &vars).unwrap();
        let got = eval_at(&e, &vars, &Point::Float(vec![-8.0])).unwrap().to_f64();
        assert!((got + 2.0).abs() < 1e-12);
        let c = Compiled::new(&e, &vars).unwrap();
        assert!((c.eval(&[-8.0]) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn compiled_matches_tree() {
        let vars = v(&["x", "y"]);
        let e = parse_expr("sin(x)*exp(y) - x^2/(1 + y^2) + cos(x*y)", &vars).unwrap();
        let c = Compiled::new(&e, &vars).unwrap();
        let p = [0.3, -1.2];
        let tree = eval_at(&e, &vars, &Point::Float(p.to_vec())).unwrap().to_f64();
        assert!((c.eval(&p) - tree).abs() < 1e-14);
    }
}
