//! Fixed-step RK4 flows of (time-dependent) vector fields, variational equations,
//! and the numerical flow-composition checks.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::charts::{Chart, ChartError, VectorField};
use crate::expr::{Compiled, CompiledVec, EvalError, Expr};

pub const DEFAULT_STEP: f64 = 1e-3;
/// Outer step for the composed side of the flow-sum formula; each outer evaluation
/// runs an inner flow, so the outer grid is kept coarse.
pub const COMPOSE_OUTER_STEP: f64 = 5e-3;
pub const ACCEL_STEP: f64 = 1e-3;
pub const Z0_TOL: f64 = 1e-12;
const MIN_STEP: f64 = 1e-12;
const MAX_STEPS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("trajectory left the chart domain at step {step} (point {point:?})")]
    LeftDomain { step: usize, point: Vec<f64> },
    #[error("step size underflow")]
    StepUnderflow,
    #[error("time-dependent field is not zero at t = 0 (norm {norm:e})")]
    PreconditionZ0 { norm: f64 },
    #[error("coefficient `{0}` depends on a variable other than the time variable")]
    CoefficientNotUnivariate(String),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A (possibly time-dependent) vector field on R^n with a spatial Jacobian.
pub trait Field {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]);
    fn jacobian(&self, t: f64, x: &[f64]) -> DMatrix<f64>;
}

/// Compiled autonomous polynomial-or-elementary field with its Jacobian.
#[derive(Clone, Debug)]
pub struct CompiledField {
    n: usize,
    value: CompiledVec,
    jac: CompiledVec,
}

impl CompiledField {
    pub fn new(x: &VectorField) -> Result<Self, EvalError> {
        let vars = x.chart().vars();
        let n = vars.len();
        let partials: Vec<Expr> = x
            .components()
            .iter()
            .flat_map(|c| vars.iter().map(move |v| c.differentiate(v)))
            .collect();
        Ok(CompiledField {
            n,
            value: x.compile()?,
            jac: CompiledVec::new(&partials, vars)?,
        })
    }
}

impl Field for CompiledField {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, _t: f64, x: &[f64], out: &mut [f64]) {
        self.value.eval_into(x, out);
    }

    fn jacobian(&self, _t: f64, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.jac.eval(x))
    }
}

#[derive(Clone, Debug)]
pub enum Coef {
    Const(f64),
    /// Compiled over the single time variable.
    Time(Compiled),
}

impl Coef {
    fn at(&self, t: f64) -> f64 {
        match self {
            Coef::Const(c) => *c,
            Coef::Time(e) => e.eval(&[t]),
        }
    }
}

/// `Σ cᵢ(t) Xᵢ` over compiled fields.
#[derive(Clone, Debug)]
pub struct Combination {
    n: usize,
    terms: Vec<(Coef, Arc<CompiledField>)>,
}

impl Combination {
    pub fn new(n: usize, terms: Vec<(Coef, Arc<CompiledField>)>) -> Self {
        Combination { n, terms }
    }

    pub fn constant(fields: &[Arc<CompiledField>], coeffs: &[f64]) -> Self {
        let n = fields.first().map(|f| f.n).unwrap_or(0);
        Combination {
            n,
            terms: fields
                .iter()
                .zip(coeffs)
                .filter(|(_, c)| **c != 0.0)
                .map(|(f, c)| (Coef::Const(*c), f.clone()))
                .collect(),
        }
    }

    pub fn single(f: Arc<CompiledField>) -> Self {
        Combination {
            n: f.n,
            terms: vec![(Coef::Const(1.0), f)],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(c, f)| {
                let c = match c {
                    Coef::Const(v) => Coef::Const(v * s),
                    Coef::Time(_) => panic!("scaling time-dependent combinations is not supported"),
                };
                (c, f.clone())
            })
            .collect();
        Combination { n: self.n, terms }
    }

    pub fn plus(&self, other: &Combination) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Combination { n: self.n, terms }
    }
}

impl Field for Combination {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut tmp = vec![0.0; self.n];
        for (c, f) in &self.terms {
            let c = c.at(t);
            if c == 0.0 {
                continue;
            }
            f.eval(t, x, &mut tmp);
            for (o, v) in out.iter_mut().zip(&tmp) {
                *o += c * v;
            }
        }
    }

    fn jacobian(&self, t: f64, x: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.n, self.n);
        for (c, f) in &self.terms {
            let c = c.at(t);
            if c != 0.0 {
                j += f.jacobian(t, x) * c;
            }
        }
        j
    }
}

/// `Σ λᵢ(t)·Xᵢ` with univariate coefficient expressions.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeDependentField {
    chart: Chart,
    time_var: String,
    terms: Vec<(Expr, VectorField)>,
}

impl TimeDependentField {
    pub fn new(chart: &Chart, time_var: &str, terms: Vec<(Expr, VectorField)>) -> Result<Self, FlowError> {
        for (c, x) in &terms {
            if x.chart().vars() != chart.vars() {
                return Err(ChartError::ChartMismatch(chart.name.clone(), x.chart().name.clone()).into());
            }
            if c.free_vars().iter().any(|v| v != time_var) {
                return Err(FlowError::CoefficientNotUnivariate(c.to_string()));
            }
        }
        Ok(TimeDependentField {
            chart: chart.clone(),
            time_var: time_var.to_string(),
            terms,
        })
    }

    pub fn autonomous(x: &VectorField) -> Self {
        TimeDependentField {
            chart: x.chart().clone(),
            time_var: "t".into(),
            terms: vec![(Expr::one(), x.clone())],
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn terms(&self) -> &[(Expr, VectorField)] {
        &self.terms
    }

    pub fn compile(&self) -> Result<Combination, EvalError> {
        let tv = [self.time_var.clone()];
        let terms = self
            .terms
            .iter()
            .map(|(c, x)| {
                let coef = match c.constant() {
                    Some(q) => Coef::Const(crate::expr::to_f64(q)),
                    None => Coef::Time(Compiled::new(c, &tv)?),
                };
                Ok((coef, Arc::new(CompiledField::new(x)?)))
            })
            .collect::<Result<_, EvalError>>()?;
        Ok(Combination::new(self.chart.dim(), terms))
    }

    /// Value at time `t` and point `p`.
    pub fn eval(&self, t: f64, p: &[f64]) -> Result<Vec<f64>, EvalError> {
        let c = self.compile()?;
        let mut out = vec![0.0; p.len()];
        c.eval(t, p, &mut out);
        Ok(out)
    }

    /// `d/dt Z_t(p)` at `t`, from the symbolic time derivatives of the coefficients.
    pub fn time_derivative(&self, t: f64, p: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut out = vec![0.0; p.len()];
        for (c, x) in &self.terms {
            let dc = c.differentiate(&self.time_var);
            let dc = Compiled::new(&dc, std::slice::from_ref(&self.time_var))?.eval(&[t]);
            if dc == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(x.eval_f64(p)?) {
                *o += dc * v;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSpec {
    pub h: f64,
    pub t0: f64,
    pub t1: f64,
}

impl FlowSpec {
    pub fn new(h: f64, t0: f64, t1: f64) -> Result<Self, FlowError> {
        if !(h >= MIN_STEP) || !h.is_finite() || t0 > t1 {
            return Err(FlowError::StepUnderflow);
        }
        Ok(FlowSpec { h, t0, t1 })
    }

    pub fn unit(t1: f64) -> Self {
        FlowSpec {
            h: DEFAULT_STEP,
            t0: 0.0,
            t1,
        }
    }
}

fn step_count(t0: f64, t1: f64, h: f64) -> Result<usize, FlowError> {
    if !(h >= MIN_STEP) || !h.is_finite() {
        return Err(FlowError::StepUnderflow);
    }
    let span = (t1 - t0).abs();
    if span == 0.0 {
        return Ok(0);
    }
    let n = (span / h).ceil();
    if n > MAX_STEPS as f64 {
        return Err(FlowError::StepUnderflow);
    }
    Ok((n as usize).max(1))
}

fn inside(domain: Option<&Chart>, x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite()) && domain.is_none_or(|c| c.contains(x))
}

/// Classical RK4 on a generic right-hand side from `t0` to `t1` (either direction).
fn rk4_generic<F>(
    rhs: F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    h: f64,
    check: &dyn Fn(&[f64]) -> bool,
    mut observe: impl FnMut(f64, &[f64]),
) -> Result<Vec<f64>, FlowError>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let steps = step_count(t0, t1, h)?;
    let mut y = y0.to_vec();
    observe(t0, &y);
    if steps == 0 {
        return Ok(y);
    }
    let dt = (t1 - t0) / steps as f64;
    if t0 + dt == t0 {
        return Err(FlowError::StepUnderflow);
    }
    let d = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut tmp = vec![0.0; d];
    for step in 0..steps {
        let t = t0 + dt * step as f64;
        rhs(t, &y, &mut k1);
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        rhs(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..d {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        rhs(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..d {
            tmp[i] = y[i] + dt * k3[i];
        }
        rhs(t + dt, &tmp, &mut k4);
        for i in 0..d {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !check(&y) {
            return Err(FlowError::LeftDomain {
                step: step + 1,
                point: y,
            });
        }
        observe(t + dt, &y);
    }
    Ok(y)
}

/// `φ_{t1,t0}(p)` by RK4 with step at most `h`.
pub fn flow(field: &dyn Field, p: &[f64], t0: f64, t1: f64, h: f64, domain: Option<&Chart>) -> Result<Vec<f64>, FlowError> {
    rk4_generic(
        |t, x, out| field.eval(t, x, out),
        p,
        t0,
        t1,
        h,
        &|x| inside(domain, x),
        |_, _| {},
    )
}

/// Sampled trajectory `(t, x(t))` at every RK4 node.
pub fn trajectory(
    field: &dyn Field,
    p: &[f64],
    t0: f64,
    t1: f64,
    h: f64,
    domain: Option<&Chart>,
) -> Result<Vec<(f64, Vec<f64>)>, FlowError> {
    let mut out = Vec::new();
    rk4_generic(
        |t, x, o| field.eval(t, x, o),
        p,
        t0,
        t1,
        h,
        &|x| inside(domain, x),
        |t, x| out.push((t, x.to_vec())),
    )?;
    Ok(out)
}

/// Flow together with its spatial derivative `Dφ_{t1,t0}(p)` from the variational equation.
pub fn flow_variational(
    field: &dyn Field,
    p: &[f64],
    t0: f64,
    t1: f64,
    h: f64,
    domain: Option<&Chart>,
) -> Result<(Vec<f64>, DMatrix<f64>), FlowError> {
    let n = field.dim();
    let mut y0 = p.to_vec();
    y0.extend(DMatrix::<f64>::identity(n, n).iter());
    let rhs = |t: f64, y: &[f64], out: &mut [f64]| {
        let (x, jflat) = y.split_at(n);
        field.eval(t, x, &mut out[..n]);
        let a = field.jacobian(t, x);
        let j = DMatrix::from_column_slice(n, n, jflat);
        let dj = a * j;
        out[n..].copy_from_slice(dj.as_slice());
    };
    let y = rk4_generic(rhs, &y0, t0, t1, h, &|y| inside(domain, &y[..n]) && y.iter().all(|v| v.is_finite()), |_, _| {})?;
    let (x, jflat) = y.split_at(n);
    Ok((x.to_vec(), DMatrix::from_column_slice(n, n, jflat)))
}

/// Time-one flow of `V_λ = Σ λᵢ Xᵢ` from `y` with the derivatives in `y` and in `λ`.
pub fn exp_with_jacobians(
    fields: &[Arc<CompiledField>],
    lambda: &[f64],
    y: &[f64],
    h: f64,
    domain: Option<&Chart>,
) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>), FlowError> {
    let n = y.len();
    let m = fields.len();
    let v = Combination::constant(fields, lambda);
    let mut y0 = y.to_vec();
    y0.extend(DMatrix::<f64>::identity(n, n).iter());
    y0.extend(std::iter::repeat_n(0.0, n * m));
    let rhs = |t: f64, s: &[f64], out: &mut [f64]| {
        let x = &s[..n];
        v.eval(t, x, &mut out[..n]);
        let a = v.jacobian(t, x);
        let j = DMatrix::from_column_slice(n, n, &s[n..n + n * n]);
        out[n..n + n * n].copy_from_slice((&a * j).as_slice());
        let p = DMatrix::from_column_slice(n, m, &s[n + n * n..]);
        let mut dp = &a * p;
        let mut tmp = vec![0.0; n];
        for (i, f) in fields.iter().enumerate() {
            f.eval(t, x, &mut tmp);
            for r in 0..n {
                dp[(r, i)] += tmp[r];
            }
        }
        out[n + n * n..].copy_from_slice(dp.as_slice());
    };
    let s = rk4_generic(rhs, &y0, 0.0, 1.0, h, &|s| inside(domain, &s[..n]) && s.iter().all(|x| x.is_finite()), |_, _| {})?;
    Ok((
        s[..n].to_vec(),
        DMatrix::from_column_slice(n, n, &s[n..n + n * n]),
        DMatrix::from_column_slice(n, m, &s[n + n * n..]),
    ))
}

/// RK4 flow of a time-dependent field over the horizon of `spec`.
pub fn integrate_flow(f: &TimeDependentField, p: &[f64], spec: &FlowSpec) -> Result<Vec<f64>, FlowError> {
    let c = f.compile()?;
    flow(&c, p, spec.t0, spec.t1, spec.h, f.chart().domain().map(|_| f.chart()))
}

/// `((φ^X_t)_* Y)(q) = Dφ^X_t(φ^X_{−t}(q)) · Y(φ^X_{−t}(q))` at each query point.
pub fn pushforward_field(
    x: &VectorField,
    y: &VectorField,
    t: f64,
    points: &[Vec<f64>],
    h: f64,
) -> Result<Vec<Vec<f64>>, FlowError> {
    let fx = CompiledField::new(x)?;
    let fy = y.compile()?;
    let domain = x.chart().domain().map(|_| x.chart());
    points
        .iter()
        .map(|q| {
            let p = flow(&fx, q, 0.0, -t, h, domain)?;
            let (_, j) = flow_variational(&fx, &p, 0.0, t, h, domain)?;
            let v = DVector::from_vec(fy.eval(&p));
            Ok((j * v).iter().copied().collect())
        })
        .collect()
}

/// `Z_τ = (φ^X_{τ,0})^* Y_τ`, i.e. `Z_τ(q) = (Dφ^X_{τ,0}(q))⁻¹ Y_τ(φ^X_{τ,0}(q))`.
struct PulledBack<'a> {
    x: &'a dyn Field,
    y: &'a dyn Field,
    h: f64,
    domain: Option<&'a Chart>,
    failed: std::cell::Cell<bool>,
}

impl PulledBack<'_> {
    fn value(&self, tau: f64, q: &[f64], out: &mut [f64]) {
        match flow_variational(self.x, q, 0.0, tau, self.h, self.domain) {
            Ok((w, j)) => {
                let mut yv = vec![0.0; q.len()];
                self.y.eval(tau, &w, &mut yv);
                match j.lu().solve(&DVector::from_vec(yv)) {
                    Some(z) => out.copy_from_slice(z.as_slice()),
                    None => {
                        self.failed.set(true);
                        out.iter_mut().for_each(|o| *o = f64::NAN);
                    }
                }
            }
            Err(_) => {
                self.failed.set(true);
                out.iter_mut().for_each(|o| *o = f64::NAN);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComposeResult {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub residual: f64,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Both sides of `φ^{X+Y}_{T,0} = φ^X_{T,0} ∘ Φ^Z_{T,0}` with `Z` the pulled-back field.
///
/// `T` may be negative; `T = −t` gives the middle-term formula.
pub fn flow_sum_compose_fields(
    x: &dyn Field,
    y: &dyn Field,
    p: &[f64],
    t: f64,
    h: f64,
    domain: Option<&Chart>,
) -> Result<ComposeResult, FlowError> {
    let n = x.dim();
    let sum = |tau: f64, q: &[f64], out: &mut [f64]| {
        let mut a = vec![0.0; n];
        x.eval(tau, q, out);
        y.eval(tau, q, &mut a);
        for (o, v) in out.iter_mut().zip(a) {
            *o += v;
        }
    };
    let lhs = rk4_generic(sum, p, 0.0, t, h, &|q| inside(domain, q), |_, _| {})?;
    let z = PulledBack {
        x,
        y,
        h,
        domain,
        failed: std::cell::Cell::new(false),
    };
    let outer = COMPOSE_OUTER_STEP.max(h);
    let mid = rk4_generic(|tau, q, out| z.value(tau, q, out), p, 0.0, t, outer, &|q| inside(domain, q), |_, _| {})?;
    let rhs = flow(x, &mid, 0.0, t, h, domain)?;
    let residual = distance(&lhs, &rhs);
    Ok(ComposeResult { lhs, rhs, residual })
}

pub fn flow_sum_compose(x: &VectorField, y: &VectorField, p: &[f64], t: f64) -> Result<ComposeResult, FlowError> {
    let fx = CompiledField::new(x)?;
    let fy = CompiledField::new(y)?;
    let domain = x.chart().domain().map(|_| x.chart());
    flow_sum_compose_fields(&fx, &fy, p, t, DEFAULT_STEP, domain)
}

/// Time-dependent variant; for autonomous inputs it reduces to [`flow_sum_compose`].
pub fn flow_sum_compose_td(
    x: &TimeDependentField,
    y: &TimeDependentField,
    p: &[f64],
    t: f64,
) -> Result<ComposeResult, FlowError> {
    let fx = x.compile()?;
    let fy = y.compile()?;
    let domain = x.chart().domain().map(|_| x.chart());
    flow_sum_compose_fields(&fx, &fy, p, t, DEFAULT_STEP, domain)
}

/// `z = φ^{X+Y}_{−t}(p)` by direct RK4 and by the composed formula.
pub fn middle_term(x: &VectorField, y: &VectorField, p: &[f64], t: f64) -> Result<ComposeResult, FlowError> {
    flow_sum_compose(x, y, p, -t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccelVelocity {
    pub fd_accel: Vec<f64>,
    pub velocity: Vec<f64>,
    pub residual: f64,
}

/// Compare `γ''(0)` for the integral curve `γ` of `Z_t` from `p` with `d/dt|₀ Z_t(p)`.
pub fn accel_velocity_check(z: &TimeDependentField, p: &[f64]) -> Result<AccelVelocity, FlowError> {
    let z0 = z.eval(0.0, p)?;
    let norm = z0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > Z0_TOL {
        return Err(FlowError::PreconditionZ0 { norm });
    }
    let c = z.compile()?;
    let domain = z.chart().domain().map(|_| z.chart());
    let second = |ht: f64| -> Result<Vec<f64>, FlowError> {
        let step = ht / 4.0;
        let fwd = flow(&c, p, 0.0, ht, step, domain)?;
        let bwd = flow(&c, p, 0.0, -ht, step, domain)?;
        Ok((0..p.len()).map(|i| (fwd[i] - 2.0 * p[i] + bwd[i]) / (ht * ht)).collect())
    };
    let d1 = second(ACCEL_STEP)?;
    let d2 = second(ACCEL_STEP / 2.0)?;
    let fd_accel: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect();
    let velocity = z.time_derivative(0.0, p)?;
    let residual = distance(&fd_accel, &velocity);
    Ok(AccelVelocity {
        fd_accel,
        velocity,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn field(chart: &Chart, comps: &[&str]) -> VectorField {
        let c = comps.iter().map(|s| parse_expr(s, chart.vars()).unwrap()).collect();
        VectorField::new(chart, c).unwrap()
    }

    #[test]
    fn exponential_growth() {
        let c = Chart::new("R", &["x"]).unwrap();
        let f = TimeDependentField::autonomous(&field(&c, &["x"]));
        let y = integrate_flow(&f, &[1.0], &FlowSpec::unit(1.0)).unwrap();
        assert!((y[0] - std::f64::consts::E).abs() < 1e-10);
    }

    #[test]
    fn rotation_closes() {
        let c = Chart::new("R2", &["x", "y"]).unwrap();
        let f = TimeDependentField::autonomous(&field(&c, &["-y", "x"]));
        let spec = FlowSpec::new(1e-3, 0.0, 2.0 * std::f64::consts::PI).unwrap();
        let y = integrate_flow(&f, &[1.0, 0.0], &spec).unwrap();
        assert!(distance(&y, &[1.0, 0.0]) < 1e-6);
    }

    #[test]
    fn translation_pushforward() {
        let c = Chart::new("R2", &["x", "y"]).unwrap();
        let v = pushforward_field(&field(&c, &["1", "0"]), &field(&c, &["0", "x"]), 0.3, &[vec![0.5, 1.0]], 1e-3).unwrap();
        assert!((v[0][0]).abs() < 1e-12);
        assert!((v[0][1] - 0.2).abs() < 1e-10);
    }

    #[test]
    fn flow_sum_in_one_dimension() {
        let c = Chart::new("R", &["x"]).unwrap();
        let r = flow_sum_compose(&field(&c, &["x"]), &field(&c, &["1"]), &[1.0], 1.0).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
        // x' = x + 1 from 1 gives 2e - 1.
        assert!((r.lhs[0] - (2.0 * std::f64::consts::E - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn accel_matches_velocity_for_linear_ramp() {
        let c = Chart::new("R", &["x"]).unwrap();
        let z = TimeDependentField::new(&c, "t", vec![(Expr::var("t"), field(&c, &["x"]))]).unwrap();
        let r = accel_velocity_check(&z, &[1.0]).unwrap();
        assert!(r.residual < 1e-4, "{r:?}");
    }

    #[test]
    fn left_domain_is_reported() {
        let c = Chart::new("R", &["x"])
            .unwrap()
            .with_box(vec![(crate::expr::int(-1), crate::expr::int(1))])
            .unwrap();
        let f = TimeDependentField::autonomous(&field(&c, &["1"]));
        assert!(matches!(
            integrate_flow(&f, &[0.0], &FlowSpec::unit(2.0)),
            Err(FlowError::LeftDomain { .. })
        ));
    }
}
