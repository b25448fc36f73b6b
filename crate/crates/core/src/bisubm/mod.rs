//! Bi-submersions of singular foliations: construction, the foliation and the
//! algebraic verification routes, bisections and groupoid models.

mod algebraic;
mod bisection;
mod foliation;
pub mod groupoid;
mod psi;

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::charts::{
    fiber_data, submersion_kernel_frame, Chart, ChartError, CompiledJacobian, SmoothMap, VectorField, VfModule,
};
use crate::expr::{from_f64, rat, to_f64, CompiledVec, Expr, Poly, Rational};
use crate::flows::{exp_with_jacobians, flow, Combination, CompiledField, FlowError, DEFAULT_STEP};
use crate::sampling;

pub use algebraic::{
    verify_algebraic_bisubmersion, MiddleSolve, PhiCertificate, PhiVerdict, SmoothnessRow, TripleSample, TripleSpace,
    Witness,
};
pub use bisection::{bisection_carry, Bisection, CarriedMap, CarryReport};
pub use foliation::{verify_foliation_bisubmersion, FoliationReport, FoliationRoute, ProjectionLine};
pub use psi::{check_psi_diagram, check_psi_diagram_with, PsiModel, PsiReport, PSI_TOL};
pub use groupoid::{groupoid_phi, local_phi_from_group, pair_phi_f64, GroupElem, GroupKind, GroupModel, PairElem};

pub const DEFAULT_BALL_RADIUS: f64 = 0.25;
const MAX_RADIUS_HALVINGS: usize = 12;
const LIE_SERIES_MAX_ORDER: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BisubmError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("flows escape the domain for every tried ball radius")]
    FlowEscape,
    #[error("{m} generators but the fiber has dimension {dim_fx}")]
    NotMinimal { m: usize, dim_fx: usize },
    #[error("triple is not in the fibered product")]
    FiberedMismatch,
    #[error("group element of norm {norm} outside validity ball of radius {radius}")]
    OutsideValidityBall { norm: f64, radius: f64 },
    #[error("invalid bisection: {0}")]
    BisectionInvalid(String),
    #[error("diagram does not commute: discrepancy {discrepancy:e} at {witness:?}")]
    CommutationFailure { discrepancy: f64, witness: Vec<f64> },
    #[error("operation not available: {0}")]
    NotApplicable(String),
}

/// Path-holonomy data: `U = V × Bᵐ × G`, `s` the projection, `t(y,λ,g) = exp(Σλᵢ Xᵢ)(y)`.
#[derive(Clone, Debug)]
pub struct PathHolonomy {
    pub module: VfModule,
    pub point: Vec<f64>,
    pub radius: f64,
    pub group: Option<GroupModel>,
    pub h: f64,
    fields: Vec<Arc<CompiledField>>,
}

impl PartialEq for PathHolonomy {
    fn eq(&self, other: &Self) -> bool {
        self.module == other.module
            && self.point == other.point
            && self.radius == other.radius
            && self.group == other.group
            && self.h == other.h
    }
}

impl PathHolonomy {
    pub fn n(&self) -> usize {
        self.module.chart().dim()
    }

    pub fn m(&self) -> usize {
        self.module.len()
    }

    pub fn k(&self) -> usize {
        self.group.as_ref().map(GroupModel::dim).unwrap_or(0)
    }

    fn domain(&self) -> Option<&Chart> {
        let c = self.module.chart();
        c.domain().map(|_| c)
    }

    pub fn exp(&self, lambda: &[f64], y: &[f64]) -> Result<Vec<f64>, FlowError> {
        let v = Combination::constant(&self.fields, lambda);
        flow(&v, y, 0.0, 1.0, self.h, self.domain())
    }

    fn t_raw(&self, u: &[f64]) -> Result<Vec<f64>, FlowError> {
        let n = self.n();
        self.exp(&u[n..n + self.m()], &u[..n])
    }

    fn t_raw_jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>, FlowError> {
        let (n, m) = (self.n(), self.m());
        let (_, jy, jl) = exp_with_jacobians(&self.fields, &u[n..n + m], &u[..n], self.h, self.domain())?;
        let mut j = DMatrix::zeros(n, u.len());
        j.view_mut((0, 0), (n, n)).copy_from(&jy);
        j.view_mut((0, n), (n, m)).copy_from(&jl);
        Ok(j)
    }

    /// `α_ξ(y,λ,g) = (y, λ+ξ_λ, g+ξ_g)`.
    fn alpha_raw(&self, xi: &[f64], u: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = u.to_vec();
        for (o, x) in out[n..].iter_mut().zip(xi) {
            *o += x;
        }
        out
    }

    /// `β_η(y,λ,g) = (exp(−V_{λ+η})(t(y,λ)), λ+η_λ, g+η_g)`; a commuting frame of `ker dt`.
    fn beta_raw(&self, eta: &[f64], u: &[f64]) -> Result<Vec<f64>, FlowError> {
        let n = self.n();
        let m = self.m();
        let w = self.t_raw(u)?;
        let mut out = self.alpha_raw(eta, u);
        let neg: Vec<f64> = out[n..n + m].iter().map(|v| -v).collect();
        let y = self.exp(&neg, &w)?;
        out[..n].copy_from_slice(&y);
        Ok(out)
    }

    /// Frame field `K_j = ∂/∂η_j β_η |₀` of `ker dt` at `u`.
    pub fn ker_dt_field(&self, j: usize, u: &[f64]) -> Result<Vec<f64>, FlowError> {
        let (n, m) = (self.n(), self.m());
        let mut out = vec![0.0; u.len()];
        out[n + j] = 1.0;
        if j >= m {
            return Ok(out);
        }
        let w = self.t_raw(u)?;
        let neg: Vec<f64> = u[n..n + m].iter().map(|v| -v).collect();
        let (_, _, p) = exp_with_jacobians(&self.fields, &neg, &w, self.h, self.domain())?;
        for r in 0..n {
            out[r] = -p[(r, j)];
        }
        Ok(out)
    }

    pub fn generator_fields(&self) -> &[Arc<CompiledField>] {
        &self.fields
    }
}

#[derive(Clone, Debug)]
struct Symbolic {
    s: SmoothMap,
    t: SmoothMap,
    s_frame: Vec<VectorField>,
    t_frame: Vec<VectorField>,
    s_c: CompiledVec,
    t_c: CompiledVec,
    s_jac: CompiledJacobian,
    t_jac: CompiledJacobian,
    s_frame_c: Vec<Arc<CompiledField>>,
    t_frame_c: Vec<Arc<CompiledField>>,
}

#[derive(Clone, Debug)]
enum Kind {
    Symbolic(Box<Symbolic>),
    PathHolonomy(Box<PathHolonomy>),
}

/// Fiber coordinate layout `(y, λ, g)` of path-holonomy bi-submersions.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberLayout {
    pub base: usize,
    pub lambda: usize,
    pub group: usize,
}

#[derive(Clone, Debug)]
pub struct BiSubmersion {
    pub chart: Chart,
    kind: Kind,
    pub degree_bound: u32,
    pub seed: u64,
    swapped: bool,
    layout: Option<FiberLayout>,
    group: Option<GroupModel>,
    /// Generating module and base point, for path-holonomy constructions.
    module: Option<VfModule>,
    anchor: Option<Vec<f64>>,
}

impl PartialEq for BiSubmersion {
    fn eq(&self, other: &Self) -> bool {
        self.chart == other.chart
            && self.swapped == other.swapped
            && self.layout == other.layout
            && self.group == other.group
            && self.module == other.module
            && match (&self.kind, &other.kind) {
                (Kind::Symbolic(a), Kind::Symbolic(b)) => {
                    a.s == b.s && a.t == b.t && a.s_frame == b.s_frame && a.t_frame == b.t_frame
                }
                (Kind::PathHolonomy(a), Kind::PathHolonomy(b)) => a == b,
                _ => false,
            }
    }
}

fn compile_frame(frame: &[VectorField]) -> Result<Vec<Arc<CompiledField>>, ChartError> {
    frame
        .iter()
        .map(|x| CompiledField::new(x).map(Arc::new).map_err(ChartError::from))
        .collect()
}

impl BiSubmersion {
    /// Symbolic bi-submersion; frames are verified (or computed) from the maps.
    pub fn symbolic(
        s: SmoothMap,
        t: SmoothMap,
        s_frame: Option<Vec<VectorField>>,
        t_frame: Option<Vec<VectorField>>,
        degree_bound: u32,
        seed: u64,
        samples: usize,
    ) -> Result<BiSubmersion, BisubmError> {
        if s.source != t.source {
            return Err(ChartError::ChartMismatch(s.source.name.clone(), t.source.name.clone()).into());
        }
        let mut rng = sampling::rng(seed);
        let s_frame = submersion_kernel_frame(&s, s_frame, samples, &mut rng)?;
        let t_frame = submersion_kernel_frame(&t, t_frame, samples, &mut rng)?;
        let sym = Symbolic {
            s_c: s.compile().map_err(ChartError::from)?,
            t_c: t.compile().map_err(ChartError::from)?,
            s_jac: CompiledJacobian::new(&s).map_err(ChartError::from)?,
            t_jac: CompiledJacobian::new(&t).map_err(ChartError::from)?,
            s_frame_c: compile_frame(&s_frame)?,
            t_frame_c: compile_frame(&t_frame)?,
            s,
            t,
            s_frame,
            t_frame,
        };
        Ok(BiSubmersion {
            chart: sym.s.source.clone(),
            kind: Kind::Symbolic(Box::new(sym)),
            degree_bound,
            seed,
            swapped: false,
            layout: None,
            group: None,
            module: None,
            anchor: None,
        })
    }

    /// The pair groupoid `M × M` as a bi-submersion, coordinates `(target, source)`.
    pub fn pair_groupoid(m: &Chart, degree_bound: u32) -> Result<BiSubmersion, BisubmError> {
        let mut vars: Vec<String> = m.vars().iter().map(|v| format!("{v}_t")).collect();
        vars.extend(m.vars().iter().map(|v| format!("{v}_s")));
        let n = m.dim();
        let u = Chart::from_strings(&format!("{}x{}", m.name, m.name), vars.clone())?;
        let t = SmoothMap::new(&u, m, vars[..n].iter().map(|v| Expr::var(v)).collect())?;
        let s = SmoothMap::new(&u, m, vars[n..].iter().map(|v| Expr::var(v)).collect())?;
        BiSubmersion::symbolic(s, t, None, None, degree_bound, 0, 10)
    }

    pub fn is_swapped(&self) -> bool {
        self.swapped
    }

    pub fn layout(&self) -> Option<&FiberLayout> {
        self.layout.as_ref()
    }

    pub fn group(&self) -> Option<&GroupModel> {
        self.group.as_ref()
    }

    /// Generating module of a path-holonomy construction.
    pub fn module(&self) -> Option<&VfModule> {
        self.module.as_ref()
    }

    /// Base point a path-holonomy construction was built at.
    pub fn anchor(&self) -> Option<&[f64]> {
        self.anchor.as_deref()
    }

    pub fn path_holonomy(&self) -> Option<&PathHolonomy> {
        match &self.kind {
            Kind::PathHolonomy(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self.kind, Kind::Symbolic(_))
    }

    /// Swap source and target together with their kernel frames.
    pub fn inverse(&self) -> BiSubmersion {
        let mut b = self.clone();
        b.swapped = !b.swapped;
        b
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Symbolic `(s, t)` in the current orientation.
    pub fn maps(&self) -> Option<(&SmoothMap, &SmoothMap)> {
        match &self.kind {
            Kind::Symbolic(sym) if self.swapped => Some((&sym.t, &sym.s)),
            Kind::Symbolic(sym) => Some((&sym.s, &sym.t)),
            _ => None,
        }
    }

    /// Symbolic `(ker ds, ker dt)` frames in the current orientation.
    pub fn frames(&self) -> Option<(&[VectorField], &[VectorField])> {
        match &self.kind {
            Kind::Symbolic(sym) if self.swapped => Some((&sym.t_frame, &sym.s_frame)),
            Kind::Symbolic(sym) => Some((&sym.s_frame, &sym.t_frame)),
            _ => None,
        }
    }

    /// Chart of `M` (the target of `s`) and of `N` (the target of `t`).
    pub fn base_charts(&self) -> (Chart, Chart) {
        match &self.kind {
            Kind::Symbolic(sym) if self.swapped => (sym.t.target.clone(), sym.s.target.clone()),
            Kind::Symbolic(sym) => (sym.s.target.clone(), sym.t.target.clone()),
            Kind::PathHolonomy(p) => (p.module.chart().clone(), p.module.chart().clone()),
        }
    }

    fn raw_s(&self, u: &[f64]) -> Result<Vec<f64>, FlowError> {
        match &self.kind {
            Kind::Symbolic(sym) => Ok(sym.s_c.eval(u)),
            Kind::PathHolonomy(p) => Ok(u[..p.n()].to_vec()),
        }
    }

    fn raw_t(&self, u: &[f64]) -> Result<Vec<f64>, FlowError> {
        match &self.kind {
            Kind::Symbolic(sym) => Ok(sym.t_c.eval(u)),
            Kind::PathHolonomy(p) => p.t_raw(u),
        }
    }

    fn raw_s_jac(&self, u: &[f64]) -> Result<DMatrix<f64>, FlowError> {
        match &self.kind {
            Kind::Symbolic(sym) => Ok(sym.s_jac.eval(u)),
            Kind::PathHolonomy(p) => {
                let n = p.n();
                Ok(DMatrix::from_fn(n, u.len(), |i, j| if i == j { 1.0 } else { 0.0 }))
            }
        }
    }

    fn raw_t_jac(&self, u: &[f64]) -> Result<DMatrix<f64>, FlowError> {
        match &self.kind {
            Kind::Symbolic(sym) => Ok(sym.t_jac.eval(u)),
            Kind::PathHolonomy(p) => p.t_raw_jacobian(u),
        }
    }

    pub fn s_eval(&self, u: &[f64]) -> Result<Vec<f64>, FlowError> {
        if self.swapped {
            self.raw_t(u)
        } else {
            self.raw_s(u)
        }
    }

    pub fn t_eval(&self, u: &[f64]) -> Result<Vec<f64>, FlowError> {
        if self.swapped {
            self.raw_s(u)
        } else {
            self.raw_t(u)
        }
    }

    pub fn s_jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>, FlowError> {
        if self.swapped {
            self.raw_t_jac(u)
        } else {
            self.raw_s_jac(u)
        }
    }

    pub fn t_jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>, FlowError> {
        if self.swapped {
            self.raw_s_jac(u)
        } else {
            self.raw_t_jac(u)
        }
    }

    fn raw_frame_len(&self, s_side: bool) -> usize {
        match &self.kind {
            Kind::Symbolic(sym) => {
                if s_side {
                    sym.s_frame.len()
                } else {
                    sym.t_frame.len()
                }
            }
            Kind::PathHolonomy(p) => p.m() + p.k(),
        }
    }

    /// Sizes of the `ker ds` and `ker dt` frames.
    pub fn frame_sizes(&self) -> (usize, usize) {
        let (a, b) = (self.raw_frame_len(true), self.raw_frame_len(false));
        if self.swapped {
            (b, a)
        } else {
            (a, b)
        }
    }

    fn domain(&self) -> Option<&Chart> {
        self.chart.domain().map(|_| &self.chart)
    }

    fn raw_flow(&self, s_side: bool, c: &[f64], u: &[f64]) -> Result<Vec<f64>, FlowError> {
        match &self.kind {
            Kind::Symbolic(sym) => {
                let fr = if s_side { &sym.s_frame_c } else { &sym.t_frame_c };
                if c.iter().all(|v| *v == 0.0) {
                    return Ok(u.to_vec());
                }
                let v = Combination::constant(fr, c);
                flow(&v, u, 0.0, 1.0, DEFAULT_STEP, self.domain())
            }
            Kind::PathHolonomy(p) => {
                if s_side {
                    Ok(p.alpha_raw(c, u))
                } else {
                    p.beta_raw(c, u)
                }
            }
        }
    }

    /// Time-one flow of `Σ ξᵢ Xᵢ` over the `ker ds` frame.
    pub fn alpha(&self, xi: &[f64], u: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.raw_flow(!self.swapped, xi, u)
    }

    /// Time-one flow of `Σ ηⱼ Yⱼ` over the `ker dt` frame.
    pub fn beta(&self, eta: &[f64], u: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.raw_flow(self.swapped, eta, u)
    }

    /// Value of the `j`-th `ker ds` (`s_side`) or `ker dt` frame field at `u`.
    pub fn frame_value(&self, s_side: bool, j: usize, u: &[f64]) -> Result<Vec<f64>, FlowError> {
        let raw_s_side = s_side != self.swapped;
        match &self.kind {
            Kind::Symbolic(sym) => {
                let fr = if raw_s_side { &sym.s_frame } else { &sym.t_frame };
                Ok(fr[j].eval_f64(u).map_err(ChartError::from)?)
            }
            Kind::PathHolonomy(p) => {
                if raw_s_side {
                    let mut v = vec![0.0; u.len()];
                    v[p.n() + j] = 1.0;
                    Ok(v)
                } else {
                    p.ker_dt_field(j, u)
                }
            }
        }
    }

    /// Candidate middle component of `φ` on `χ(ξ, u, η)`.
    fn candidate(&self, xi: &[f64], u: &[f64], eta: &[f64], w: &[Vec<f64>; 3]) -> Result<Vec<f64>, FlowError> {
        match (&self.kind, &self.layout) {
            (Kind::PathHolonomy(_), Some(l)) => {
                let base_from = if self.swapped { &w[0] } else { &w[2] };
                let mut z = base_from[..l.base].to_vec();
                for i in l.base..l.base + l.lambda {
                    z.push(w[0][i] - w[1][i] + w[2][i]);
                }
                let g = l.base + l.lambda;
                let (g1, g2, g3) = (&w[0][g..], &w[1][g..], &w[2][g..]);
                match &self.group {
                    Some(model) => z.extend(model.phi_middle_coords(g1, g2, g3)),
                    None => z.extend((0..l.group).map(|i| g1[i] - g2[i] + g3[i])),
                }
                Ok(z)
            }
            (Kind::Symbolic(sym), _) => {
                let (xf, yf) = if self.swapped {
                    (&sym.t_frame_c, &sym.s_frame_c)
                } else {
                    (&sym.s_frame_c, &sym.t_frame_c)
                };
                let v = Combination::constant(xf, xi).plus(&Combination::constant(yf, eta));
                if xi.iter().chain(eta).all(|c| *c == 0.0) {
                    return Ok(u.to_vec());
                }
                flow(&v, u, 0.0, 1.0, DEFAULT_STEP, self.domain())
            }
            (Kind::PathHolonomy(_), _) => Ok(w[1].clone()),
        }
    }

    /// Whether `t` can depend on the group coordinates.
    pub fn t_depends_on_group(&self) -> bool {
        let Some(l) = &self.layout else { return false };
        match &self.kind {
            Kind::Symbolic(sym) => {
                let (_, t) = if self.swapped { (&sym.t, &sym.s) } else { (&sym.s, &sym.t) };
                let gvars = &self.chart.vars()[l.base + l.lambda..];
                t.components().iter().any(|c| gvars.iter().any(|g| c.depends_on(g)))
            }
            Kind::PathHolonomy(_) => false,
        }
    }
}

/// Names of the fiber variables, avoiding clashes with the base chart.
fn fiber_names(base: &Chart, prefix: &str, count: usize) -> Vec<String> {
    (1..=count)
        .map(|i| {
            let mut name = format!("{prefix}{i}");
            while base.vars().contains(&name) {
                name.push('_');
            }
            name
        })
        .collect()
}

/// `exp(Σλᵢ Xᵢ)(y)` as a polynomial when the Lie series of every coordinate terminates.
fn terminating_lie_series(module: &VfModule, u_chart: &Chart, lambda_vars: &[String]) -> Option<Vec<Expr>> {
    let n = module.chart().dim();
    let uvars = u_chart.vars();
    let gens: Vec<Vec<Poly>> = module
        .generators()
        .iter()
        .map(|g| g.components().iter().map(|c| Poly::from_expr(c, uvars).ok()).collect::<Option<Vec<_>>>())
        .collect::<Option<_>>()?;
    // V = Σ λᵢ Xᵢ on U, acting as a derivation on polynomials in (y, λ).
    let mut v: Vec<Poly> = vec![Poly::zero(uvars.len()); n];
    for (i, g) in gens.iter().enumerate() {
        let li = Poly::var(uvars.len(), uvars.iter().position(|w| *w == lambda_vars[i])?);
        for (vc, gc) in v.iter_mut().zip(g) {
            *vc = vc.add(&li.mul(gc));
        }
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut term = Poly::var(uvars.len(), i);
        let mut acc = term.clone();
        let mut fact = Rational::from_integer(1.into());
        let mut done = false;
        for k in 1..=LIE_SERIES_MAX_ORDER {
            let mut next = Poly::zero(uvars.len());
            for (j, vc) in v.iter().enumerate() {
                next = next.add(&vc.mul(&term.derivative(j)));
            }
            term = next;
            if term.is_zero() {
                done = true;
                break;
            }
            fact *= Rational::from_integer((k as i64).into());
            acc = acc.add(&term.scale(&fact.recip()));
        }
        if !done {
            return None;
        }
        out.push(acc.to_expr(uvars));
    }
    Some(out)
}

/// Options for [`build_path_holonomy`].
#[derive(Clone, Debug)]
pub struct PathHolonomyOptions {
    pub minimal: bool,
    pub group: Option<GroupModel>,
    pub samples: usize,
    pub seed: u64,
    /// Force the numeric representation even when the Lie series terminates.
    pub numeric: bool,
}

impl Default for PathHolonomyOptions {
    fn default() -> Self {
        PathHolonomyOptions {
            minimal: false,
            group: None,
            samples: crate::charts::DEFAULT_SAMPLES,
            seed: 0,
            numeric: false,
        }
    }
}

/// Path-holonomy bi-submersion `U ⊂ M × Bᵐ (× G)` of the generators of `module` at `x`.
pub fn build_path_holonomy(
    module: &VfModule,
    x: &[Rational],
    opts: &PathHolonomyOptions,
) -> Result<BiSubmersion, BisubmError> {
    let m = module.len();
    if opts.minimal {
        let rep = fiber_data(module, x)?;
        if rep.dim_fx != m {
            return Err(BisubmError::NotMinimal { m, dim_fx: rep.dim_fx });
        }
    }
    let base = module.chart();
    let n = base.dim();
    let k = opts.group.as_ref().map(GroupModel::dim).unwrap_or(0);
    let xf: Vec<f64> = x.iter().map(to_f64).collect();
    let fields: Vec<Arc<CompiledField>> = compile_frame(module.generators())?;
    let domain = base.domain().map(|_| base);
    let (lo, hi) = match base.domain() {
        Some(_) => base.bounds_f64(),
        None => (xf.iter().map(|v| v - 1.0).collect(), xf.iter().map(|v| v + 1.0).collect()),
    };
    // Shrink the ball until sampled flows stay in the domain.
    let mut radius = DEFAULT_BALL_RADIUS;
    let mut rng = sampling::rng(opts.seed);
    let mut ok = false;
    for _ in 0..MAX_RADIUS_HALVINGS {
        let good = (0..opts.samples).all(|_| {
            let y = sampling::uniform_in_box(&mut rng, &lo, &hi);
            let lam = sampling::uniform_ball(&mut rng, m, radius);
            let v = Combination::constant(&fields, &lam);
            flow(&v, &y, 0.0, 1.0, DEFAULT_STEP, domain).is_ok()
        });
        if good {
            ok = true;
            break;
        }
        radius /= 2.0;
    }
    if !ok {
        return Err(BisubmError::FlowEscape);
    }
    let lambda_vars = fiber_names(base, "lam", m);
    let group_vars = fiber_names(base, "g", k);
    let mut uvars: Vec<String> = base.vars().to_vec();
    uvars.extend(lambda_vars.iter().cloned());
    uvars.extend(group_vars.iter().cloned());
    let q = |v: f64| from_f64(v).unwrap_or_else(|| rat(0, 1));
    let rq = q(radius);
    let gq = q(opts.group.as_ref().map(|g| g.radius).unwrap_or(radius));
    let mut bounds: Vec<(Rational, Rational)> = (0..n).map(|i| (q(lo[i]), q(hi[i]))).collect();
    bounds.extend((0..m).map(|_| (-rq.clone(), rq.clone())));
    bounds.extend((0..k).map(|_| (-gq.clone(), gq.clone())));
    let u_chart = Chart::from_strings(&format!("{}_path_holonomy", base.name), uvars.clone())?.with_box(bounds)?;
    let layout = FiberLayout {
        base: n,
        lambda: m,
        group: k,
    };

    if !opts.numeric {
        if let Some(t_comps) = terminating_lie_series(module, &u_chart, &lambda_vars) {
            let s = SmoothMap::new(&u_chart, base, base.vars().iter().map(|v| Expr::var(v)).collect())?;
            let t = SmoothMap::new(&u_chart, base, t_comps)?;
            if let Ok(mut b) =
                BiSubmersion::symbolic(s, t, None, None, module.degree_bound, opts.seed, opts.samples)
            {
                b.layout = Some(layout);
                b.group = opts.group.clone();
                b.module = Some(module.clone());
                b.anchor = Some(xf);
                return Ok(b);
            }
        }
    }
    let ph = PathHolonomy {
        module: module.clone(),
        point: xf.clone(),
        radius,
        group: opts.group.clone(),
        h: DEFAULT_STEP,
        fields,
    };
    Ok(BiSubmersion {
        chart: u_chart,
        kind: Kind::PathHolonomy(Box::new(ph)),
        degree_bound: module.degree_bound,
        seed: opts.seed,
        swapped: false,
        layout: Some(layout),
        group: opts.group.clone(),
        module: Some(module.clone()),
        anchor: Some(xf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::int;

    #[test]
    fn translation_path_holonomy_is_symbolic() {
        let c = Chart::new("R", &["x"]).unwrap();
        let m = VfModule::new(&c, vec![VectorField::coordinate(&c, 0)], 8).unwrap();
        let b = build_path_holonomy(&m, &[int(0)], &PathHolonomyOptions::default()).unwrap();
        let (_, t) = b.maps().unwrap();
        assert_eq!(t.components()[0].to_string(), "x + lam1");
        assert_eq!(b.t_eval(&[0.5, 0.25]).unwrap(), vec![0.75]);
    }
}
