//! Coordinate charts, polynomial vector fields and degree-bounded module computations.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_traits::Zero;
use thiserror::Error;

use crate::expr::poly::monomials_up_to;
use crate::expr::{to_f64, CompiledVec, EvalError, Expr, Monomial, NotPolynomial, Poly, Rational};
use crate::linalg::{rank_exact, rank_f64, Echelon, LinearSystem};
use crate::sampling::{self, SampleRng};

pub const DEFAULT_DEGREE_BOUND: u32 = 8;
pub const DEFAULT_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("chart needs at least one variable")]
    Empty,
    #[error("duplicate chart variable `{0}`")]
    DuplicateVariable(String),
    #[error("objects live on different charts ({0} vs {1})")]
    ChartMismatch(String, String),
    #[error("expected {expected} components, got {got}")]
    ComponentCount { expected: usize, got: usize },
    #[error(transparent)]
    NotPolynomial(#[from] NotPolynomial),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("map is not a submersion at {point:?}")]
    NotSubmersion { point: Vec<f64> },
    #[error("frame field {index} is not annihilated by the Jacobian: {residual}")]
    FrameInvalid { index: usize, residual: String },
    #[error("frame has rank below {expected} at {point:?}")]
    FrameRankDeficient { expected: usize, point: Vec<f64> },
    #[error("kernel frame cannot be computed symbolically")]
    CannotAutoCompute,
    #[error("degree bound {degree_bound} is too small to decide projectability")]
    CannotDecide { degree_bound: u32 },
}

/// A coordinate box with named variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub name: String,
    vars: Vec<String>,
    domain: Option<Vec<(Rational, Rational)>>,
}

impl Chart {
    pub fn new(name: &str, vars: &[&str]) -> Result<Chart, ChartError> {
        Chart::from_strings(name, vars.iter().map(|s| s.to_string()).collect())
    }

    pub fn from_strings(name: &str, vars: Vec<String>) -> Result<Chart, ChartError> {
        if vars.is_empty() {
            return Err(ChartError::Empty);
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(ChartError::DuplicateVariable(v.clone()));
            }
        }
        Ok(Chart {
            name: name.to_string(),
            vars,
            domain: None,
        })
    }

    /// Euclidean chart with variables `x1..xn`.
    pub fn euclidean(name: &str, n: usize) -> Chart {
        let vars = (1..=n).map(|i| format!("x{i}")).collect();
        Chart::from_strings(name, vars).expect("n >= 1")
    }

    pub fn with_box(mut self, bounds: Vec<(Rational, Rational)>) -> Result<Chart, ChartError> {
        if bounds.len() != self.dim() {
            return Err(ChartError::ComponentCount {
                expected: self.dim(),
                got: bounds.len(),
            });
        }
        self.domain = Some(bounds);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn domain(&self) -> Option<&[(Rational, Rational)]> {
        self.domain.as_deref()
    }

    /// Float bounds, `[-1, 1]` per axis when no box was given.
    pub fn bounds_f64(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.domain {
            Some(b) => (
                b.iter().map(|(a, _)| to_f64(a)).collect(),
                b.iter().map(|(_, c)| to_f64(c)).collect(),
            ),
            None => (vec![-1.0; self.dim()], vec![1.0; self.dim()]),
        }
    }

    /// Membership in the box; charts without a box are all of R^n.
    pub fn contains(&self, x: &[f64]) -> bool {
        match &self.domain {
            None => x.iter().all(|v| v.is_finite()),
            Some(b) => x
                .iter()
                .zip(b)
                .all(|(v, (lo, hi))| *v >= to_f64(lo) && *v <= to_f64(hi)),
        }
    }

    pub fn sample(&self, rng: &mut SampleRng) -> Vec<f64> {
        let (lo, hi) = self.bounds_f64();
        sampling::uniform_in_box(rng, &lo, &hi)
    }

    fn same(&self, other: &Chart) -> Result<(), ChartError> {
        if self.vars == other.vars {
            Ok(())
        } else {
            Err(ChartError::ChartMismatch(self.name.clone(), other.name.clone()))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    chart: Chart,
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: &Chart, comps: Vec<Expr>) -> Result<VectorField, ChartError> {
        if comps.len() != chart.dim() {
            return Err(ChartError::ComponentCount {
                expected: chart.dim(),
                got: comps.len(),
            });
        }
        Ok(VectorField {
            chart: chart.clone(),
            comps,
        })
    }

    pub fn zero(chart: &Chart) -> VectorField {
        VectorField {
            chart: chart.clone(),
            comps: vec![Expr::zero(); chart.dim()],
        }
    }

    /// The coordinate field `∂_i`.
    pub fn coordinate(chart: &Chart, i: usize) -> VectorField {
        let mut v = VectorField::zero(chart);
        v.comps[i] = Expr::one();
        v
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    /// `X(f) = Σ Xʲ ∂_j f`.
    pub fn apply_to(&self, f: &Expr) -> Expr {
        let mut acc = Expr::zero();
        for (xj, v) in self.comps.iter().zip(&self.chart.vars) {
            acc = Expr::add(acc, Expr::mul(xj.clone(), f.differentiate(v)));
        }
        acc.simplify()
    }

    pub fn scale(&self, g: &Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            comps: self.comps.iter().map(|c| Expr::mul(g.clone(), c.clone()).simplify()).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField, ChartError> {
        self.chart.same(&other.chart)?;
        Ok(VectorField {
            chart: self.chart.clone(),
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| Expr::add(a.clone(), b.clone()).simplify())
                .collect(),
        })
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField, ChartError> {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn to_polys(&self) -> Result<Vec<Poly>, NotPolynomial> {
        self.comps.iter().map(|c| Poly::from_expr(c, &self.chart.vars)).collect()
    }

    pub fn is_polynomial(&self) -> bool {
        self.to_polys().is_ok()
    }

    /// Exact zero test for polynomial fields.
    pub fn is_zero(&self) -> Result<bool, NotPolynomial> {
        Ok(self.to_polys()?.iter().all(Poly::is_zero))
    }

    pub fn compile(&self) -> Result<CompiledVec, EvalError> {
        CompiledVec::new(&self.comps, &self.chart.vars)
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        Ok(self.compile()?.eval(x))
    }

    pub fn eval_exact(&self, x: &[Rational]) -> Result<Vec<Rational>, NotPolynomial> {
        Ok(self.to_polys()?.iter().map(|p| p.eval_exact(x)).collect())
    }

    pub fn from_polys(chart: &Chart, polys: &[Poly]) -> VectorField {
        VectorField {
            chart: chart.clone(),
            comps: polys.iter().map(|p| p.to_expr(&chart.vars)).collect(),
        }
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, v) in self.comps.iter().zip(&self.chart.vars) {
            let c = c.simplify();
            if c.is_zero_const() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.is_one_const() {
                write!(f, "∂{v}")?;
            } else {
                let s = c.to_string();
                let atomic = !s[1..].contains([' ', '+', '-']);
                if atomic {
                    write!(f, "{s}∂{v}")?;
                } else {
                    write!(f, "({s})∂{v}")?;
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// `[X,Y]ⁱ = Σ_j (Xʲ ∂_j Yⁱ − Yʲ ∂_j Xⁱ)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, ChartError> {
    x.chart.same(&y.chart)?;
    let comps = (0..x.chart.dim())
        .map(|i| Expr::sub(x.apply_to(&y.comps[i]), y.apply_to(&x.comps[i])).simplify())
        .collect();
    Ok(VectorField {
        chart: x.chart.clone(),
        comps,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothMap {
    pub source: Chart,
    pub target: Chart,
    comps: Vec<Expr>,
}

impl SmoothMap {
    pub fn new(source: &Chart, target: &Chart, comps: Vec<Expr>) -> Result<SmoothMap, ChartError> {
        if comps.len() != target.dim() {
            return Err(ChartError::ComponentCount {
                expected: target.dim(),
                got: comps.len(),
            });
        }
        Ok(SmoothMap {
            source: source.clone(),
            target: target.clone(),
            comps,
        })
    }

    pub fn identity(chart: &Chart) -> SmoothMap {
        let comps = chart.vars.iter().map(|v| Expr::var(v)).collect();
        SmoothMap {
            source: chart.clone(),
            target: chart.clone(),
            comps,
        }
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn compile(&self) -> Result<CompiledVec, EvalError> {
        CompiledVec::new(&self.comps, &self.source.vars)
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        Ok(self.compile()?.eval(x))
    }

    /// `df∘X`, one Expr per target component.
    pub fn push_components(&self, x: &VectorField) -> Result<Vec<Expr>, ChartError> {
        self.source.same(&x.chart)?;
        Ok(self.comps.iter().map(|f| x.apply_to(f)).collect())
    }
}

/// `m×n` matrix of partial derivatives.
pub fn jacobian_matrix(f: &SmoothMap) -> Vec<Vec<Expr>> {
    f.comps
        .iter()
        .map(|c| f.source.vars.iter().map(|v| c.differentiate(v)).collect())
        .collect()
}

/// Compiled float Jacobian of a map.
#[derive(Clone, Debug)]
pub struct CompiledJacobian {
    rows: usize,
    cols: usize,
    entries: CompiledVec,
}

impl CompiledJacobian {
    pub fn new(f: &SmoothMap) -> Result<Self, EvalError> {
        let j = jacobian_matrix(f);
        let flat: Vec<Expr> = j.into_iter().flatten().collect();
        Ok(CompiledJacobian {
            rows: f.target.dim(),
            cols: f.source.dim(),
            entries: CompiledVec::new(&flat, &f.source.vars)?,
        })
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.entries.eval(x))
    }
}

/// Check full row rank of `df` at `samples` points drawn from the source box.
pub fn check_submersion(f: &SmoothMap, samples: usize, rng: &mut SampleRng) -> Result<(), ChartError> {
    let jac = CompiledJacobian::new(f)?;
    for _ in 0..samples {
        let x = f.source.sample(rng);
        let j = jac.eval(&x);
        if j.iter().any(|v| !v.is_finite()) || rank_f64(&j) < f.target.dim() {
            return Err(ChartError::NotSubmersion { point: x });
        }
    }
    Ok(())
}

fn det_poly(m: &[Vec<Poly>], nvars: usize) -> Poly {
    let k = m.len();
    match k {
        0 => Poly::one(nvars),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = Poly::zero(nvars);
            for j in 0..k {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor = minor(m, 0, j);
                let term = m[0][j].mul(&det_poly(&minor, nvars));
                acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

fn minor(m: &[Vec<Poly>], r: usize, c: usize) -> Vec<Vec<Poly>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != r)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(j, _)| *j != c)
                .map(|(_, p)| p.clone())
                .collect()
        })
        .collect()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Polynomial frame `e_k − B⁻¹J_k` of `ker df`, if some maximal minor admits it.
fn auto_kernel_frame(f: &SmoothMap) -> Result<Vec<VectorField>, ChartError> {
    let n = f.source.dim();
    let m = f.target.dim();
    let vars = &f.source.vars;
    let jac: Vec<Vec<Poly>> = jacobian_matrix(f)
        .iter()
        .map(|row| row.iter().map(|e| Poly::from_expr(e, vars)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()
        .map_err(|_| ChartError::CannotAutoCompute)?;
    let mut subsets = combinations(n, m);
    // Constant determinants first.
    let dets: Vec<Poly> = subsets
        .iter()
        .map(|cols| {
            let b: Vec<Vec<Poly>> = jac.iter().map(|row| cols.iter().map(|&c| row[c].clone()).collect()).collect();
            det_poly(&b, n)
        })
        .collect();
    let mut order: Vec<usize> = (0..subsets.len()).filter(|&i| !dets[i].is_zero()).collect();
    order.sort_by_key(|&i| (dets[i].as_constant().is_none(), dets[i].degree().unwrap_or(0)));
    let subsets_sorted: Vec<(Vec<usize>, Poly)> = order.iter().map(|&i| (subsets[i].clone(), dets[i].clone())).collect();
    subsets.clear();
    'outer: for (cols, det) in subsets_sorted {
        let b: Vec<Vec<Poly>> = jac.iter().map(|row| cols.iter().map(|&c| row[c].clone()).collect()).collect();
        // adj(B)[i][j] = (-1)^{i+j} det(minor(B, j, i))
        let adj: Vec<Vec<Poly>> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let d = det_poly(&minor(&b, j, i), n);
                        if (i + j) % 2 == 0 {
                            d
                        } else {
                            d.neg()
                        }
                    })
                    .collect()
            })
            .collect();
        let mut frame = Vec::new();
        for k in (0..n).filter(|k| !cols.contains(k)) {
            let mut comps = vec![Poly::zero(n); n];
            comps[k] = Poly::one(n);
            for (i, &ci) in cols.iter().enumerate() {
                let mut num = Poly::zero(n);
                for (j, row) in jac.iter().enumerate() {
                    num = num.add(&adj[i][j].mul(&row[k]));
                }
                match num.exact_div(&det) {
                    Some(q) => comps[ci] = q.neg(),
                    None => continue 'outer,
                }
            }
            frame.push(VectorField::from_polys(&f.source, &comps));
        }
        return Ok(frame);
    }
    Err(ChartError::CannotAutoCompute)
}

/// Frame of `ker df`, verified symbolically and by pointwise rank at samples.
pub fn submersion_kernel_frame(
    f: &SmoothMap,
    frame: Option<Vec<VectorField>>,
    samples: usize,
    rng: &mut SampleRng,
) -> Result<Vec<VectorField>, ChartError> {
    check_submersion(f, samples, rng)?;
    let frame = match frame {
        Some(fr) => fr,
        None => return auto_kernel_frame(f),
    };
    for (index, x) in frame.iter().enumerate() {
        for c in f.push_components(x)? {
            let c = c.simplify();
            let zero = match Poly::from_expr(&c, &f.source.vars) {
                Ok(p) => p.is_zero(),
                Err(_) => c.is_zero_const(),
            };
            if !zero {
                return Err(ChartError::FrameInvalid {
                    index,
                    residual: c.to_string(),
                });
            }
        }
    }
    let expected = f.source.dim() - f.target.dim();
    let compiled: Vec<CompiledVec> = frame.iter().map(|x| x.compile()).collect::<Result<_, _>>()?;
    for _ in 0..samples {
        let x = f.source.sample(rng);
        let n = f.source.dim();
        let mut mat = DMatrix::zeros(n, frame.len());
        for (j, c) in compiled.iter().enumerate() {
            for (i, v) in c.eval(&x).into_iter().enumerate() {
                mat[(i, j)] = v;
            }
        }
        if frame.len() != expected || rank_f64(&mat) < expected {
            return Err(ChartError::FrameRankDeficient { expected, point: x });
        }
    }
    Ok(frame)
}

#[derive(Clone, Debug, PartialEq)]
pub struct VfModule {
    chart: Chart,
    gens: Vec<VectorField>,
    pub degree_bound: u32,
}

impl VfModule {
    pub fn new(chart: &Chart, gens: Vec<VectorField>, degree_bound: u32) -> Result<VfModule, ChartError> {
        for g in &gens {
            chart.same(&g.chart)?;
        }
        Ok(VfModule {
            chart: chart.clone(),
            gens,
            degree_bound: degree_bound.max(1),
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn generators(&self) -> &[VectorField] {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    fn gen_polys(&self) -> Result<Vec<Vec<Poly>>, NotPolynomial> {
        self.gens.iter().map(VectorField::to_polys).collect()
    }
}

/// Unknowns are the coefficients of `g_i` on monomials of degree at most `deg`;
/// rows are indexed by (output component, monomial).
fn combination_equations(
    gens: &[Vec<Poly>],
    nvars: usize,
    deg: u32,
) -> (Vec<Monomial>, BTreeMap<(usize, Monomial), Vec<(usize, Rational)>>) {
    let basis = monomials_up_to(nvars, deg);
    let nb = basis.len();
    let mut rows: BTreeMap<(usize, Monomial), Vec<(usize, Rational)>> = BTreeMap::new();
    for (i, g) in gens.iter().enumerate() {
        for (bi, mu) in basis.iter().enumerate() {
            let unknown = i * nb + bi;
            for (k, comp) in g.iter().enumerate() {
                for (m, c) in comp.terms() {
                    rows.entry((k, mu.mul(m))).or_default().push((unknown, c.clone()));
                }
            }
        }
    }
    (basis, rows)
}

fn assemble(basis: &[Monomial], coeffs: &[Rational], i: usize, nvars: usize) -> Poly {
    let nb = basis.len();
    let mut p = Poly::zero(nvars);
    for (bi, mu) in basis.iter().enumerate() {
        let c = &coeffs[i * nb + bi];
        if !c.is_zero() {
            p = p.add(&Poly::monomial(nvars, mu.clone(), c.clone()));
        }
    }
    p
}

#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    /// Coefficients `g_i` with `X = Σ g_i X_i`.
    Member(Vec<Expr>),
    /// No polynomial combination with coefficients of degree at most the bound.
    NotMember { degree_bound: u32 },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }
}

/// Coefficients `g` of degree at most `deg` with `target = Σ gᵢ gensᵢ`, for polynomial vectors of any length.
pub fn vector_membership(target: &[Poly], gens: &[Vec<Poly>], nvars: usize, deg: u32) -> Option<Vec<Poly>> {
    let (basis, mut rows) = combination_equations(gens, nvars, deg);
    for (k, comp) in target.iter().enumerate() {
        for (m, _) in comp.terms() {
            rows.entry((k, m.clone())).or_default();
        }
    }
    let mut sys = LinearSystem::new(gens.len() * basis.len());
    for ((k, m), entries) in &rows {
        sys.push(entries, target[*k].coeff(m));
    }
    sys.solve()
        .map(|sol| (0..gens.len()).map(|i| assemble(&basis, &sol, i, nvars)).collect())
}

pub fn module_membership(x: &VectorField, module: &VfModule) -> Result<Membership, ChartError> {
    module.chart.same(&x.chart)?;
    let n = module.chart.dim();
    let target = x.to_polys()?;
    let gens = module.gen_polys()?;
    let d = module.degree_bound;
    Ok(match vector_membership(&target, &gens, n, d) {
        Some(coeffs) => Membership::Member(coeffs.iter().map(|p| p.to_expr(module.chart.vars())).collect()),
        None => Membership::NotMember { degree_bound: d },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Involutivity {
    Involutive,
    NotInvolutive {
        i: usize,
        j: usize,
        bracket: VectorField,
        degree_bound: u32,
    },
}

pub fn involutivity_check(module: &VfModule) -> Result<Involutivity, ChartError> {
    let g = &module.gens;
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            let b = lie_bracket(&g[i], &g[j])?;
            if let Membership::NotMember { degree_bound } = module_membership(&b, module)? {
                return Ok(Involutivity::NotInvolutive {
                    i,
                    j,
                    bracket: b,
                    degree_bound,
                });
            }
        }
    }
    Ok(Involutivity::Involutive)
}

/// Basis of polynomial syzygies `Σ g_i X_i = 0` with `deg g_i ≤ deg`, as coefficient tuples.
pub fn syzygies(gens: &[Vec<Poly>], nvars: usize, deg: u32) -> Vec<Vec<Poly>> {
    let (basis, rows) = combination_equations(gens, nvars, deg);
    let mut ech = Echelon::new(gens.len() * basis.len());
    for entries in rows.values() {
        ech.insert(entries);
    }
    ech.nullspace()
        .into_iter()
        .map(|v| (0..gens.len()).map(|i| assemble(&basis, &v, i, nvars)).collect())
        .collect()
}

/// Dimension of `{g(x) : g a syzygy of degree at most deg}`.
pub fn relation_space_dim(gens: &[Vec<Poly>], nvars: usize, deg: u32, x: &[Rational]) -> usize {
    let vals: Vec<Vec<Rational>> = syzygies(gens, nvars, deg)
        .iter()
        .map(|g| g.iter().map(|p| p.eval_exact(x)).collect())
        .collect();
    rank_exact(&vals)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberReport {
    pub point: Vec<Rational>,
    pub dim_fx: usize,
    pub dim_txl: usize,
    pub dim_gx: usize,
    pub degree_bound: u32,
}

pub fn fiber_data(module: &VfModule, x: &[Rational]) -> Result<FiberReport, ChartError> {
    let n = module.chart.dim();
    if x.len() != n {
        return Err(EvalError::DimensionMismatch {
            expected: n,
            got: x.len(),
        }
        .into());
    }
    let gens = module.gen_polys()?;
    let values: Vec<Vec<Rational>> = gens
        .iter()
        .map(|g| g.iter().map(|p| p.eval_exact(x)).collect())
        .collect();
    let dim_txl = rank_exact(&values);
    let rel = relation_space_dim(&gens, n, module.degree_bound, x);
    let dim_fx = gens.len() - rel;
    Ok(FiberReport {
        point: x.to_vec(),
        dim_fx,
        dim_txl,
        dim_gx: dim_fx - dim_txl,
        degree_bound: module.degree_bound,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Projection {
    Projects(VectorField),
    NotProjectable { component: usize, degree_bound: u32 },
}

/// Decide whether `df∘X` factors through `f` by polynomials in the components of `f`.
pub fn projectable(x: &VectorField, f: &SmoothMap, degree_bound: u32) -> Result<Projection, ChartError> {
    let n = f.source.dim();
    let m = f.target.dim();
    let fpolys: Vec<Poly> = f
        .comps
        .iter()
        .map(|c| Poly::from_expr(c, &f.source.vars))
        .collect::<Result<_, _>>()?;
    let pushed: Vec<Poly> = f
        .push_components(x)?
        .iter()
        .map(|c| Poly::from_expr(c, &f.source.vars))
        .collect::<Result<_, _>>()?;
    let min_deg = fpolys.iter().filter_map(|p| p.degree()).filter(|&d| d > 0).min().unwrap_or(1);
    let max_needed = pushed.iter().filter_map(|p| p.degree()).max().unwrap_or(0);
    let deg = degree_bound.min(max_needed.div_ceil(min_deg) + 1);
    let basis = monomials_up_to(m, deg);
    let pulled: Vec<Poly> = basis.iter().map(|beta| {
        let mut p = Poly::one(n);
        for (i, &e) in beta.0.iter().enumerate() {
            if e > 0 {
                p = p.mul(&fpolys[i].pow(e));
            }
        }
        p
    }).collect();
    let mut comps = Vec::with_capacity(m);
    for (k, target) in pushed.iter().enumerate() {
        if target.is_zero() {
            comps.push(Poly::zero(m));
            continue;
        }
        let mut rows: BTreeMap<Monomial, Vec<(usize, Rational)>> = BTreeMap::new();
        for (bi, p) in pulled.iter().enumerate() {
            for (mono, c) in p.terms() {
                rows.entry(mono.clone()).or_default().push((bi, c.clone()));
            }
        }
        for (mono, _) in target.terms() {
            rows.entry(mono.clone()).or_default();
        }
        let mut sys = LinearSystem::new(basis.len());
        for (mono, entries) in &rows {
            sys.push(entries, target.coeff(mono));
        }
        match sys.solve() {
            Some(sol) => {
                let mut y = Poly::zero(m);
                for (bi, beta) in basis.iter().enumerate() {
                    if !sol[bi].is_zero() {
                        y = y.add(&Poly::monomial(m, beta.clone(), sol[bi].clone()));
                    }
                }
                comps.push(y);
            }
            None if max_needed > degree_bound * min_deg => {
                return Err(ChartError::CannotDecide { degree_bound });
            }
            None => {
                return Ok(Projection::NotProjectable {
                    component: k,
                    degree_bound,
                })
            }
        }
    }
    Ok(Projection::Projects(VectorField::from_polys(&f.target, &comps)))
}

/// Rank of the generator values at a float point.
pub fn pointwise_rank(fields: &[CompiledVec], n: usize, x: &[f64]) -> usize {
    rank_f64(&values_matrix(fields, n, x))
}

/// `n×k` matrix whose columns are the field values at `x`.
pub fn values_matrix(fields: &[CompiledVec], n: usize, x: &[f64]) -> DMatrix<f64> {
    let mut mat = DMatrix::zeros(n, fields.len());
    for (j, c) in fields.iter().enumerate() {
        for (i, v) in c.eval(x).into_iter().enumerate() {
            mat[(i, j)] = v;
        }
    }
    mat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{int, parse_expr};

    fn field(chart: &Chart, comps: &[&str]) -> VectorField {
        let c = comps.iter().map(|s| parse_expr(s, chart.vars()).unwrap()).collect();
        VectorField::new(chart, c).unwrap()
    }

    #[test]
    fn bracket_with_cubic_derivative() {
        let c = Chart::new("R2", &["x", "y"]).unwrap();
        let b = lie_bracket(&field(&c, &["1", "0"]), &field(&c, &["0", "3*x^2"])).unwrap();
        assert_eq!(b, field(&c, &["0", "6*x"]));
        assert_eq!(b.to_string(), "6*x∂y");
    }

    #[test]
    fn kernel_frames() {
        let c = Chart::new("R2", &["x", "y"]).unwrap();
        let m = Chart::new("R", &["u"]).unwrap();
        let mut r = sampling::rng(0);
        let t = SmoothMap::new(&c, &m, vec![parse_expr("x^3 - y", c.vars()).unwrap()]).unwrap();
        let fr = submersion_kernel_frame(&t, None, 10, &mut r).unwrap();
        assert_eq!(fr, vec![field(&c, &["1", "3*x^2"])]);
        let s = SmoothMap::new(&c, &m, vec![Expr::var("y")]).unwrap();
        let fr = submersion_kernel_frame(&s, None, 10, &mut r).unwrap();
        assert_eq!(fr, vec![field(&c, &["1", "0"])]);
    }

    #[test]
    fn fiber_of_sl2_fields() {
        let c = Chart::new("R2", &["x", "y"]).unwrap();
        let gens = vec![field(&c, &["y", "0"]), field(&c, &["0", "x"]), field(&c, &["x", "-y"])];
        let m = VfModule::new(&c, gens, 4).unwrap();
        let r = fiber_data(&m, &[int(1), int(0)]).unwrap();
        assert_eq!((r.dim_fx, r.dim_txl, r.dim_gx), (2, 2, 0));
        let r = fiber_data(&m, &[int(0), int(0)]).unwrap();
        assert_eq!((r.dim_fx, r.dim_txl, r.dim_gx), (3, 0, 3));
    }

    #[test]
    fn projection_of_euler_field() {
        let c = Chart::new("R2", &["x", "y"]).unwrap();
        let m = Chart::new("R", &["u"]).unwrap();
        let f = SmoothMap::new(&c, &m, vec![Expr::var("x")]).unwrap();
        match projectable(&field(&c, &["x", "0"]), &f, 8).unwrap() {
            Projection::Projects(y) => assert_eq!(y.to_string(), "u∂u"),
            other => panic!("{other:?}"),
        }
    }
}
