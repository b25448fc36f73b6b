//! Lie algebroids over a chart: anchor, structure functions, kernel module,
//! fiber dimensions and the splitting bracket.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::charts::{
    fiber_data, lie_bracket, relation_space_dim, syzygies, vector_membership, Chart, ChartError, VectorField,
    VfModule,
};
use crate::expr::{from_f64, int, rat, to_f64, Expr, NotPolynomial, Poly, Rational};

pub const SPLIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebroidError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    NotPolynomial(#[from] NotPolynomial),
    #[error("anchor has {got} rows, chart has dimension {expected}")]
    AnchorShape { expected: usize, got: usize },
    #[error("structure functions must be an r×r×r table with r = {rank}")]
    StructureShape { rank: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Anchor `ρ` (column `i` is `ρ(eᵢ)`) and structure functions `[eᵢ, eⱼ] = Σ c[i][j][k] e_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Algebroid {
    pub name: String,
    chart: Chart,
    frame: Vec<String>,
    anchor: Vec<VectorField>,
    structure: Vec<Vec<Vec<Expr>>>,
    pub degree_bound: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantReport {
    pub anchor_compatible: bool,
    pub antisymmetric: bool,
    pub jacobi: bool,
    /// First failing `(i, j)` or `(i, j, l)` as text.
    pub witness: Option<String>,
}

impl InvariantReport {
    pub fn holds(&self) -> bool {
        self.anchor_compatible && self.antisymmetric && self.jacobi
    }
}

fn is_zero_expr(e: &Expr, vars: &[String]) -> bool {
    match Poly::from_expr(e, vars) {
        Ok(p) => p.is_zero(),
        Err(_) => e.simplify().is_zero_const(),
    }
}

impl Algebroid {
    pub fn new(
        name: &str,
        chart: &Chart,
        frame: Vec<String>,
        anchor: Vec<VectorField>,
        structure: Vec<Vec<Vec<Expr>>>,
        degree_bound: u32,
    ) -> Result<Algebroid, AlgebroidError> {
        let r = frame.len();
        if anchor.len() != r {
            return Err(AlgebroidError::DimensionMismatch {
                expected: r,
                got: anchor.len(),
            });
        }
        for a in &anchor {
            if a.chart() != chart {
                return Err(ChartError::ChartMismatch(chart.name.clone(), a.chart().name.clone()).into());
            }
        }
        if structure.len() != r || structure.iter().any(|row| row.len() != r || row.iter().any(|c| c.len() != r)) {
            return Err(AlgebroidError::StructureShape { rank: r });
        }
        Ok(Algebroid {
            name: name.to_string(),
            chart: chart.clone(),
            frame,
            anchor,
            structure,
            degree_bound,
        })
    }

    /// Structure table from a sparse list of `(i, j, k, c)` with `[eᵢ, eⱼ] ∋ c e_k`; antisymmetry is filled in.
    pub fn from_sparse(
        name: &str,
        chart: &Chart,
        frame: Vec<String>,
        anchor: Vec<VectorField>,
        entries: &[(usize, usize, usize, Expr)],
        degree_bound: u32,
    ) -> Result<Algebroid, AlgebroidError> {
        let r = frame.len();
        let mut c = vec![vec![vec![Expr::zero(); r]; r]; r];
        for (i, j, k, e) in entries {
            if *i >= r || *j >= r || *k >= r {
                return Err(AlgebroidError::StructureShape { rank: r });
            }
            c[*i][*j][*k] = e.clone();
            c[*j][*i][*k] = Expr::neg(e.clone()).simplify();
        }
        Algebroid::new(name, chart, frame, anchor, c, degree_bound)
    }

    /// `TM` with the coordinate frame.
    pub fn tangent(n: usize) -> Algebroid {
        let chart = Chart::euclidean("R", n);
        let anchor = (0..n).map(|i| VectorField::coordinate(&chart, i)).collect();
        let frame = (1..=n).map(|i| format!("e{i}")).collect();
        Algebroid::from_sparse("tangent", &chart, frame, anchor, &[], 4).expect("valid tangent algebroid")
    }

    /// Action algebroid of sl(2,R) on R² with anchor columns `y∂x, x∂y, x∂x − y∂y`.
    pub fn sl2_action() -> Algebroid {
        let chart = Chart::new("R2", &["x", "y"]).expect("chart");
        let v = |s: &str| Expr::var(s);
        let f = |a: Expr, b: Expr| VectorField::new(&chart, vec![a, b]).expect("field");
        let anchor = vec![
            f(v("y"), Expr::zero()),
            f(Expr::zero(), v("x")),
            f(v("x"), Expr::neg(v("y"))),
        ];
        let frame = vec!["E".into(), "F".into(), "H".into()];
        let entries = [(0, 1, 2, Expr::int(-1)), (0, 2, 0, Expr::int(2)), (1, 2, 1, Expr::int(-2))];
        Algebroid::from_sparse("sl2_action", &chart, frame, anchor, &entries, 4).expect("valid sl2 algebroid")
    }

    /// Lie-Poisson algebroid of su(2)*: `[eᵢ, eⱼ] = ε_ijk e_k`, anchor `ρ(eᵢ) = Σ ε_ijk x_k ∂_j`.
    pub fn su2_star() -> Algebroid {
        let chart = Chart::new("R3", &["x1", "x2", "x3"]).expect("chart");
        let v = |s: &str| Expr::var(s);
        let z = Expr::zero;
        let f = |a: Expr, b: Expr, c: Expr| VectorField::new(&chart, vec![a, b, c]).expect("field");
        let anchor = vec![
            f(z(), v("x3"), Expr::neg(v("x2"))),
            f(Expr::neg(v("x3")), z(), v("x1")),
            f(v("x2"), Expr::neg(v("x1")), z()),
        ];
        let frame = vec!["e1".into(), "e2".into(), "e3".into()];
        let entries = [(0, 1, 2, Expr::one()), (1, 2, 0, Expr::one()), (2, 0, 1, Expr::one())];
        Algebroid::from_sparse("su2_star", &chart, frame, anchor, &entries, 4).expect("valid su2* algebroid")
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn rank(&self) -> usize {
        self.frame.len()
    }

    pub fn frame(&self) -> &[String] {
        &self.frame
    }

    pub fn anchor(&self) -> &[VectorField] {
        &self.anchor
    }

    pub fn structure(&self) -> &[Vec<Vec<Expr>>] {
        &self.structure
    }

    /// `ρ(Σ σᵢ eᵢ)` for a section with coefficient expressions `σ`.
    pub fn anchor_of(&self, sigma: &[Expr]) -> VectorField {
        let mut out = VectorField::zero(&self.chart);
        for (a, s) in self.anchor.iter().zip(sigma) {
            out = out.add(&a.scale(s)).expect("same chart");
        }
        VectorField::new(&self.chart, out.components().iter().map(Expr::simplify).collect()).expect("same chart")
    }

    /// Value matrix `n×r` of the anchor at a point.
    pub fn anchor_matrix(&self, x: &[f64]) -> Result<DMatrix<f64>, ChartError> {
        let n = self.chart.dim();
        let cols: Vec<Vec<f64>> = self.anchor.iter().map(|a| a.eval_f64(x)).collect::<Result<_, _>>()?;
        Ok(DMatrix::from_fn(n, self.rank(), |i, j| cols[j][i]))
    }

    /// Structure constants `c[i][j][k]` evaluated at a point.
    pub fn structure_at(&self, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>, ChartError> {
        let vars = self.chart.vars();
        let point = crate::expr::Point::Float(x.to_vec());
        self.structure
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| {
                        c.iter()
                            .map(|e| {
                                crate::expr::eval_at(e, vars, &point)
                                    .map(|v| v.to_f64())
                                    .map_err(ChartError::from)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Anchor compatibility, antisymmetry and the Jacobi identity with Leibniz terms, symbolically.
    pub fn check_invariants(&self) -> Result<InvariantReport, AlgebroidError> {
        let r = self.rank();
        let vars = self.chart.vars();
        let c = &self.structure;
        let mut report = InvariantReport {
            anchor_compatible: true,
            antisymmetric: true,
            jacobi: true,
            witness: None,
        };
        for i in 0..r {
            for j in 0..r {
                for k in 0..r {
                    let sum = Expr::add(c[i][j][k].clone(), c[j][i][k].clone());
                    if !is_zero_expr(&sum, vars) && report.antisymmetric {
                        report.antisymmetric = false;
                        report.witness.get_or_insert(format!("c[{i}][{j}][{k}] + c[{j}][{i}][{k}] != 0"));
                    }
                }
                if i < j {
                    let lhs = lie_bracket(&self.anchor[i], &self.anchor[j])?;
                    let rhs = self.anchor_of(&c[i][j]);
                    let diff = lhs.sub(&rhs)?;
                    if !diff.components().iter().all(|e| is_zero_expr(e, vars)) && report.anchor_compatible {
                        report.anchor_compatible = false;
                        report.witness.get_or_insert(format!("[ρ(e{}), ρ(e{})] != ρ([e{}, e{}])", i + 1, j + 1, i + 1, j + 1));
                    }
                }
            }
        }
        // [[eᵢ,eⱼ],e_l] = Σ_k (c_ij^k c_kl^m − ρ(e_l)(c_ij^m)) e_m, summed cyclically.
        let double = |i: usize, j: usize, l: usize, m: usize| -> Expr {
            let mut acc = Expr::neg(self.anchor[l].apply_to(&c[i][j][m]));
            for k in 0..r {
                acc = Expr::add(acc, Expr::mul(c[i][j][k].clone(), c[k][l][m].clone()));
            }
            acc
        };
        'outer: for i in 0..r {
            for j in i + 1..r {
                for l in j + 1..r {
                    for m in 0..r {
                        let e = Expr::add(Expr::add(double(i, j, l, m), double(j, l, i, m)), double(l, i, j, m));
                        if !is_zero_expr(&e, vars) {
                            report.jacobi = false;
                            report.witness.get_or_insert(format!("Jacobi fails for (e{}, e{}, e{})", i + 1, j + 1, l + 1));
                            break 'outer;
                        }
                    }
                }
            }
        }
        Ok(report)
    }

    fn anchor_polys(&self) -> Result<Vec<Vec<Poly>>, NotPolynomial> {
        self.anchor.iter().map(VectorField::to_polys).collect()
    }
}

/// Generators of `ℱ`: the anchor columns.
pub fn induced_foliation(a: &Algebroid) -> VfModule {
    VfModule::new(&a.chart, a.anchor.clone(), a.degree_bound).expect("anchor columns live on the chart")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointDims {
    pub point: Vec<String>,
    pub seq_dim: usize,
    pub module_fiber_dim: usize,
    pub dim_fx: usize,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelModuleReport {
    /// Sections `σ` with `ρ(σ) = 0`, as coefficient polynomials in the frame.
    pub generators: Vec<Vec<Poly>>,
    pub degree_bound: u32,
    /// Minimality holds only up to the degree bound.
    pub minimal_up_to_degree: bool,
    pub table: Vec<PointDims>,
}

impl KernelModuleReport {
    pub fn generator_exprs(&self, vars: &[String]) -> Vec<Vec<Expr>> {
        self.generators.iter().map(|g| g.iter().map(|p| p.to_expr(vars)).collect()).collect()
    }
}

fn poly_vec_degree(v: &[Poly]) -> u32 {
    v.iter().filter_map(Poly::degree).max().unwrap_or(0)
}

/// Normalize so the leading coefficient of the first nonzero component is 1.
fn normalize(v: Vec<Poly>) -> Vec<Poly> {
    let lead = v.iter().find_map(|p| p.terms().next_back().map(|(_, c)| c.clone()));
    match lead {
        Some(c) if !c.is_zero() => v.iter().map(|p| p.scale(&c.recip())).collect(),
        _ => v,
    }
}

/// Polynomial sections of degree at most `deg` in the kernel of the anchor, pruned to module generators.
pub fn kernel_module(a: &Algebroid, deg: u32, points: &[Vec<Rational>]) -> Result<KernelModuleReport, AlgebroidError> {
    let n = a.chart.dim();
    let cols = a.anchor_polys()?;
    let mut basis = syzygies(&cols, n, deg);
    basis.sort_by_key(|v| poly_vec_degree(v));
    let mut gens: Vec<Vec<Poly>> = Vec::new();
    for v in basis {
        if v.iter().all(Poly::is_zero) {
            continue;
        }
        if gens.is_empty() || vector_membership(&v, &gens, n, deg).is_none() {
            gens.push(normalize(v));
        }
    }
    let mut report = KernelModuleReport {
        generators: gens,
        degree_bound: deg,
        minimal_up_to_degree: true,
        table: Vec::new(),
    };
    for x in points {
        report.table.push(point_dims(a, &report, x)?);
    }
    Ok(report)
}

fn point_dims(a: &Algebroid, k: &KernelModuleReport, x: &[Rational]) -> Result<PointDims, AlgebroidError> {
    let fol = induced_foliation(a);
    let fiber = fiber_data(&fol, x)?;
    let n = a.chart.dim();
    let rel = if k.generators.is_empty() {
        0
    } else {
        relation_space_dim(&k.generators, n, k.degree_bound, x)
    };
    Ok(PointDims {
        point: x.iter().map(|q| q.to_string()).collect(),
        seq_dim: a.rank() - fiber.dim_fx,
        module_fiber_dim: k.generators.len() - rel,
        dim_fx: fiber.dim_fx,
        rank: a.rank(),
    })
}

/// `(seq_dim, module_fiber_dim)`: `r − dim ℱ_x` and the fiber dimension of the kernel module at `x`.
pub fn hx_dimensions(a: &Algebroid, x: &[Rational]) -> Result<(usize, usize), AlgebroidError> {
    let k = kernel_module(a, a.degree_bound, &[])?;
    let d = point_dims(a, &k, x)?;
    Ok((d.seq_dim, d.module_fiber_dim))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PointClass {
    InMA,
    InMAComplement,
}

pub fn classify_point(a: &Algebroid, x: &[Rational]) -> Result<(PointClass, usize, usize), AlgebroidError> {
    let (seq, module) = hx_dimensions(a, x)?;
    let class = if seq > 0 { PointClass::InMA } else { PointClass::InMAComplement };
    Ok((class, seq, module))
}

/// Relation space `{g(x)}` of the anchor at `x`, the sequence kernel `𝔥_x ⊂ A_x`, as exact row vectors.
pub fn sequence_kernel(a: &Algebroid, x: &[Rational]) -> Result<Vec<Vec<Rational>>, AlgebroidError> {
    let n = a.chart.dim();
    let cols = a.anchor_polys()?;
    let vals: Vec<Vec<Rational>> = syzygies(&cols, n, a.degree_bound)
        .iter()
        .map(|g| g.iter().map(|p| p.eval_exact(x)).collect())
        .collect();
    let mut ech = crate::linalg::Echelon::new(a.rank());
    let mut basis = Vec::new();
    for v in vals {
        if ech.insert_dense(&v) {
            basis.push(v);
        }
    }
    Ok(basis)
}

/// Splitting `A_x = σ(ℱ_x) ⊕ ι(𝔥_x)` by the Euclidean orthogonal complement of `𝔥_x`.
#[derive(Clone, Debug, Serialize)]
pub struct Splitting {
    pub point: Vec<f64>,
    /// `r × dim ℱ_x`; columns are an orthonormal basis of the complement of `𝔥_x`.
    pub sigma: Vec<Vec<f64>>,
    /// `r × dim 𝔥_x`; columns are an orthonormal basis of `𝔥_x`.
    pub iota: Vec<Vec<f64>>,
    /// `curvature[a][b]` is `R_σ(Xₐ, X_b) ∈ 𝔥_x` in the `ι` basis.
    pub curvature: Vec<Vec<Vec<f64>>>,
    /// Bracket of `𝔥_x`: `h_bracket[a][b]` in the `ι` basis.
    pub h_bracket: Vec<Vec<Vec<f64>>>,
}

fn orthonormal_columns(vs: &[Vec<f64>], r: usize) -> DMatrix<f64> {
    if vs.is_empty() {
        return DMatrix::zeros(r, 0);
    }
    let m = DMatrix::from_fn(r, vs.len(), |i, j| vs[j][i]);
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > SPLIT_TOL * smax.max(1.0))
        .collect();
    DMatrix::from_fn(r, keep.len(), |i, j| u[(i, keep[j])])
}

/// Gram-Schmidt of the coordinate vectors projected off the columns of `iota`, in order.
fn complement_basis(iota: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let mut cols: Vec<DVector<f64>> = Vec::new();
    let want = r - iota.ncols();
    for i in 0..r {
        if cols.len() == want {
            break;
        }
        let mut v = DVector::from_fn(r, |k, _| if k == i { 1.0 } else { 0.0 });
        v -= iota * (iota.transpose() * &v);
        for c in &cols {
            v -= c * c.dot(&v);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    DMatrix::from_fn(r, cols.len(), |i, j| cols[j][i])
}

fn bracket_at(c: &[Vec<Vec<f64>>], a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    let r = c.len();
    let mut out = DVector::zeros(r);
    for i in 0..r {
        for j in 0..r {
            let w = a[i] * b[j];
            if w != 0.0 {
                for k in 0..r {
                    out[k] += w * c[i][j][k];
                }
            }
        }
    }
    out
}

fn cols_to_vecs(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|j| m.column(j).iter().copied().collect()).collect()
}

pub fn splitting(a: &Algebroid, x: &[Rational]) -> Result<Splitting, AlgebroidError> {
    let r = a.rank();
    let h: Vec<Vec<f64>> = sequence_kernel(a, x)?.iter().map(|v| v.iter().map(to_f64).collect()).collect();
    let iota = orthonormal_columns(&h, r);
    let sigma = complement_basis(&iota, r);
    let xf: Vec<f64> = x.iter().map(to_f64).collect();
    let c = a.structure_at(&xf)?;
    let bracket_in_h = |u: &DVector<f64>, v: &DVector<f64>| -> Vec<f64> {
        (iota.transpose() * bracket_at(&c, u, v)).iter().copied().collect()
    };
    let nf = sigma.ncols();
    let nh = iota.ncols();
    let curvature = (0..nf)
        .map(|p| {
            (0..nf)
                .map(|q| {
                    bracket_in_h(&sigma.column(p).into_owned(), &sigma.column(q).into_owned())
                        .into_iter()
                        .map(|v| -v)
                        .collect()
                })
                .collect()
        })
        .collect();
    let h_bracket = (0..nh)
        .map(|p| {
            (0..nh)
                .map(|q| bracket_in_h(&iota.column(p).into_owned(), &iota.column(q).into_owned()))
                .collect()
        })
        .collect();
    Ok(Splitting {
        point: xf,
        sigma: cols_to_vecs(&sigma),
        iota: cols_to_vecs(&iota),
        curvature,
        h_bracket,
    })
}

impl Splitting {
    pub fn dim_f(&self) -> usize {
        self.sigma.len()
    }

    pub fn dim_h(&self) -> usize {
        self.iota.len()
    }

    /// `max |σ⊕ι − orthogonal|` and `|jσ|`, both zero for a valid splitting.
    pub fn defects(&self) -> (f64, f64) {
        let r = self.sigma.first().or(self.iota.first()).map(Vec::len).unwrap_or(0);
        let mut cols = self.sigma.clone();
        cols.extend(self.iota.iter().cloned());
        let m = DMatrix::from_fn(r, cols.len(), |i, j| cols[j][i]);
        let gram = m.transpose() * &m - DMatrix::identity(cols.len(), cols.len());
        let js = if self.iota.is_empty() || self.sigma.is_empty() {
            0.0
        } else {
            let s = DMatrix::from_fn(r, self.sigma.len(), |i, j| self.sigma[j][i]);
            let io = DMatrix::from_fn(r, self.iota.len(), |i, j| self.iota[j][i]);
            (io.transpose() * s).amax()
        };
        let square = if cols.len() == r { 0.0 } else { 1.0 };
        (gram.amax() + square, js)
    }
}

/// Section data `X ⊕ V` on a leaf patch: `X` has `dim ℱ_x` components, `V` has `dim 𝔥_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitElement {
    pub x: Vec<Expr>,
    pub v: Vec<Expr>,
}

/// `[X⊕V, Y⊕W] = [X,Y] ⊕ (X(W) − Y(V) + [V,W] − R_σ(X,Y))` on a patch with coordinates `vars`.
pub fn split_bracket(
    s: &Splitting,
    vars: &[String],
    a: &SplitElement,
    b: &SplitElement,
) -> Result<SplitElement, AlgebroidError> {
    let (nf, nh) = (s.dim_f(), s.dim_h());
    if vars.len() != nf {
        return Err(AlgebroidError::DimensionMismatch {
            expected: nf,
            got: vars.len(),
        });
    }
    for e in [a, b] {
        if e.x.len() != nf || e.v.len() != nh {
            return Err(AlgebroidError::DimensionMismatch {
                expected: nf + nh,
                got: e.x.len() + e.v.len(),
            });
        }
    }
    let deriv = |field: &[Expr], f: &Expr| -> Expr {
        let mut acc = Expr::zero();
        for (c, v) in field.iter().zip(vars) {
            acc = Expr::add(acc, Expr::mul(c.clone(), f.differentiate(v)));
        }
        acc
    };
    let q = |v: f64| Expr::from(from_f64(v).unwrap_or_else(|| rat(0, 1)));
    let x: Vec<Expr> = (0..nf)
        .map(|i| Expr::sub(deriv(&a.x, &b.x[i]), deriv(&b.x, &a.x[i])).simplify())
        .collect();
    let mut v: Vec<Expr> = (0..nh).map(|k| Expr::sub(deriv(&a.x, &b.v[k]), deriv(&b.x, &a.v[k]))).collect();
    for (k, vk) in v.iter_mut().enumerate() {
        for p in 0..nh {
            for r in 0..nh {
                let c = s.h_bracket[p][r][k];
                if c != 0.0 {
                    *vk = Expr::add(vk.clone(), Expr::mul(q(c), Expr::mul(a.v[p].clone(), b.v[r].clone())));
                }
            }
        }
        for p in 0..nf {
            for r in 0..nf {
                let c = s.curvature[p][r][k];
                if c != 0.0 {
                    *vk = Expr::sub(vk.clone(), Expr::mul(q(c), Expr::mul(a.x[p].clone(), b.x[r].clone())));
                }
            }
        }
        *vk = vk.simplify();
    }
    Ok(SplitElement { x, v })
}

/// Consistency row `seq_dim + dim ℱ_x = r`.
pub fn dimension_line(d: &PointDims) -> String {
    format!(
        "seq_dim {} + dim F_x {} = rank {}{}",
        d.seq_dim,
        d.dim_fx,
        d.rank,
        if d.seq_dim != d.module_fiber_dim {
            format!(" (module fiber dimension {} differs from seq_dim)", d.module_fiber_dim)
        } else {
            String::new()
        }
    )
}

/// Exact origin of `Rⁿ`.
pub fn origin(n: usize) -> Vec<Rational> {
    vec![int(0); n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_invariants_hold() {
        for a in [Algebroid::tangent(2), Algebroid::sl2_action(), Algebroid::su2_star()] {
            let rep = a.check_invariants().unwrap();
            assert!(rep.holds(), "{}: {rep:?}", a.name);
        }
    }

    #[test]
    fn broken_anchor_is_caught() {
        let a = Algebroid::sl2_action();
        let flipped: Vec<Vec<Vec<Expr>>> = a
            .structure()
            .iter()
            .map(|r| r.iter().map(|c| c.iter().map(|e| Expr::neg(e.clone()).simplify()).collect()).collect())
            .collect();
        let b = Algebroid::new("bad", a.chart(), a.frame().to_vec(), a.anchor().to_vec(), flipped, 4).unwrap();
        assert!(!b.check_invariants().unwrap().anchor_compatible);
    }

    #[test]
    fn sl2_kernel_generator() {
        let a = Algebroid::sl2_action();
        let k = kernel_module(&a, 4, &[]).unwrap();
        assert_eq!(k.generators.len(), 1);
        let g: Vec<String> = k.generator_exprs(a.chart().vars())[0].iter().map(|e| e.to_string()).collect();
        assert_eq!(g, vec!["x^2", "-y^2", "-x*y"]);
    }

    #[test]
    fn sl2_dims() {
        let a = Algebroid::sl2_action();
        assert_eq!(hx_dimensions(&a, &[int(1), int(0)]).unwrap(), (1, 1));
        assert_eq!(hx_dimensions(&a, &origin(2)).unwrap(), (0, 1));
        assert_eq!(classify_point(&a, &origin(2)).unwrap().0, PointClass::InMAComplement);
    }

    #[test]
    fn splitting_is_orthogonal() {
        let a = Algebroid::su2_star();
        let s = splitting(&a, &[int(1), int(0), int(0)]).unwrap();
        assert_eq!((s.dim_f(), s.dim_h()), (2, 1));
        let (d, js) = s.defects();
        assert!(d < 1e-12 && js < 1e-12);
    }
}
