//! The foliation route: involutivity of `Γ(ker ds) + Γ(ker dt)` and the induced
//! foliations on the two bases.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{BiSubmersion, BisubmError};
use crate::charts::{
    involutivity_check, module_membership, projectable, ChartError, Involutivity, Projection, SmoothMap,
    VectorField, VfModule,
};
use crate::flows::FlowError;
use crate::linalg::span_residual;
use crate::sampling;

pub const BRACKET_FD_STEP: f64 = 1e-4;
pub const NUMERIC_SPAN_TOL: f64 = 1e-5;
const NUMERIC_SAMPLES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FoliationRoute {
    Exact,
    Numeric,
}

/// Projectability of one kernel frame field along the opposite map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionLine {
    /// `"ker ds -> N"` (pushed by `t`) or `"ker dt -> M"` (pushed by `s`).
    pub side: String,
    pub index: usize,
    pub projects: bool,
    pub image: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FoliationReport {
    pub route: FoliationRoute,
    pub passed: bool,
    pub involutive: bool,
    pub witness: Option<String>,
    pub projections: Vec<ProjectionLine>,
    /// Generators of the induced foliation on `M` (from `ker dt`).
    pub induced_m: Vec<String>,
    /// Generators of the induced foliation on `N` (from `ker ds`).
    pub induced_n: Vec<String>,
    /// Agreement of the induced foliations with the generating module, when known.
    pub induced_match: Option<bool>,
    pub max_bracket_residual: Option<f64>,
    pub degree_bound: u32,
}

fn mutual_membership(a: &[VectorField], module: &VfModule) -> Result<bool, ChartError> {
    let chart = module.chart();
    if a.iter().any(|x| x.chart() != chart) {
        return Ok(false);
    }
    let other = VfModule::new(chart, a.to_vec(), module.degree_bound)?;
    for x in a {
        if !module_membership(x, module)?.is_member() {
            return Ok(false);
        }
    }
    for g in module.generators() {
        if !module_membership(g, &other)?.is_member() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn project_all(
    frame: &[VectorField],
    map: &SmoothMap,
    side: &str,
    degree_bound: u32,
) -> Result<(Vec<ProjectionLine>, Vec<VectorField>), ChartError> {
    let mut lines = Vec::new();
    let mut images = Vec::new();
    for (index, x) in frame.iter().enumerate() {
        let p = match projectable(x, map, degree_bound) {
            Ok(p) => p,
            Err(ChartError::CannotDecide { .. }) => Projection::NotProjectable {
                component: 0,
                degree_bound,
            },
            Err(e) => return Err(e),
        };
        match p {
            Projection::Projects(y) => {
                lines.push(ProjectionLine {
                    side: side.to_string(),
                    index,
                    projects: true,
                    image: Some(y.to_string()),
                });
                if !y.is_zero().unwrap_or(false) {
                    images.push(y);
                }
            }
            Projection::NotProjectable { .. } => lines.push(ProjectionLine {
                side: side.to_string(),
                index,
                projects: false,
                image: None,
            }),
        }
    }
    Ok((lines, images))
}

fn exact_route(b: &BiSubmersion) -> Result<FoliationReport, ChartError> {
    let (s, t) = b.maps().ok_or(ChartError::CannotAutoCompute)?;
    let (ks, kt) = b.frames().ok_or(ChartError::CannotAutoCompute)?;
    let d = b.degree_bound;
    let mut all = ks.to_vec();
    all.extend_from_slice(kt);
    let module = VfModule::new(&b.chart, all, d)?;
    let (involutive, witness) = match involutivity_check(&module)? {
        Involutivity::Involutive => (true, None),
        Involutivity::NotInvolutive { bracket, .. } => (false, Some(bracket.to_string())),
    };
    let (mut projections, on_n) = project_all(ks, t, "ker ds -> N", d)?;
    let (more, on_m) = project_all(kt, s, "ker dt -> M", d)?;
    projections.extend(more);
    let induced_match = match &b.module {
        Some(m) => Some(mutual_membership(&on_m, m)? && mutual_membership(&on_n, m)?),
        None => None,
    };
    Ok(FoliationReport {
        route: FoliationRoute::Exact,
        passed: involutive,
        involutive,
        witness,
        projections,
        induced_m: on_m.iter().map(|x| x.to_string()).collect(),
        induced_n: on_n.iter().map(|x| x.to_string()).collect(),
        induced_match,
        max_bracket_residual: None,
        degree_bound: d,
    })
}

fn frame_values(b: &BiSubmersion, u: &[f64]) -> Result<Vec<Vec<f64>>, FlowError> {
    let (a, c) = b.frame_sizes();
    let mut out = Vec::with_capacity(a + c);
    for j in 0..a {
        out.push(b.frame_value(true, j, u)?);
    }
    for j in 0..c {
        out.push(b.frame_value(false, j, u)?);
    }
    Ok(out)
}

fn columns(vs: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, vs.len(), |i, j| vs[j][i])
}

/// Largest span residual of the induced distribution against the module at `x`, both ways.
fn span_mismatch(images: &DMatrix<f64>, module: &VfModule, x: &[f64]) -> Result<f64, ChartError> {
    let n = module.chart().dim();
    let gens: Vec<Vec<f64>> = module
        .generators()
        .iter()
        .map(|g| g.eval_f64(x))
        .collect::<Result<_, _>>()?;
    let g = columns(&gens, n);
    let mut worst: f64 = 0.0;
    for j in 0..g.ncols() {
        worst = worst.max(span_residual(images, &g.column(j).into_owned()));
    }
    for j in 0..images.ncols() {
        worst = worst.max(span_residual(&g, &images.column(j).into_owned()));
    }
    Ok(worst)
}

fn numeric_route(b: &BiSubmersion) -> Result<FoliationReport, BisubmError> {
    let dim = b.dim();
    let (na, _) = b.frame_sizes();
    let mut rng = sampling::rng(b.seed);
    let center: Vec<f64> = match b.path_holonomy() {
        Some(ph) => {
            let mut c = ph.point.clone();
            c.resize(dim, 0.0);
            c
        }
        None => {
            let (lo, hi) = b.chart.bounds_f64();
            lo.iter().zip(&hi).map(|(a, c)| (a + c) / 2.0).collect()
        }
    };
    let r = b.path_holonomy().map(|p| p.radius / 2.0).unwrap_or(0.25);
    let eps = BRACKET_FD_STEP;
    let mut max_res: f64 = 0.0;
    let mut max_induced: f64 = 0.0;
    let mut witness = None;
    for _ in 0..NUMERIC_SAMPLES {
        let du = sampling::uniform_ball(&mut rng, dim, r);
        let u: Vec<f64> = center.iter().zip(&du).map(|(a, c)| a + c).collect();
        let vals = frame_values(b, &u)?;
        // Column k of jac[f] is the derivative of field f along e_k.
        let mut jac: Vec<DMatrix<f64>> = vec![DMatrix::zeros(dim, dim); vals.len()];
        for k in 0..dim {
            let mut up = u.clone();
            up[k] += eps;
            let mut um = u.clone();
            um[k] -= eps;
            let vp = frame_values(b, &up)?;
            let vm = frame_values(b, &um)?;
            for f in 0..vals.len() {
                for i in 0..dim {
                    jac[f][(i, k)] = (vp[f][i] - vm[f][i]) / (2.0 * eps);
                }
            }
        }
        let span = columns(&vals, dim);
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                let xi = DVector::from_column_slice(&vals[i]);
                let xj = DVector::from_column_slice(&vals[j]);
                let br = &jac[j] * &xi - &jac[i] * &xj;
                let res = span_residual(&span, &br);
                if res > max_res {
                    max_res = res;
                    if res > NUMERIC_SPAN_TOL {
                        witness = Some(format!("[K{}, K{}] at {:?}", i + 1, j + 1, u));
                    }
                }
            }
        }
        if let Some(m) = &b.module {
            let js = b.s_jacobian(&u)?;
            let jt = b.t_jacobian(&u)?;
            let on_n: Vec<Vec<f64>> = vals[..na].iter().map(|v| (&jt * DVector::from_column_slice(v)).iter().copied().collect()).collect();
            let on_m: Vec<Vec<f64>> = vals[na..].iter().map(|v| (&js * DVector::from_column_slice(v)).iter().copied().collect()).collect();
            let n = m.chart().dim();
            max_induced = max_induced
                .max(span_mismatch(&columns(&on_n, n), m, &b.t_eval(&u)?)?)
                .max(span_mismatch(&columns(&on_m, n), m, &b.s_eval(&u)?)?);
        }
    }
    let involutive = max_res <= NUMERIC_SPAN_TOL;
    let gens: Vec<String> = b
        .module
        .as_ref()
        .map(|m| m.generators().iter().map(|g| g.to_string()).collect())
        .unwrap_or_default();
    Ok(FoliationReport {
        route: FoliationRoute::Numeric,
        passed: involutive,
        involutive,
        witness,
        projections: Vec::new(),
        induced_m: gens.clone(),
        induced_n: gens,
        induced_match: b.module.as_ref().map(|_| max_induced <= NUMERIC_SPAN_TOL),
        max_bracket_residual: Some(max_res),
        degree_bound: b.degree_bound,
    })
}

/// Exact route for polynomial data, numeric finite-difference brackets otherwise.
pub fn verify_foliation_bisubmersion(b: &BiSubmersion) -> Result<FoliationReport, BisubmError> {
    if b.is_symbolic() {
        match exact_route(b) {
            Ok(r) => return Ok(r),
            Err(ChartError::NotPolynomial(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    numeric_route(b)
}
