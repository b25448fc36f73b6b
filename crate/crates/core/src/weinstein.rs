//! A-paths, base-path reconstruction and the bi-submersion `Z = V × Bⁿ × H̃_x`
//! with its map to A-path representatives.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::algebroid::{kernel_module, splitting, Algebroid, AlgebroidError};
use crate::bisubm::{
    build_path_holonomy, BiSubmersion, BisubmError, GroupKind, GroupModel, PathHolonomyOptions, TripleSpace,
};
use crate::charts::{ChartError, VfModule};
use crate::expr::{from_f64, rat, to_f64, CompiledVec, Expr, Rational};
use crate::flows::{CompiledField, Field, FlowError};
use crate::sampling;

pub const DEFAULT_GRID: usize = 256;
pub const APATH_TOL: f64 = 1e-4;
pub const GRAM_TOL: f64 = 1e-8;
pub const COMMUTE_TOL: f64 = 1e-4;
pub const GROUP_RADIUS: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeinsteinError {
    #[error(transparent)]
    Algebroid(#[from] AlgebroidError),
    #[error(transparent)]
    Bisubm(#[from] BisubmError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("path leaves the chart domain at node {node}")]
    DomainExit { node: usize },
    #[error("grid must be uniform on [0, 1] with matching node data")]
    Grid,
    #[error("fiber generators are not orthonormal (Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("group lift of norm {norm} outside the validity ball of radius {radius}")]
    LiftOutsideBall { norm: f64, radius: f64 },
    #[error("representative endpoints miss the bi-submersion by {residual:e}")]
    ResidualFailure { residual: f64 },
    #[error("diagram invariants differ by {mismatch:e} at {witness:?}")]
    InvariantMismatch { mismatch: f64, witness: Vec<f64> },
}

/// A path in `A` on a time grid: base points `γ(tᵢ)` and frame coordinates `a(tᵢ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct APath {
    pub times: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub fiber: Vec<Vec<f64>>,
}

fn uniform_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

impl APath {
    pub fn from_fn(
        grid: usize,
        gamma: impl Fn(f64) -> Vec<f64>,
        fiber: impl Fn(f64) -> Vec<f64>,
    ) -> APath {
        let times = uniform_grid(grid);
        APath {
            gamma: times.iter().map(|&t| gamma(t)).collect(),
            fiber: times.iter().map(|&t| fiber(t)).collect(),
            times,
        }
    }

    pub fn constant(y: &[f64], rank: usize, grid: usize) -> APath {
        APath::from_fn(grid, |_| y.to_vec(), |_| vec![0.0; rank])
    }

    pub fn nodes(&self) -> usize {
        self.times.len()
    }

    pub fn source(&self) -> &[f64] {
        &self.gamma[0]
    }

    pub fn target(&self) -> &[f64] {
        &self.gamma[self.gamma.len() - 1]
    }

    /// `t ↦ α(1 − t)` with negated fiber.
    pub fn inverse(&self) -> APath {
        APath {
            times: self.times.iter().rev().map(|t| 1.0 - t).collect(),
            gamma: self.gamma.iter().rev().cloned().collect(),
            fiber: self.fiber.iter().rev().map(|a| a.iter().map(|v| -v).collect()).collect(),
        }
    }

    /// Traverse `pieces` in order, each on an equal share of `[0, 1]` with rescaled fiber.
    pub fn concat(pieces: &[&APath]) -> APath {
        let p = pieces.len() as f64;
        let mut out = APath {
            times: Vec::new(),
            gamma: Vec::new(),
            fiber: Vec::new(),
        };
        for (i, piece) in pieces.iter().enumerate() {
            for ((t, g), a) in piece.times.iter().zip(&piece.gamma).zip(&piece.fiber) {
                out.times.push((i as f64 + t) / p);
                out.gamma.push(g.clone());
                out.fiber.push(a.iter().map(|v| v * p).collect());
            }
        }
        out
    }

    /// Trapezoid integral of per-node values on the (possibly repeated) time nodes.
    pub fn integrate(&self, values: &[Vec<f64>]) -> Vec<f64> {
        let d = values.first().map(Vec::len).unwrap_or(0);
        let mut acc = vec![0.0; d];
        for i in 1..self.times.len() {
            let dt = self.times[i] - self.times[i - 1];
            for (k, a) in acc.iter_mut().enumerate() {
                *a += 0.5 * dt * (values[i][k] + values[i - 1][k]);
            }
        }
        acc
    }

    /// Rows `t, γ…, a…` with a header line.
    pub fn to_csv(&self) -> String {
        let n = self.gamma.first().map(Vec::len).unwrap_or(0);
        let r = self.fiber.first().map(Vec::len).unwrap_or(0);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("gamma{i}")));
        header.extend((1..=r).map(|i| format!("a{i}")));
        let mut out = header.join(",");
        out.push('\n');
        for i in 0..self.times.len() {
            let mut row = vec![format!("{}", self.times[i])];
            row.extend(self.gamma[i].iter().map(|v| format!("{v}")));
            row.extend(self.fiber[i].iter().map(|v| format!("{v}")));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    fn uniform_step(&self) -> Result<f64, WeinsteinError> {
        let n = self.times.len();
        if n < 5 || self.gamma.len() != n || self.fiber.len() != n {
            return Err(WeinsteinError::Grid);
        }
        let h = 1.0 / (n - 1) as f64;
        let uniform = self
            .times
            .iter()
            .enumerate()
            .all(|(i, t)| (t - i as f64 * h).abs() <= 1e-12);
        if !uniform {
            return Err(WeinsteinError::Grid);
        }
        Ok(h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct APathReport {
    pub residual: f64,
    pub worst_node: usize,
    pub valid: bool,
}

/// Fourth-order derivative of the base path at node `i`.
fn stencil(g: &[Vec<f64>], i: usize, h: f64) -> Vec<f64> {
    let n = g.len() - 1;
    let d = g[0].len();
    let comb = |idx: [usize; 5], w: [f64; 5], sign: f64| -> Vec<f64> {
        (0..d)
            .map(|k| sign * idx.iter().zip(w).map(|(&j, c)| c * g[j][k]).sum::<f64>() / (12.0 * h))
            .collect()
    };
    const EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    match i {
        0 => comb([0, 1, 2, 3, 4], EDGE0, 1.0),
        1 => comb([0, 1, 2, 3, 4], EDGE1, 1.0),
        _ if i == n => comb([n, n - 1, n - 2, n - 3, n - 4], EDGE0, -1.0),
        _ if i == n - 1 => comb([n, n - 1, n - 2, n - 3, n - 4], EDGE1, -1.0),
        _ => comb([i - 2, i - 1, i + 1, i + 2, i], [1.0, -8.0, 8.0, -1.0, 0.0], 1.0),
    }
}

fn residual_from_anchor_values(p: &APath, anchored: &[Vec<f64>]) -> Result<APathReport, WeinsteinError> {
    let h = p.uniform_step()?;
    let mut residual: f64 = 0.0;
    let mut worst_node = 0;
    for (i, v) in anchored.iter().enumerate() {
        let d = stencil(&p.gamma, i, h);
        let r = v.iter().zip(&d).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if r > residual {
            residual = r;
            worst_node = i;
        }
    }
    Ok(APathReport {
        residual,
        worst_node,
        valid: residual <= APATH_TOL,
    })
}

/// `max_i |ρ(γ(tᵢ))·a(tᵢ) − γ′(tᵢ)|` with a five-point derivative stencil.
pub fn check_apath(a: &Algebroid, p: &APath) -> Result<APathReport, WeinsteinError> {
    let image = anchor_image(a, p)?;
    residual_from_anchor_values(p, &image.fiber)
}

/// `ρ∘α` as a path in the tangent algebroid.
pub fn anchor_image(a: &Algebroid, p: &APath) -> Result<APath, WeinsteinError> {
    let n = a.chart().dim();
    if p.gamma.iter().any(|g| g.len() != n) || p.fiber.iter().any(|f| f.len() != a.rank()) {
        return Err(WeinsteinError::Grid);
    }
    if a.chart().domain().is_some() {
        if let Some(node) = p.gamma.iter().position(|g| !a.chart().contains(g)) {
            return Err(WeinsteinError::DomainExit { node });
        }
    }
    let fiber = p
        .gamma
        .iter()
        .zip(&p.fiber)
        .map(|(g, f)| {
            let m = a.anchor_matrix(g)?;
            Ok((m * DVector::from_column_slice(f)).iter().copied().collect())
        })
        .collect::<Result<Vec<Vec<f64>>, ChartError>>()?;
    Ok(APath {
        times: p.times.clone(),
        gamma: p.gamma.clone(),
        fiber,
    })
}

/// Orthonormal frame vectors `μᵢ ∈ R^r` whose anchor images represent a basis of `ℱ_x`.
#[derive(Clone, Debug)]
pub struct FiberFrame {
    pub mu: Vec<Vec<f64>>,
    fields: Vec<Arc<CompiledField>>,
}

fn exact(v: f64) -> Expr {
    Expr::from(from_f64(v).unwrap_or_else(|| rat(0, 1)))
}

impl FiberFrame {
    pub fn new(a: &Algebroid, mu: Vec<Vec<f64>>) -> Result<FiberFrame, WeinsteinError> {
        let k = mu.len();
        let m = DMatrix::from_fn(a.rank(), k, |i, j| mu[j][i]);
        let deviation = (m.transpose() * &m - DMatrix::identity(k, k)).amax();
        if deviation > GRAM_TOL {
            return Err(WeinsteinError::NotOrthonormal { deviation });
        }
        let fields = mu
            .iter()
            .map(|v| {
                let coeffs: Vec<Expr> = v.iter().map(|c| exact(*c)).collect();
                CompiledField::new(&a.anchor_of(&coeffs)).map(Arc::new)
            })
            .collect::<Result<_, _>>()
            .map_err(ChartError::from)?;
        Ok(FiberFrame { mu, fields })
    }

    /// The complement of `𝔥_x` from the orthogonal splitting at `x`.
    pub fn at(a: &Algebroid, x: &[Rational]) -> Result<FiberFrame, WeinsteinError> {
        FiberFrame::new(a, splitting(a, x)?.sigma)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `λᵢ = ⟨a, μᵢ⟩`.
    pub fn coordinates(&self, a: &[f64]) -> Vec<f64> {
        self.mu.iter().map(|m| m.iter().zip(a).map(|(x, y)| x * y).sum()).collect()
    }
}

/// Cubic Lagrange interpolation of node samples on a uniform grid.
fn interpolate(samples: &[Vec<f64>], t: f64) -> Vec<f64> {
    let n = samples.len() - 1;
    let s = (t * n as f64).clamp(0.0, n as f64);
    let start = (s.floor() as isize - 1).clamp(0, n as isize - 3) as usize;
    let d = samples[0].len();
    let mut out = vec![0.0; d];
    for j in 0..4 {
        let mut w = 1.0;
        for m in 0..4 {
            if m != j {
                w *= (s - (start + m) as f64) / (j as f64 - m as f64);
            }
        }
        for (o, v) in out.iter_mut().zip(&samples[start + j]) {
            *o += w * v;
        }
    }
    out
}

/// Integral curve of `Xᵗ = Σ λᵢ(t) ρ(μᵢ)` from `y`, with `λ` sampled on a uniform grid.
pub fn base_path_from_fiber(
    a: &Algebroid,
    frame: &FiberFrame,
    y: &[f64],
    alpha: &[Vec<f64>],
) -> Result<APath, WeinsteinError> {
    let grid = alpha.len().saturating_sub(1);
    if grid < 3 || alpha.iter().any(|l| l.len() != frame.dim()) || y.len() != a.chart().dim() {
        return Err(WeinsteinError::Grid);
    }
    let n = y.len();
    let h = 1.0 / grid as f64;
    let rhs = |t: f64, x: &[f64]| -> Vec<f64> {
        let lam = interpolate(alpha, t);
        let mut out = vec![0.0; n];
        let mut tmp = vec![0.0; n];
        for (l, f) in lam.iter().zip(&frame.fields) {
            f.eval(t, x, &mut tmp);
            for (o, v) in out.iter_mut().zip(&tmp) {
                *o += l * v;
            }
        }
        out
    };
    let axpy = |x: &[f64], c: f64, k: &[f64]| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    let mut gamma = vec![y.to_vec()];
    for i in 0..grid {
        let t = i as f64 * h;
        let x = &gamma[i];
        let k1 = rhs(t, x);
        let k2 = rhs(t + h / 2.0, &axpy(x, h / 2.0, &k1));
        let k3 = rhs(t + h / 2.0, &axpy(x, h / 2.0, &k2));
        let k4 = rhs(t + h, &axpy(x, h, &k3));
        let next: Vec<f64> = (0..n).map(|j| x[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])).collect();
        if next.iter().any(|v| !v.is_finite()) || (a.chart().domain().is_some() && !a.chart().contains(&next)) {
            return Err(WeinsteinError::DomainExit { node: i + 1 });
        }
        gamma.push(next);
    }
    let fiber = alpha
        .iter()
        .map(|lam| {
            let mut f = vec![0.0; a.rank()];
            for (l, m) in lam.iter().zip(&frame.mu) {
                for (o, v) in f.iter_mut().zip(m) {
                    *o += l * v;
                }
            }
            f
        })
        .collect();
    Ok(APath {
        times: uniform_grid(grid),
        gamma,
        fiber,
    })
}

/// Reconstruct the base path of `p` from its fiber coordinates and compare pointwise.
pub fn roundtrip_residual(a: &Algebroid, frame: &FiberFrame, p: &APath) -> Result<f64, WeinsteinError> {
    let alpha: Vec<Vec<f64>> = p.fiber.iter().map(|f| frame.coordinates(f)).collect();
    let rec = base_path_from_fiber(a, frame, p.source(), &alpha)?;
    Ok(rec
        .gamma
        .iter()
        .zip(&p.gamma)
        .map(|(u, v)| u.iter().zip(v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max))
}

/// `Z = V × Bⁿ × H̃_x`: the path-holonomy bi-submersion of `ρ(μ₁), …, ρ(μₙ)` with a group factor.
#[derive(Clone, Debug)]
pub struct ZBisubmersion {
    pub algebroid: Algebroid,
    pub point: Vec<Rational>,
    pub n: usize,
    pub k: usize,
    pub frame: FiberFrame,
    /// Kernel sections `νⱼ` in the frame, nonvanishing at `x`.
    pub nu: Vec<Vec<Expr>>,
    nu_compiled: Vec<CompiledVec>,
    pub group: GroupModel,
    pub bisub: BiSubmersion,
    pub grid: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZSummary {
    pub point: Vec<String>,
    pub n: usize,
    pub k: usize,
    pub abelian: bool,
    pub mu: Vec<Vec<f64>>,
    pub nu: Vec<Vec<String>>,
    pub generators: Vec<String>,
    pub t_depends_on_group: bool,
    pub symbolic_target: bool,
}

/// Assemble `Z` at `x`; `k = r − dim ℱ_x` and the group model is abelian when `𝔥_x` is.
pub fn build_weinstein_bisubmersion(a: &Algebroid, x: &[Rational]) -> Result<ZBisubmersion, WeinsteinError> {
    let split = splitting(a, x)?;
    let k = split.dim_h();
    let vars = a.chart().vars();
    let (frame, module) = if k == 0 {
        let mu = (0..a.rank())
            .map(|i| (0..a.rank()).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let module = VfModule::new(a.chart(), a.anchor().to_vec(), a.degree_bound)?;
        (FiberFrame::new(a, mu)?, module)
    } else {
        let frame = FiberFrame::new(a, split.sigma.clone())?;
        let gens = frame
            .mu
            .iter()
            .map(|m| a.anchor_of(&m.iter().map(|c| exact(*c)).collect::<Vec<_>>()))
            .collect();
        (frame, VfModule::new(a.chart(), gens, a.degree_bound)?)
    };
    let xf: Vec<f64> = x.iter().map(to_f64).collect();
    let kernel = kernel_module(a, a.degree_bound, &[])?;
    let mut nu: Vec<Vec<Expr>> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for g in kernel.generator_exprs(vars) {
        if nu.len() == k {
            break;
        }
        let c = CompiledVec::new(&g, vars).map_err(ChartError::from)?;
        let mut cand = values.clone();
        cand.push(c.eval(&xf));
        let m = DMatrix::from_fn(a.rank(), cand.len(), |i, j| cand[j][i]);
        if crate::linalg::rank_f64(&m) == cand.len() {
            values = cand;
            nu.push(g);
        }
    }
    if nu.len() != k {
        return Err(AlgebroidError::DimensionMismatch {
            expected: k,
            got: nu.len(),
        }
        .into());
    }
    let nu_compiled = nu
        .iter()
        .map(|g| CompiledVec::new(g, vars))
        .collect::<Result<_, _>>()
        .map_err(ChartError::from)?;
    let abelian = split.h_bracket.iter().flatten().flatten().all(|v| v.abs() <= 1e-12);
    let group = if abelian {
        GroupModel::abelian(k, GROUP_RADIUS)
    } else {
        GroupModel {
            kind: GroupKind::Bch(split.h_bracket.clone()),
            radius: GROUP_RADIUS,
        }
    };
    let opts = PathHolonomyOptions {
        group: (k > 0).then(|| group.clone()),
        ..Default::default()
    };
    let bisub = build_path_holonomy(&module, x, &opts)?;
    Ok(ZBisubmersion {
        algebroid: a.clone(),
        point: x.to_vec(),
        n: frame.dim(),
        k,
        frame,
        nu,
        nu_compiled,
        group,
        bisub,
        grid: DEFAULT_GRID,
    })
}

impl ZBisubmersion {
    pub fn summary(&self) -> ZSummary {
        ZSummary {
            point: self.point.iter().map(|q| q.to_string()).collect(),
            n: self.n,
            k: self.k,
            abelian: self.group.is_abelian(),
            mu: self.frame.mu.clone(),
            nu: self.nu.iter().map(|g| g.iter().map(|e| e.to_string()).collect()).collect(),
            generators: self
                .bisub
                .module()
                .map(|m| m.generators().iter().map(|g| g.to_string()).collect())
                .unwrap_or_default(),
            t_depends_on_group: self.bisub.t_depends_on_group(),
            symbolic_target: self.bisub.is_symbolic(),
        }
    }

    fn base_dim(&self) -> usize {
        self.algebroid.chart().dim()
    }

    /// Base point of `Z` over `x` with zero fiber coordinates.
    pub fn base_point(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.point.iter().map(to_f64).collect();
        p.resize(self.bisub.dim(), 0.0);
        p
    }

    /// Coordinates of `a` along `(μ, ν(γ))` by least squares: `(λ, h)`.
    fn decompose(&self, gamma: &[f64], a: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let r = self.algebroid.rank();
        let mut cols: Vec<Vec<f64>> = self.frame.mu.clone();
        cols.extend(self.nu_compiled.iter().map(|c| c.eval(gamma)));
        let m = DMatrix::from_fn(r, cols.len(), |i, j| cols[j][i]);
        let sol = crate::linalg::lstsq(&m, &DVector::from_column_slice(a));
        let sol: Vec<f64> = sol.iter().copied().collect();
        (sol[..self.n].to_vec(), sol[self.n..].to_vec())
    }

    /// `∫ h(t) dt`, the `𝔥`-component of the fiber integrated by the trapezoid rule.
    pub fn holonomy(&self, p: &APath) -> Vec<f64> {
        let hs: Vec<Vec<f64>> = p.gamma.iter().zip(&p.fiber).map(|(g, a)| self.decompose(g, a).1).collect();
        p.integrate(&hs)
    }
}

/// A-path representative of an element of `Z` with its computable invariants.
#[derive(Clone, Debug, Serialize)]
pub struct WeinsteinRep {
    pub path: APath,
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    pub holonomy: Vec<f64>,
    /// `|s(rep) − s_Z(z)| + |t(rep) − t_Z(z)|`.
    pub commutation_residual: f64,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Straight-line lifts `t·λ` and `t·log g`, assembled through the splitting.
pub fn psi_representative(z: &ZBisubmersion, point: &[f64]) -> Result<WeinsteinRep, WeinsteinError> {
    let nb = z.base_dim();
    if point.len() != nb + z.n + z.k {
        return Err(WeinsteinError::Grid);
    }
    let (y, rest) = point.split_at(nb);
    let (lambda, g) = rest.split_at(z.n);
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > z.group.radius {
        return Err(WeinsteinError::LiftOutsideBall {
            norm,
            radius: z.group.radius,
        });
    }
    let alpha = vec![lambda.to_vec(); z.grid + 1];
    let mut path = base_path_from_fiber(&z.algebroid, &z.frame, y, &alpha)?;
    for (gamma, a) in path.gamma.iter().zip(path.fiber.iter_mut()) {
        for (c, nu) in g.iter().zip(&z.nu_compiled) {
            for (o, v) in a.iter_mut().zip(nu.eval(gamma)) {
                *o += c * v;
            }
        }
    }
    let holonomy = z.holonomy(&path);
    let sz = z.bisub.s_eval(point)?;
    let tz = z.bisub.t_eval(point)?;
    let residual = max_abs_diff(path.source(), &sz) + max_abs_diff(path.target(), &tz);
    if residual > COMMUTE_TOL {
        return Err(WeinsteinError::ResidualFailure { residual });
    }
    Ok(WeinsteinRep {
        source: path.source().to_vec(),
        target: path.target().to_vec(),
        holonomy,
        commutation_residual: residual,
        path,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagramReport {
    pub samples: usize,
    pub max_source_mismatch: f64,
    pub max_target_mismatch: f64,
    pub max_holonomy_mismatch: f64,
    pub note: String,
}

impl DiagramReport {
    pub fn max_mismatch(&self) -> f64 {
        self.max_source_mismatch.max(self.max_target_mismatch).max(self.max_holonomy_mismatch)
    }
}

/// Compares invariants of `ψ(φ_Z(w))` with those of the product `r₁ r₂⁻¹ r₃` of representatives.
pub fn diagram_check_weinstein(z: &ZBisubmersion, samples: usize) -> Result<DiagramReport, WeinsteinError> {
    let space = TripleSpace::new(&z.bisub, &z.base_point(), z.bisub.seed)?;
    let mut rng = sampling::rng(z.bisub.seed.wrapping_add(3));
    let mut report = DiagramReport {
        samples,
        max_source_mismatch: 0.0,
        max_target_mismatch: 0.0,
        max_holonomy_mismatch: 0.0,
        note: "equal invariants are necessary for equality in W(A), not sufficient".into(),
    };
    for _ in 0..samples {
        let (xi, u, eta) = space.sample_coords(&mut rng);
        let (solve, w) = space.middle_solve(&xi, &u, &eta)?;
        let reps = [
            psi_representative(z, &w[0])?,
            psi_representative(z, &w[1])?,
            psi_representative(z, &w[2])?,
        ];
        let middle = psi_representative(z, &solve.z)?;
        let inv = reps[1].path.inverse();
        let product = APath::concat(&[&reps[2].path, &inv, &reps[0].path]);
        let s = max_abs_diff(&middle.source, product.source());
        let t = max_abs_diff(&middle.target, product.target());
        let h = if z.group.is_abelian() {
            max_abs_diff(&middle.holonomy, &z.holonomy(&product))
        } else {
            0.0
        };
        report.max_source_mismatch = report.max_source_mismatch.max(s);
        report.max_target_mismatch = report.max_target_mismatch.max(t);
        report.max_holonomy_mismatch = report.max_holonomy_mismatch.max(h);
        let worst = s.max(t).max(h);
        if worst > COMMUTE_TOL {
            let mut witness = xi;
            witness.extend(u);
            witness.extend(eta);
            return Err(WeinsteinError::InvariantMismatch {
                mismatch: worst,
                witness,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::int;

    #[test]
    fn constant_path_is_valid() {
        let a = Algebroid::su2_star();
        let p = APath::constant(&[0.3, 0.1, -0.2], 3, 64);
        assert!(check_apath(&a, &p).unwrap().residual < 1e-12);
    }

    #[test]
    fn translation_base_path() {
        let a = Algebroid::tangent(1);
        let f = FiberFrame::at(&a, &[int(0)]).unwrap();
        let p = base_path_from_fiber(&a, &f, &[0.5], &vec![vec![0.25]; 33]).unwrap();
        assert!((p.target()[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn inverse_negates_holonomy_integral() {
        let p = APath::from_fn(8, |t| vec![t], |t| vec![t * t]);
        let fwd = p.integrate(&p.fiber)[0];
        let q = p.inverse();
        let back = q.integrate(&q.fiber)[0];
        assert!((fwd + back).abs() < 1e-12);
    }
}
