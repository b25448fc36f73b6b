//! Bisections and the local diffeomorphisms they carry.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{BiSubmersion, BisubmError};
use crate::charts::{ChartError, SmoothMap};
use crate::flows::{flow, CompiledField, Combination, FlowError, DEFAULT_STEP};
use crate::linalg::span_residual;
use crate::sampling;

pub const SECTION_TOL: f64 = 1e-8;
pub const CARRY_FD_STEP: f64 = 1e-6;
pub const MIN_DET: f64 = 1e-8;
const SAMPLE_RADIUS: f64 = 0.25;

#[derive(Clone, Debug, PartialEq)]
pub enum Bisection {
    /// `b: M → U` with `s ∘ b = id`.
    Map(SmoothMap),
    /// `{(y, c)}` for a fixed fiber coordinate `c = (λ, g)` of a path-holonomy chart.
    ConstantFiber(Vec<f64>),
}

/// `ϖ = t ∘ b` for the section `b` of `s` parametrizing a bisection.
#[derive(Clone, Debug)]
pub struct CarriedMap {
    bisub: BiSubmersion,
    bisection: Bisection,
    fields: Vec<std::sync::Arc<CompiledField>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CarryReport {
    pub samples: usize,
    /// `max |s(b(x)) − x|`.
    pub section_residual: f64,
    /// Smallest `|det Dϖ|` over the samples.
    pub min_abs_det: f64,
    /// Largest residual of `Dϖ·Xᵢ` against the generators at `ϖ(x)`.
    pub span_residual: Option<f64>,
}

impl CarriedMap {
    /// Point of the bisection over `x`.
    pub fn section(&self, x: &[f64]) -> Result<Vec<f64>, FlowError> {
        match &self.bisection {
            Bisection::Map(b) => Ok(b.eval_f64(x).map_err(ChartError::from)?),
            Bisection::ConstantFiber(c) => {
                let l = self.bisub.layout().expect("constant-fiber bisections need a fiber layout");
                let y = if self.bisub.is_swapped() {
                    // s is the raw target exp(V_λ)(y); invert it by the reversed flow.
                    let neg: Vec<f64> = c[..l.lambda].iter().map(|v| -v).collect();
                    let v = Combination::constant(&self.fields, &neg);
                    flow(&v, x, 0.0, 1.0, DEFAULT_STEP, None)?
                } else {
                    x.to_vec()
                };
                let mut u = y;
                u.extend_from_slice(c);
                Ok(u)
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.bisub.t_eval(&self.section(x)?)
    }

    /// Central finite-difference Jacobian of `ϖ`.
    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, FlowError> {
        let n = x.len();
        let mut cols = Vec::with_capacity(n);
        for k in 0..n {
            let mut xp = x.to_vec();
            xp[k] += CARRY_FD_STEP;
            let mut xm = x.to_vec();
            xm[k] -= CARRY_FD_STEP;
            let fp = self.eval(&xp)?;
            let fm = self.eval(&xm)?;
            cols.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * CARRY_FD_STEP)).collect::<Vec<f64>>());
        }
        let m = cols.first().map(Vec::len).unwrap_or(0);
        Ok(DMatrix::from_fn(m, n, |i, j| cols[j][i]))
    }
}

fn sample_center(b: &BiSubmersion) -> Vec<f64> {
    match b.anchor() {
        Some(p) => p.to_vec(),
        None => {
            let (m, _) = b.base_charts();
            let (lo, hi) = m.bounds_f64();
            lo.iter().zip(&hi).map(|(a, c)| (a + c) / 2.0).collect()
        }
    }
}

/// Carried diffeomorphism of a bisection, checked at sampled base points.
pub fn bisection_carry(
    b: &BiSubmersion,
    bisection: &Bisection,
    samples: usize,
) -> Result<(CarriedMap, CarryReport), BisubmError> {
    let (m_chart, _) = b.base_charts();
    match bisection {
        Bisection::Map(map) => {
            if map.source != m_chart || map.target != b.chart {
                return Err(BisubmError::BisectionInvalid("section must map the source base into U".into()));
            }
        }
        Bisection::ConstantFiber(c) => {
            let l = b
                .layout()
                .ok_or_else(|| BisubmError::BisectionInvalid("no fiber coordinates".into()))?;
            if c.len() != l.lambda + l.group {
                return Err(BisubmError::BisectionInvalid(format!(
                    "fiber point has {} coordinates, expected {}",
                    c.len(),
                    l.lambda + l.group
                )));
            }
            if b.is_swapped() && b.module.is_none() {
                return Err(BisubmError::BisectionInvalid("swapped fiber section needs generators".into()));
            }
        }
    }
    let fields = match &b.module {
        Some(m) => m
            .generators()
            .iter()
            .map(|g| CompiledField::new(g).map(std::sync::Arc::new))
            .collect::<Result<Vec<_>, _>>()
            .map_err(ChartError::from)?,
        None => Vec::new(),
    };
    let carried = CarriedMap {
        bisub: b.clone(),
        bisection: bisection.clone(),
        fields,
    };
    let center = sample_center(b);
    let mut rng = sampling::rng(b.seed);
    let mut section_residual: f64 = 0.0;
    let mut min_abs_det = f64::INFINITY;
    let mut span: Option<f64> = None;
    for _ in 0..samples {
        let d = sampling::uniform_ball(&mut rng, center.len(), SAMPLE_RADIUS / 2.0);
        let x: Vec<f64> = center.iter().zip(&d).map(|(a, c)| a + c).collect();
        let u = carried.section(&x)?;
        let back = b.s_eval(&u)?;
        section_residual = section_residual.max(back.iter().zip(&x).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max));
        let j = carried.jacobian(&x)?;
        let det = if j.is_square() { j.determinant().abs() } else { 0.0 };
        min_abs_det = min_abs_det.min(det);
        if let Some(m) = &b.module {
            let y = carried.eval(&x)?;
            let n = m.chart().dim();
            let at = |p: &[f64]| -> Result<DMatrix<f64>, ChartError> {
                let cols: Vec<Vec<f64>> = m.generators().iter().map(|g| g.eval_f64(p)).collect::<Result<_, _>>()?;
                Ok(DMatrix::from_fn(n, cols.len(), |i, k| cols[k][i]))
            };
            let gx = at(&x)?;
            let gy = at(&y)?;
            let mut worst: f64 = span.unwrap_or(0.0);
            for k in 0..gx.ncols() {
                let pushed: DVector<f64> = &j * gx.column(k);
                worst = worst.max(span_residual(&gy, &pushed));
            }
            span = Some(worst);
        }
    }
    if section_residual > SECTION_TOL {
        return Err(BisubmError::BisectionInvalid(format!("s∘b differs from the identity by {section_residual:e}")));
    }
    if min_abs_det < MIN_DET {
        return Err(BisubmError::BisectionInvalid(format!("t∘b is singular (|det| = {min_abs_det:e})")));
    }
    Ok((
        carried,
        CarryReport {
            samples,
            section_residual,
            min_abs_det,
            span_residual: span,
        },
    ))
}
