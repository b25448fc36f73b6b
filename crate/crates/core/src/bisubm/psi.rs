//! Commutation of `φ_U` with a groupoid `φ_G` through a morphism `ψ`.

use serde::Serialize;

use super::algebraic::TripleSpace;
use super::groupoid::pair_phi_f64;
use super::{BiSubmersion, BisubmError};
use crate::flows::FlowError;
use crate::sampling;

pub const PSI_TOL: f64 = 1e-6;

/// Bundled morphisms into the pair groupoid `M × M` (coordinates `(target, source)`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PsiModel {
    /// `ψ = (t, s)`.
    PairTargetSource,
    /// `U` is the pair groupoid itself and `ψ = id`.
    PairIdentity,
}

#[derive(Clone, Debug, Serialize)]
pub struct PsiReport {
    pub samples: usize,
    pub max_discrepancy: f64,
    /// `max |s_G∘ψ − s| + |t_G∘ψ − t|` over the sampled points.
    pub max_morphism_residual: f64,
}

impl PsiModel {
    pub fn psi(&self, b: &BiSubmersion, u: &[f64]) -> Result<Vec<f64>, FlowError> {
        match self {
            PsiModel::PairTargetSource => {
                let mut out = b.t_eval(u)?;
                out.extend(b.s_eval(u)?);
                Ok(out)
            }
            PsiModel::PairIdentity => Ok(u.to_vec()),
        }
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Pushes sampled triples through `φ_U` then `ψ`, and through `ψ×ψ×ψ` then `φ_G`.
pub fn check_psi_diagram_with(
    b: &BiSubmersion,
    base: &[f64],
    psi: &dyn Fn(&[f64]) -> Result<Vec<f64>, FlowError>,
    groupoid_st: &dyn Fn(&[f64]) -> (Vec<f64>, Vec<f64>),
    phi_g: &dyn Fn(&[Vec<f64>; 3]) -> [Vec<f64>; 3],
    samples: usize,
    tol: f64,
) -> Result<PsiReport, BisubmError> {
    let space = TripleSpace::new(b, base, b.seed)?;
    let mut rng = sampling::rng(b.seed.wrapping_add(2));
    let mut max_discrepancy: f64 = 0.0;
    let mut max_morphism: f64 = 0.0;
    for _ in 0..samples {
        let (xi, u, eta) = space.sample_coords(&mut rng);
        let (solve, w) = space.middle_solve(&xi, &u, &eta)?;
        let lhs = [psi(&w[2])?, psi(&solve.z)?, psi(&w[0])?];
        let images = [psi(&w[0])?, psi(&w[1])?, psi(&w[2])?];
        for (p, wi) in images.iter().zip(&w) {
            let (gs, gt) = groupoid_st(p);
            max_morphism = max_morphism.max(max_diff(&gs, &b.s_eval(wi)?) + max_diff(&gt, &b.t_eval(wi)?));
        }
        let rhs = phi_g(&images);
        let disc = lhs.iter().zip(&rhs).map(|(a, c)| max_diff(a, c)).fold(0.0, f64::max);
        if disc > max_discrepancy {
            max_discrepancy = disc;
        }
        if disc > tol {
            let mut witness = xi.clone();
            witness.extend(&u);
            witness.extend(&eta);
            return Err(BisubmError::CommutationFailure {
                discrepancy: disc,
                witness,
            });
        }
    }
    Ok(PsiReport {
        samples,
        max_discrepancy,
        max_morphism_residual: max_morphism,
    })
}

/// Diagram check for a bundled pair-groupoid morphism.
pub fn check_psi_diagram(
    b: &BiSubmersion,
    base: &[f64],
    model: PsiModel,
    samples: usize,
    tol: f64,
) -> Result<PsiReport, BisubmError> {
    let (m, n) = b.base_charts();
    if m.dim() != n.dim() {
        return Err(BisubmError::NotApplicable("pair groupoid needs equal base dimensions".into()));
    }
    let d = m.dim();
    if model == PsiModel::PairIdentity && b.dim() != 2 * d {
        return Err(BisubmError::NotApplicable("U is not a pair groupoid".into()));
    }
    let psi = |u: &[f64]| model.psi(b, u);
    let st = |g: &[f64]| (g[d..].to_vec(), g[..d].to_vec());
    let phi = |w: &[Vec<f64>; 3]| pair_phi_f64(d, w);
    check_psi_diagram_with(b, base, &psi, &st, &phi, samples, tol)
}
