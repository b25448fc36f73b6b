//! The triple space `U ×_s U ×_t U` and the swap map `φ` on it.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{BiSubmersion, BisubmError, DEFAULT_BALL_RADIUS};
use crate::flows::FlowError;
use crate::linalg::{lstsq, null_space_f64};
use crate::sampling;

pub const EXISTS_TOL: f64 = 1e-6;
pub const FIBERED_TOL: f64 = 1e-8;
pub const INJECTIVITY_TOL: f64 = 1e-9;
pub const DIAGONAL_TOL: f64 = 1e-8;
pub const NEWTON_MAX_ITER: usize = 50;
pub const NEWTON_TOL: f64 = 1e-10;
pub const STATIONARY_TOL: f64 = 1e-8;
pub const REGULARITY_TOL: f64 = 1e-6;
pub const SMOOTHNESS_STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const BOUNDED_RATIO: f64 = 4.0;
pub const NONSMOOTH_RATIO: f64 = 10.0;
const CANDIDATE_TOL: f64 = 1e-12;
const POLISH_TOL: f64 = 1e-15;
const S_WEIGHT: f64 = 1e6;
const LINE_SEARCH_HALVINGS: usize = 40;
const RANDOM_PROBES: usize = 2;
const MAX_RADIUS_HALVINGS: usize = 10;
const RADIUS_TRIALS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PhiVerdict {
    Exists,
    InconsistentConstraints,
    NonSmoothCandidate,
    Inconclusive,
}

/// Result of solving for the middle component of `φ(w₁, w₂, w₃) = (w₃, z, w₁)`.
#[derive(Clone, Debug, Serialize)]
pub struct MiddleSolve {
    pub z: Vec<f64>,
    /// `|s(z) − s(w₃)|`.
    pub s_residual: f64,
    /// `|t(z) − t(w₁)|`.
    pub t_residual: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Stationary point of the least-squares problem with a regular reduced Jacobian.
    pub regular_stationary: bool,
    pub used_candidate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TripleSample {
    pub xi: Vec<f64>,
    pub u: Vec<f64>,
    pub eta: Vec<f64>,
    /// Residual of the fibered-product constraints on `χ(ξ, u, η)`.
    pub fibered_residual: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Finite-difference derivative norms of the middle solve at one probe.
#[derive(Clone, Debug, Serialize)]
pub struct SmoothnessRow {
    pub probe: String,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub steps: [f64; 3],
    pub norms: [f64; 3],
    pub ratios: [f64; 2],
    pub overall_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub xi: Vec<f64>,
    pub u: Vec<f64>,
    pub eta: Vec<f64>,
    pub triple: [Vec<f64>; 3],
    pub middle: Vec<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiCertificate {
    pub verdict: PhiVerdict,
    pub radius: f64,
    pub samples: Vec<TripleSample>,
    pub max_residual: f64,
    pub max_fibered_residual: f64,
    pub min_separation: f64,
    pub smoothness: Vec<SmoothnessRow>,
    pub diagonal_residual: f64,
    pub identity_residual: f64,
    pub witness: Option<Witness>,
    pub note: String,
}

/// Coordinates `(ξ, u, η)` on a neighborhood of the diagonal of `U ×_s U ×_t U`.
#[derive(Clone, Debug)]
pub struct TripleSpace<'a> {
    pub bisub: &'a BiSubmersion,
    pub base: Vec<f64>,
    pub radius: f64,
    pub xi_dim: usize,
    pub eta_dim: usize,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn sigma_min(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return f64::INFINITY;
    }
    let s = m.clone().svd(false, false).singular_values;
    s.iter().cloned().fold(f64::INFINITY, f64::min)
}

impl<'a> TripleSpace<'a> {
    /// Ball radius starts at the default and halves until sampled triples exist.
    pub fn new(bisub: &'a BiSubmersion, base: &[f64], seed: u64) -> Result<TripleSpace<'a>, BisubmError> {
        let mut base = base.to_vec();
        if base.len() < bisub.dim() {
            base.resize(bisub.dim(), 0.0);
        }
        let (xi_dim, eta_dim) = bisub.frame_sizes();
        let mut space = TripleSpace {
            bisub,
            base,
            radius: DEFAULT_BALL_RADIUS,
            xi_dim,
            eta_dim,
        };
        if let Some(ph) = bisub.path_holonomy() {
            space.radius = space.radius.min(ph.radius / 2.0);
        }
        let mut rng = sampling::rng(seed);
        for _ in 0..MAX_RADIUS_HALVINGS {
            let ok = (0..RADIUS_TRIALS).all(|_| {
                let (xi, u, eta) = space.sample_coords(&mut rng);
                space.chi(&xi, &u, &eta).is_ok()
            });
            if ok {
                return Ok(space);
            }
            space.radius /= 2.0;
        }
        Err(BisubmError::FlowEscape)
    }

    pub fn sample_coords(&self, rng: &mut sampling::SampleRng) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let xi = sampling::uniform_ball(rng, self.xi_dim, self.radius);
        let du = sampling::uniform_ball(rng, self.base.len(), self.radius);
        let u = self.base.iter().zip(&du).map(|(a, b)| a + b).collect();
        let eta = sampling::uniform_ball(rng, self.eta_dim, self.radius);
        (xi, u, eta)
    }

    /// `χ(ξ, u, η) = (α_ξ(u), u, β_η(u))`.
    pub fn chi(&self, xi: &[f64], u: &[f64], eta: &[f64]) -> Result<[Vec<f64>; 3], FlowError> {
        Ok([self.bisub.alpha(xi, u)?, u.to_vec(), self.bisub.beta(eta, u)?])
    }

    /// `|s(w₁) − s(w₂)| + |t(w₂) − t(w₃)|`.
    pub fn fibered_residual(&self, w: &[Vec<f64>; 3]) -> Result<f64, FlowError> {
        let b = self.bisub;
        Ok(dist(&b.s_eval(&w[0])?, &b.s_eval(&w[1])?) + dist(&b.t_eval(&w[1])?, &b.t_eval(&w[2])?))
    }

    fn residuals(&self, z: &[f64], s3: &[f64], t1: &[f64]) -> Result<(Vec<f64>, Vec<f64>), FlowError> {
        let rs = self.bisub.s_eval(z)?.iter().zip(s3).map(|(a, b)| a - b).collect();
        let rt = self.bisub.t_eval(z)?.iter().zip(t1).map(|(a, b)| a - b).collect();
        Ok((rs, rt))
    }

    /// Middle component at `χ(ξ, u, η)`: the candidate when it satisfies the
    /// constraints, otherwise a Gauss-Newton solve of `s(z) = s(w₃)` exactly and
    /// `t(z) = t(w₁)` in least squares, seeded at the candidate.
    pub fn middle_solve(&self, xi: &[f64], u: &[f64], eta: &[f64]) -> Result<(MiddleSolve, [Vec<f64>; 3]), FlowError> {
        let w = self.chi(xi, u, eta)?;
        let b = self.bisub;
        let s3 = b.s_eval(&w[2])?;
        let t1 = b.t_eval(&w[0])?;
        let mut z = match b.candidate(xi, u, eta, &w) {
            Ok(z) => z,
            Err(_) => u.to_vec(),
        };
        // Merit weighting the source constraints, which are always solvable.
        let norm2 = |r: &(Vec<f64>, Vec<f64>)| {
            S_WEIGHT * r.0.iter().map(|x| x * x).sum::<f64>() + r.1.iter().map(|x| x * x).sum::<f64>()
        };
        let plain = |r: &(Vec<f64>, Vec<f64>)| r.0.iter().chain(&r.1).map(|x| x * x).sum::<f64>().sqrt();
        let mut r = self.residuals(&z, &s3, &t1)?;
        let mut f = norm2(&r);
        if plain(&r) <= CANDIDATE_TOL {
            return Ok((self.finish(z, &r, 0, true, true, true), w));
        }
        let mut nudged = false;
        let mut regular = false;
        let mut stationary = false;
        let mut iterations = 0;
        while iterations < NEWTON_MAX_ITER {
            iterations += 1;
            let js = b.s_jacobian(&z)?;
            let jt = b.t_jacobian(&z)?;
            let rs = DVector::from_column_slice(&r.0);
            let rt = DVector::from_column_slice(&r.1);
            let d0 = lstsq(&js, &(-&rs));
            let nmat = null_space_f64(&js);
            let jtn = &jt * &nmat;
            let grad = jtn.transpose() * &rt;
            regular = sigma_min(&jtn) >= REGULARITY_TOL;
            stationary = rs.norm() <= NEWTON_TOL && grad.norm() <= STATIONARY_TOL;
            let wv = lstsq(&jtn, &(-(&rt + &jt * &d0)));
            let step = d0 + &nmat * wv;
            let step_norm = step.norm();
            if step_norm <= POLISH_TOL * (1.0 + z.iter().map(|x| x * x).sum::<f64>().sqrt()) {
                if plain(&r) > NEWTON_TOL && !nudged && nmat.ncols() > 0 {
                    // Singular seed: move off it along the constraint-preserving directions.
                    nudged = true;
                    for j in 0..nmat.ncols() {
                        for (i, zi) in z.iter_mut().enumerate() {
                            *zi += 1e-3 * nmat[(i, j)];
                        }
                    }
                    r = self.residuals(&z, &s3, &t1)?;
                    f = norm2(&r);
                    continue;
                }
                break;
            }
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..LINE_SEARCH_HALVINGS {
                let trial: Vec<f64> = z.iter().zip(step.iter()).map(|(a, d)| a + alpha * d).collect();
                if let Ok(rn) = self.residuals(&trial, &s3, &t1) {
                    let fnew = norm2(&rn);
                    if fnew.is_finite() && fnew < f {
                        z = trial;
                        r = rn;
                        f = fnew;
                        accepted = true;
                        break;
                    }
                }
                alpha /= 2.0;
            }
            if !accepted || plain(&r) <= POLISH_TOL {
                break;
            }
        }
        let converged = plain(&r) <= NEWTON_TOL;
        Ok((self.finish(z, &r, iterations, converged, regular && stationary, false), w))
    }

    fn finish(
        &self,
        z: Vec<f64>,
        r: &(Vec<f64>, Vec<f64>),
        iterations: usize,
        converged: bool,
        regular_stationary: bool,
        used_candidate: bool,
    ) -> MiddleSolve {
        let sn = r.0.iter().map(|x| x * x).sum::<f64>();
        let tn = r.1.iter().map(|x| x * x).sum::<f64>();
        MiddleSolve {
            z,
            s_residual: sn.sqrt(),
            t_residual: tn.sqrt(),
            residual: (sn + tn).sqrt(),
            iterations,
            converged,
            regular_stationary,
            used_candidate,
        }
    }

    fn split<'c>(&self, c: &'c [f64]) -> (&'c [f64], &'c [f64], &'c [f64]) {
        let (xi, rest) = c.split_at(self.xi_dim);
        let (u, eta) = rest.split_at(self.base.len());
        (xi, u, eta)
    }

    /// Central-difference Jacobian norms of `c ↦ z(c)` at each step in [`SMOOTHNESS_STEPS`].
    pub fn smoothness_row(&self, probe: &str, xi: &[f64], eta: &[f64]) -> Result<SmoothnessRow, FlowError> {
        let mut c: Vec<f64> = xi.to_vec();
        c.extend_from_slice(&self.base);
        c.extend_from_slice(eta);
        let mut norms = [0.0; 3];
        for (k, &h) in SMOOTHNESS_STEPS.iter().enumerate() {
            let mut total = 0.0;
            for i in 0..c.len() {
                let mut cp = c.clone();
                cp[i] += h;
                let mut cm = c.clone();
                cm[i] -= h;
                let (a, b, e) = self.split(&cp);
                let zp = self.middle_solve(a, b, e)?.0.z;
                let (a, b, e) = self.split(&cm);
                let zm = self.middle_solve(a, b, e)?.0.z;
                total += zp.iter().zip(&zm).map(|(p, m)| ((p - m) / (2.0 * h)).powi(2)).sum::<f64>();
            }
            norms[k] = total.sqrt();
        }
        let ratio = |a: f64, b: f64| if a == 0.0 { if b == 0.0 { 1.0 } else { f64::INFINITY } } else { b / a };
        Ok(SmoothnessRow {
            probe: probe.to_string(),
            xi: xi.to_vec(),
            eta: eta.to_vec(),
            steps: SMOOTHNESS_STEPS,
            norms,
            ratios: [ratio(norms[0], norms[1]), ratio(norms[1], norms[2])],
            overall_ratio: ratio(norms[0], norms[2]),
        })
    }

    fn probes(&self, rng: &mut sampling::SampleRng) -> Vec<(String, Vec<f64>, Vec<f64>)> {
        let rho = self.radius / 2.0;
        let mut out = Vec::new();
        for i in 0..self.xi_dim {
            let mut xi = vec![0.0; self.xi_dim];
            xi[i] = rho;
            out.push((format!("xi{}", i + 1), xi, vec![0.0; self.eta_dim]));
        }
        for j in 0..self.eta_dim {
            let mut eta = vec![0.0; self.eta_dim];
            eta[j] = rho;
            out.push((format!("eta{}", j + 1), vec![0.0; self.xi_dim], eta));
        }
        for i in 0..self.xi_dim.min(self.eta_dim) {
            let mut xi = vec![0.0; self.xi_dim];
            let mut eta = vec![0.0; self.eta_dim];
            xi[i] = rho;
            eta[i] = -rho;
            out.push((format!("antidiagonal{}", i + 1), xi, eta));
        }
        for k in 0..RANDOM_PROBES {
            let xi = sampling::uniform_ball(rng, self.xi_dim, rho);
            let eta = sampling::uniform_ball(rng, self.eta_dim, rho);
            out.push((format!("random{}", k + 1), xi, eta));
        }
        out
    }
}

/// Sampled construction of the swap map `φ` near `base`, classified by constraint
/// residuals and a finite-difference smoothness heuristic.
pub fn verify_algebraic_bisubmersion(
    b: &BiSubmersion,
    base: &[f64],
    samples: usize,
) -> Result<PhiCertificate, BisubmError> {
    let space = TripleSpace::new(b, base, b.seed)?;
    let mut rng = sampling::rng(b.seed.wrapping_add(1));
    let mut rows = Vec::with_capacity(samples);
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(samples);
    let mut max_residual: f64 = 0.0;
    let mut max_fibered: f64 = 0.0;
    let mut inconsistent: Option<Witness> = None;
    let mut failed: Option<Witness> = None;
    for _ in 0..samples {
        let (xi, u, eta) = space.sample_coords(&mut rng);
        let (solve, w) = match space.middle_solve(&xi, &u, &eta) {
            Ok(v) => v,
            Err(_) => {
                failed.get_or_insert(Witness {
                    triple: [Vec::new(), u.clone(), Vec::new()],
                    xi,
                    u,
                    eta,
                    middle: Vec::new(),
                    residual: f64::INFINITY,
                });
                continue;
            }
        };
        let fibered = space.fibered_residual(&w)?;
        max_fibered = max_fibered.max(fibered);
        max_residual = max_residual.max(solve.residual);
        images.push(w.iter().flatten().copied().collect());
        let witness = || Witness {
            xi: xi.clone(),
            u: u.clone(),
            eta: eta.clone(),
            triple: w.clone(),
            middle: solve.z.clone(),
            residual: solve.residual,
        };
        if solve.residual > EXISTS_TOL {
            if solve.regular_stationary {
                if inconsistent.is_none() {
                    inconsistent = Some(witness());
                }
            } else if failed.is_none() {
                failed = Some(witness());
            }
        }
        rows.push(TripleSample {
            xi: xi.clone(),
            u: u.clone(),
            eta: eta.clone(),
            fibered_residual: fibered,
            residual: solve.residual,
            converged: solve.converged,
        });
    }
    let mut min_separation = f64::INFINITY;
    for i in 0..images.len() {
        for j in 0..i {
            min_separation = min_separation.min(dist(&images[i], &images[j]));
        }
    }
    let zero_xi = vec![0.0; space.xi_dim];
    let zero_eta = vec![0.0; space.eta_dim];
    let (diag, _) = space.middle_solve(&zero_xi, &space.base, &zero_eta)?;
    let identity_residual = dist(&diag.z, &space.base);
    let diagonal_residual = diag.residual;

    let mut verdict;
    let mut witness = None;
    let mut smoothness = Vec::new();
    if let Some(w) = inconsistent {
        verdict = PhiVerdict::InconsistentConstraints;
        witness = Some(w);
    } else {
        for (name, xi, eta) in space.probes(&mut rng) {
            match space.smoothness_row(&name, &xi, &eta) {
                Ok(row) => smoothness.push(row),
                Err(_) => {
                    failed.get_or_insert(Witness {
                        xi,
                        u: space.base.clone(),
                        eta,
                        triple: [Vec::new(), space.base.clone(), Vec::new()],
                        middle: Vec::new(),
                        residual: f64::INFINITY,
                    });
                }
            }
        }
        let nonsmooth = smoothness.iter().find(|r| r.overall_ratio >= NONSMOOTH_RATIO);
        let bounded = smoothness.iter().all(|r| r.ratios.iter().all(|q| *q <= BOUNDED_RATIO));
        if let Some(row) = nonsmooth {
            verdict = PhiVerdict::NonSmoothCandidate;
            let (solve, w) = space.middle_solve(&row.xi, &space.base, &row.eta)?;
            witness = Some(Witness {
                xi: row.xi.clone(),
                u: space.base.clone(),
                eta: row.eta.clone(),
                triple: w,
                middle: solve.z,
                residual: solve.residual,
            });
        } else if failed.is_none() && max_residual <= EXISTS_TOL && bounded {
            verdict = PhiVerdict::Exists;
        } else {
            verdict = PhiVerdict::Inconclusive;
            witness = failed;
        }
    }
    if verdict == PhiVerdict::Exists
        && (max_fibered > FIBERED_TOL
            || min_separation <= INJECTIVITY_TOL
            || diagonal_residual > DIAGONAL_TOL
            || identity_residual > DIAGONAL_TOL)
    {
        verdict = PhiVerdict::Inconclusive;
    }
    Ok(PhiCertificate {
        verdict,
        radius: space.radius,
        samples: rows,
        max_residual,
        max_fibered_residual: max_fibered,
        min_separation,
        smoothness,
        diagonal_residual,
        identity_residual,
        witness,
        note: format!(
            "smoothness is a heuristic: derivative-norm ratio >= {NONSMOOTH_RATIO} across h = 1e-2..1e-4 flags a non-smooth middle component"
        ),
    })
}
