//! The pair-groupoid map and local group models.

use nalgebra::{DMatrix, DVector};

use super::BisubmError;
use crate::expr::Rational;
use crate::linalg::lstsq;

/// Element `(target, source)` of the pair groupoid `M × M`.
pub type PairElem = (Vec<Rational>, Vec<Rational>);

/// `(g, h, ζ) ↦ (ζ, g h⁻¹ ζ, g)` on `G ×_s G ×_t G` for the pair groupoid.
pub fn groupoid_phi(triple: &[PairElem; 3]) -> Result<[PairElem; 3], BisubmError> {
    let [g, h, z] = triple;
    if g.1 != h.1 || h.0 != z.0 {
        return Err(BisubmError::FiberedMismatch);
    }
    let middle = (g.0.clone(), z.1.clone());
    Ok([z.clone(), middle, g.clone()])
}

/// Float version used by the diagram checks; no fibered-product validation.
pub fn pair_phi_f64(n: usize, triple: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
    let [g, _, z] = triple;
    let mut middle = g[..n].to_vec();
    middle.extend_from_slice(&z[n..]);
    [z.clone(), middle, g.clone()]
}

/// Local group structure on exponential coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupKind {
    Abelian(usize),
    /// Basis matrices of a matrix Lie algebra.
    Matrix(Vec<DMatrix<f64>>),
    /// Structure constants `c[i][j][k]` with `[eᵢ, eⱼ] = Σ c[i][j][k] e_k`.
    Bch(Vec<Vec<Vec<f64>>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupModel {
    pub kind: GroupKind,
    pub radius: f64,
}

/// Group element in a model: exponential coordinates or an explicit matrix.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupElem {
    Coords(Vec<f64>),
    Matrix(DMatrix<f64>),
}

const LOG_SERIES_TERMS: usize = 200;
pub const EXP_LOG_TOL: f64 = 1e-10;

/// Series logarithm of a matrix close to the identity.
pub fn matrix_log(g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = g.nrows();
    let x = g - DMatrix::<f64>::identity(n, n);
    if x.norm() >= 0.9 {
        return None;
    }
    let mut acc = DMatrix::zeros(n, n);
    let mut pow = x.clone();
    for k in 1..=LOG_SERIES_TERMS {
        let term = &pow / k as f64;
        if k % 2 == 1 {
            acc += &term;
        } else {
            acc -= &term;
        }
        if term.norm() < 1e-17 {
            break;
        }
        pow = &pow * &x;
    }
    Some(acc)
}

impl GroupModel {
    pub fn abelian(k: usize, radius: f64) -> Self {
        GroupModel {
            kind: GroupKind::Abelian(k),
            radius,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            GroupKind::Abelian(k) => *k,
            GroupKind::Matrix(b) => b.len(),
            GroupKind::Bch(c) => c.len(),
        }
    }

    pub fn is_abelian(&self) -> bool {
        match &self.kind {
            GroupKind::Abelian(_) => true,
            GroupKind::Matrix(b) => b.iter().all(|x| b.iter().all(|y| (x * y - y * x).norm() < 1e-14)),
            GroupKind::Bch(c) => c.iter().flatten().flatten().all(|v| *v == 0.0),
        }
    }

    fn bracket(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match &self.kind {
            GroupKind::Abelian(k) => vec![0.0; *k],
            GroupKind::Matrix(basis) => {
                let x = self.algebra_matrix(basis, a);
                let y = self.algebra_matrix(basis, b);
                self.matrix_coords(basis, &(&x * &y - &y * &x))
            }
            GroupKind::Bch(c) => {
                let k = c.len();
                let mut out = vec![0.0; k];
                for i in 0..k {
                    for j in 0..k {
                        let w = a[i] * b[j];
                        if w == 0.0 {
                            continue;
                        }
                        for (o, cijk) in out.iter_mut().zip(&c[i][j]) {
                            *o += w * cijk;
                        }
                    }
                }
                out
            }
        }
    }

    fn algebra_matrix(&self, basis: &[DMatrix<f64>], a: &[f64]) -> DMatrix<f64> {
        let d = basis[0].nrows();
        basis.iter().zip(a).fold(DMatrix::zeros(d, d), |acc, (b, c)| acc + b * *c)
    }

    fn matrix_coords(&self, basis: &[DMatrix<f64>], m: &DMatrix<f64>) -> Vec<f64> {
        let d = basis[0].nrows();
        let a = DMatrix::from_fn(d * d, basis.len(), |r, c| basis[c].as_slice()[r]);
        let b = DVector::from_column_slice(m.as_slice());
        lstsq(&a, &b).iter().copied().collect()
    }

    /// Product in exponential coordinates.
    pub fn mul_coords(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        match &self.kind {
            GroupKind::Abelian(_) => a.iter().zip(b).map(|(x, y)| x + y).collect(),
            GroupKind::Matrix(basis) => {
                let g = self.algebra_matrix(basis, a).exp() * self.algebra_matrix(basis, b).exp();
                match matrix_log(&g) {
                    Some(l) => self.matrix_coords(basis, &l),
                    None => vec![f64::NAN; a.len()],
                }
            }
            GroupKind::Bch(_) => {
                // X + Y + ½[X,Y] + (1/12)([X,[X,Y]] + [Y,[Y,X]]) − (1/24)[Y,[X,[X,Y]]]
                let xy = self.bracket(a, b);
                let x_xy = self.bracket(a, &xy);
                let yx = self.bracket(b, a);
                let y_yx = self.bracket(b, &yx);
                let y_x_xy = self.bracket(b, &x_xy);
                (0..a.len())
                    .map(|i| a[i] + b[i] + 0.5 * xy[i] + (x_xy[i] + y_yx[i]) / 12.0 - y_x_xy[i] / 24.0)
                    .collect()
            }
        }
    }

    pub fn inv_coords(&self, a: &[f64]) -> Vec<f64> {
        a.iter().map(|x| -x).collect()
    }

    /// `g₁ g₂⁻¹ g₃` in exponential coordinates.
    pub fn phi_middle_coords(&self, g1: &[f64], g2: &[f64], g3: &[f64]) -> Vec<f64> {
        self.mul_coords(&self.mul_coords(g1, &self.inv_coords(g2)), g3)
    }

    fn check_ball(&self, e: &GroupElem) -> Result<(), BisubmError> {
        let norm = match e {
            GroupElem::Coords(c) => c.iter().map(|x| x * x).sum::<f64>().sqrt(),
            GroupElem::Matrix(m) => (m - DMatrix::<f64>::identity(m.nrows(), m.ncols())).norm(),
        };
        if norm > self.radius {
            return Err(BisubmError::OutsideValidityBall {
                norm,
                radius: self.radius,
            });
        }
        Ok(())
    }

    pub fn exp_matrix(&self, a: &[f64]) -> Option<DMatrix<f64>> {
        match &self.kind {
            GroupKind::Matrix(basis) => Some(self.algebra_matrix(basis, a).exp()),
            _ => None,
        }
    }

    pub fn log_matrix(&self, g: &DMatrix<f64>) -> Option<Vec<f64>> {
        match &self.kind {
            GroupKind::Matrix(basis) => matrix_log(g).map(|l| self.matrix_coords(basis, &l)),
            _ => None,
        }
    }
}

/// `(g₁, g₂, g₃) ↦ (g₃, g₁g₂⁻¹g₃, g₁)` in a local group.
pub fn local_phi_from_group(model: &GroupModel, triple: &[GroupElem; 3]) -> Result<[GroupElem; 3], BisubmError> {
    for e in triple {
        model.check_ball(e)?;
    }
    let [g1, g2, g3] = triple;
    let middle = match (g1, g2, g3) {
        (GroupElem::Matrix(a), GroupElem::Matrix(b), GroupElem::Matrix(c)) => {
            let inv = b.clone().try_inverse().ok_or(BisubmError::FiberedMismatch)?;
            GroupElem::Matrix(a * inv * c)
        }
        (GroupElem::Coords(a), GroupElem::Coords(b), GroupElem::Coords(c)) => {
            GroupElem::Coords(model.phi_middle_coords(a, b, c))
        }
        _ => return Err(BisubmError::FiberedMismatch),
    };
    Ok([g3.clone(), middle, g1.clone()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::int;

    #[test]
    fn pair_phi_example() {
        let p = |a: i64, b: i64| (vec![int(a)], vec![int(b)]);
        let out = groupoid_phi(&[p(1, 2), p(3, 2), p(3, 4)]).unwrap();
        assert_eq!(out, [p(3, 4), p(1, 4), p(1, 2)]);
        assert!(groupoid_phi(&[p(1, 2), p(3, 5), p(3, 4)]).is_err());
    }

    #[test]
    fn abelian_middle() {
        let m = GroupModel::abelian(2, 10.0);
        let t = [
            GroupElem::Coords(vec![1.0, 0.0]),
            GroupElem::Coords(vec![1.0, 1.0]),
            GroupElem::Coords(vec![0.0, 1.0]),
        ];
        let out = local_phi_from_group(&m, &t).unwrap();
        assert_eq!(out[1], GroupElem::Coords(vec![0.0, 0.0]));
    }

    #[test]
    fn exp_log_roundtrip() {
        let e12 = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let e23 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let e13 = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let m = GroupModel {
            kind: GroupKind::Matrix(vec![e12, e23, e13]),
            radius: 1.0,
        };
        let a = [0.1, -0.2, 0.05];
        let g = m.exp_matrix(&a).unwrap();
        let back = m.log_matrix(&g).unwrap();
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() < EXP_LOG_TOL);
        }
    }
}
