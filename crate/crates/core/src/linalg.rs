//! Exact fraction-free sparse elimination over the rationals, and the few
//! floating-point SVD helpers the numerical checks share.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::expr::Rational;

/// Relative singular-value threshold for numerical rank decisions.
pub const SVD_RANK_RTOL: f64 = 1e-9;

/// Sparse row with integer entries, sorted by column, primitive (content one) and
/// with a positive leading entry.
#[derive(Clone, Debug, PartialEq, Eq)]
struct IntRow(Vec<(usize, BigInt)>);

impl IntRow {
    fn from_rationals(entries: &[(usize, Rational)]) -> IntRow {
        let mut lcm = BigInt::one();
        for (_, q) in entries {
            if !q.is_zero() {
                lcm = lcm.lcm(q.denom());
            }
        }
        let mut v: Vec<(usize, BigInt)> = entries
            .iter()
            .filter(|(_, q)| !q.is_zero())
            .map(|(c, q)| (*c, q.numer() * (&lcm / q.denom())))
            .collect();
        v.sort_by_key(|(c, _)| *c);
        let mut merged: Vec<(usize, BigInt)> = Vec::with_capacity(v.len());
        for (c, x) in v {
            match merged.last_mut() {
                Some((lc, lx)) if *lc == c => *lx += x,
                _ => merged.push((c, x)),
            }
        }
        merged.retain(|(_, x)| !x.is_zero());
        let mut r = IntRow(merged);
        r.normalize();
        r
    }

    fn lead(&self) -> Option<(usize, &BigInt)> {
        self.0.first().map(|(c, x)| (*c, x))
    }

    fn normalize(&mut self) {
        let mut g = BigInt::zero();
        for (_, x) in &self.0 {
            g = g.gcd(x);
            if g.is_one() {
                break;
            }
        }
        if g.is_zero() {
            return;
        }
        let negate = self.0.first().is_some_and(|(_, x)| x.is_negative());
        if !g.is_one() || negate {
            let g = if negate { -g } else { g };
            for (_, x) in &mut self.0 {
                *x = &*x / &g;
            }
        }
    }

    /// `a*self - b*other`, where the leading entries cancel.
    fn eliminate(&self, other: &IntRow) -> IntRow {
        let a = &other.0[0].1;
        let b = &self.0[0].1;
        let g = a.gcd(b);
        let fa = a / &g;
        let fb = b / &g;
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let ci = self.0.get(i).map(|e| e.0).unwrap_or(usize::MAX);
            let cj = other.0.get(j).map(|e| e.0).unwrap_or(usize::MAX);
            if ci < cj {
                out.push((ci, &fa * &self.0[i].1));
                i += 1;
            } else if cj < ci {
                out.push((cj, -(&fb * &other.0[j].1)));
                j += 1;
            } else {
                let x = &fa * &self.0[i].1 - &fb * &other.0[j].1;
                if !x.is_zero() {
                    out.push((ci, x));
                }
                i += 1;
                j += 1;
            }
        }
        let mut r = IntRow(out);
        r.normalize();
        r
    }
}

/// Row-echelon basis of a subspace of Q^ncols, grown one row at a time.
#[derive(Clone, Debug)]
pub struct Echelon {
    ncols: usize,
    pivots: BTreeMap<usize, IntRow>,
}

impl Echelon {
    pub fn new(ncols: usize) -> Self {
        Echelon {
            ncols,
            pivots: BTreeMap::new(),
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    fn reduce(&self, mut row: IntRow) -> IntRow {
        while let Some((c, _)) = row.lead() {
            match self.pivots.get(&c) {
                Some(p) => row = row.eliminate(p),
                None => break,
            }
        }
        row
    }

    /// Insert a sparse row; returns whether it enlarged the span.
    pub fn insert(&mut self, entries: &[(usize, Rational)]) -> bool {
        let row = self.reduce(IntRow::from_rationals(entries));
        match row.lead() {
            Some((c, _)) => {
                self.pivots.insert(c, row);
                true
            }
            None => false,
        }
    }

    pub fn insert_dense(&mut self, row: &[Rational]) -> bool {
        let entries: Vec<(usize, Rational)> = row
            .iter()
            .enumerate()
            .filter(|(_, q)| !q.is_zero())
            .map(|(i, q)| (i, q.clone()))
            .collect();
        self.insert(&entries)
    }

    pub fn contains(&self, entries: &[(usize, Rational)]) -> bool {
        self.reduce(IntRow::from_rationals(entries)).0.is_empty()
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        self.pivots.keys().copied().collect()
    }

    /// Back-substitution with the given values for non-pivot columns.
    fn back_substitute(&self, free: &dyn Fn(usize) -> Rational) -> Vec<Rational> {
        let mut x: Vec<Option<Rational>> = vec![None; self.ncols];
        for (&lead, row) in self.pivots.iter().rev() {
            let mut acc = Rational::zero();
            for (c, a) in row.0.iter().skip(1) {
                let v = match &x[*c] {
                    Some(v) => v.clone(),
                    None => {
                        let v = free(*c);
                        x[*c] = Some(v.clone());
                        v
                    }
                };
                if !v.is_zero() {
                    acc += Rational::from_integer(a.clone()) * v;
                }
            }
            x[lead] = Some(-acc / Rational::from_integer(row.0[0].1.clone()));
        }
        x.into_iter()
            .enumerate()
            .map(|(c, v)| v.unwrap_or_else(|| free(c)))
            .collect()
    }

    /// Basis of the solutions of the homogeneous system spanned by the rows.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        (0..self.ncols)
            .filter(|c| !self.pivots.contains_key(c))
            .map(|f| {
                self.back_substitute(&|c| {
                    if c == f {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
            })
            .collect()
    }
}

/// Exact solver for `A x = b` assembled from sparse equations.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    nunknowns: usize,
    ech: Echelon,
}

impl LinearSystem {
    pub fn new(nunknowns: usize) -> Self {
        LinearSystem {
            nunknowns,
            ech: Echelon::new(nunknowns + 1),
        }
    }

    /// Add `Σ a_j x_j = rhs`.
    pub fn push(&mut self, coeffs: &[(usize, Rational)], rhs: Rational) {
        let mut row = coeffs.to_vec();
        if !rhs.is_zero() {
            row.push((self.nunknowns, rhs));
        }
        self.ech.insert(&row);
    }

    pub fn is_consistent(&self) -> bool {
        !self.ech.pivots.contains_key(&self.nunknowns)
    }

    /// A particular solution with free variables set to zero.
    pub fn solve(&self) -> Option<Vec<Rational>> {
        if !self.is_consistent() {
            return None;
        }
        let n = self.nunknowns;
        let mut x = self.ech.back_substitute(&|c| {
            if c == n {
                -Rational::one()
            } else {
                Rational::zero()
            }
        });
        x.truncate(n);
        Some(x)
    }

    /// Basis of the homogeneous solution space.
    pub fn nullspace(&self) -> Vec<Vec<Rational>> {
        let mut hom = Echelon::new(self.nunknowns);
        for row in self.ech.pivots.values() {
            let entries: Vec<(usize, Rational)> = row
                .0
                .iter()
                .filter(|(c, _)| *c < self.nunknowns)
                .map(|(c, a)| (*c, Rational::from_integer(a.clone())))
                .collect();
            hom.insert(&entries);
        }
        hom.nullspace()
    }
}

/// Exact rank of a dense rational matrix.
pub fn rank_exact(rows: &[Vec<Rational>]) -> usize {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut e = Echelon::new(ncols);
    for r in rows {
        e.insert_dense(r);
    }
    e.rank()
}

fn padded_svd(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (r, c) = m.shape();
    let sq = DMatrix::from_fn(c.max(r), c, |i, j| if i < r { m[(i, j)] } else { 0.0 });
    let svd = sq.svd(false, true);
    (svd.singular_values, svd.v_t.expect("v_t requested"))
}

/// Numerical rank with threshold `SVD_RANK_RTOL * σ_max`.
pub fn rank_f64(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let s = m.clone().svd(false, false).singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > SVD_RANK_RTOL * smax).count()
}

/// Orthonormal basis (as columns) of the kernel of `m`.
pub fn null_space_f64(m: &DMatrix<f64>) -> DMatrix<f64> {
    let c = m.ncols();
    if m.nrows() == 0 {
        return DMatrix::identity(c, c);
    }
    let (s, vt) = padded_svd(m);
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..c)
        .filter(|&i| smax == 0.0 || s[i] <= SVD_RANK_RTOL * smax)
        .collect();
    DMatrix::from_fn(c, cols.len(), |i, j| vt[(cols[j], i)])
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(a.ncols());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = (SVD_RANK_RTOL * smax).max(1e-300);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Distance from `v` to the column span of `m`, relative to `|v|` (or absolute if `|v|` < 1).
pub fn span_residual(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    if m.ncols() == 0 {
        return v.norm();
    }
    let x = lstsq(m, v);
    let r = (m * x - v).norm();
    r / v.norm().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{int, rat};

    #[test]
    fn rank_and_nullspace() {
        let rows = vec![
            vec![int(1), int(2), int(3)],
            vec![int(2), int(4), int(6)],
            vec![int(0), int(1), rat(1, 2)],
        ];
        assert_eq!(rank_exact(&rows), 2);
        let mut e = Echelon::new(3);
        for r in &rows {
            e.insert_dense(r);
        }
        let ns = e.nullspace();
        assert_eq!(ns.len(), 1);
        for r in &rows {
            let dot: Rational = r.iter().zip(&ns[0]).map(|(a, b)| a * b).sum();
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn inconsistent_system() {
        let mut s = LinearSystem::new(2);
        s.push(&[(0, int(1)), (1, int(1))], int(1));
        s.push(&[(0, int(2)), (1, int(2))], int(3));
        assert!(s.solve().is_none());
    }

    #[test]
    fn particular_solution() {
        let mut s = LinearSystem::new(3);
        s.push(&[(0, int(1)), (1, int(1))], int(3));
        s.push(&[(1, int(1)), (2, rat(1, 2))], int(1));
        let x = s.solve().unwrap();
        assert_eq!(&x[0] + &x[1], int(3));
        assert_eq!(&x[1] + &x[2] * rat(1, 2), int(1));
        assert_eq!(s.nullspace().len(), 1);
    }

    #[test]
    fn float_helpers() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(rank_f64(&m), 2);
        let n = null_space_f64(&m);
        assert_eq!(n.ncols(), 1);
        assert!((n[(2, 0)].abs() - 1.0).abs() < 1e-12);
        let v = DVector::from_vec(vec![0.0, 0.0, 2.0]);
        let basis = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        assert!((span_residual(&basis, &v) - 1.0).abs() < 1e-12);
    }
}
