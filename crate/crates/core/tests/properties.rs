use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use proptest::prelude::*;

use folia_core::algebroid::{hx_dimensions, kernel_module, Algebroid};
use folia_core::bisubm::{groupoid_phi, GroupKind, GroupModel};
use folia_core::charts::{lie_bracket, Chart, VectorField};
use folia_core::expr::{parse_expr, rat, Compiled, Poly, Rational};
use folia_core::flows::{exp_with_jacobians, CompiledField, DEFAULT_STEP};
use folia_core::weinstein::{build_weinstein_bisubmersion, psi_representative, APath, ZBisubmersion};

const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-6;
const JACOBIAN_TOL: f64 = 1e-5;
const GROUP_TOL: f64 = 1e-10;
const HOLONOMY_TOL: f64 = 1e-6;

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn coeff() -> impl Strategy<Value = i64> {
    -4i64..=4
}

/// Polynomial of degree at most 2 in `x, y` with coefficients in `[−1, 1]` (quarters).
fn quadratic() -> impl Strategy<Value = String> {
    proptest::collection::vec(coeff(), 6).prop_map(|c| {
        ["1", "x", "y", "x^2", "x*y", "y^2"]
            .iter()
            .zip(c)
            .map(|(m, k)| format!("({k}/4)*{m}"))
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

fn plane() -> Chart {
    Chart::new("R2", &["x", "y"]).unwrap()
}

fn field(c: &Chart, comps: &[String]) -> VectorField {
    VectorField::new(c, comps.iter().map(|s| parse_expr(s, c.vars()).unwrap()).collect()).unwrap()
}

fn pair_point() -> impl Strategy<Value = Vec<Rational>> {
    proptest::collection::vec((-20i64..=20, 1i64..=5), 2).prop_map(|v| v.into_iter().map(|(p, q)| rat(p, q)).collect())
}

fn su2_z() -> &'static ZBisubmersion {
    static Z: OnceLock<ZBisubmersion> = OnceLock::new();
    Z.get_or_init(|| {
        let x = [rat(1, 1), rat(0, 1), rat(0, 1)];
        build_weinstein_bisubmersion(&Algebroid::su2_star(), &x).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivative_matches_finite_difference(p in quadratic(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let v = vars(&["x", "y"]);
        let e = parse_expr(&format!("({p})*({p}) + x^3"), &v).unwrap();
        let f = Compiled::new(&e, &v).unwrap();
        let d = Compiled::new(&e.differentiate("x"), &v).unwrap();
        let fd = (f.eval(&[x + FD_STEP, y]) - f.eval(&[x - FD_STEP, y])) / (2.0 * FD_STEP);
        prop_assert!((fd - d.eval(&[x, y])).abs() < FD_TOL);
    }

    #[test]
    fn poly_expr_roundtrip(p in quadratic(), q in quadratic()) {
        let v = vars(&["x", "y"]);
        let e = parse_expr(&format!("({p})*({q}) - ({q})"), &v).unwrap();
        let a = Poly::from_expr(&e, &v).unwrap();
        let b = Poly::from_expr(&a.to_expr(&v), &v).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn lie_bracket_jacobi(a in proptest::collection::vec(quadratic(), 6)) {
        let c = plane();
        let (x, y, z) = (field(&c, &a[0..2]), field(&c, &a[2..4]), field(&c, &a[4..6]));
        let t1 = lie_bracket(&x, &lie_bracket(&y, &z).unwrap()).unwrap();
        let t2 = lie_bracket(&y, &lie_bracket(&z, &x).unwrap()).unwrap();
        let t3 = lie_bracket(&z, &lie_bracket(&x, &y).unwrap()).unwrap();
        let sum = t1.add(&t2).unwrap().add(&t3).unwrap();
        prop_assert!(sum.is_zero().unwrap());
        let anti = lie_bracket(&x, &y).unwrap().add(&lie_bracket(&y, &x).unwrap()).unwrap();
        prop_assert!(anti.is_zero().unwrap());
    }

    #[test]
    fn pair_phi_is_an_involution(a in pair_point(), b in pair_point(), c in pair_point(), d in pair_point()) {
        let triple = [(a.clone(), b.clone()), (c.clone(), b), (c, d)];
        let out = groupoid_phi(&triple).unwrap();
        prop_assert_eq!(&out[0], &triple[2]);
        prop_assert_eq!(&out[2], &triple[0]);
        prop_assert_eq!(groupoid_phi(&out).unwrap(), triple);
    }

    #[test]
    fn bch_matches_matrix_exponential(g in proptest::collection::vec(-0.15f64..0.15, 9)) {
        let unit = |i: usize, j: usize| {
            let mut m = DMatrix::zeros(3, 3);
            m[(i, j)] = 1.0;
            m
        };
        let matrix = GroupModel { kind: GroupKind::Matrix(vec![unit(0, 1), unit(1, 2), unit(0, 2)]), radius: 1.0 };
        let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
        c[0][1][2] = 1.0;
        c[1][0][2] = -1.0;
        let bch = GroupModel { kind: GroupKind::Bch(c), radius: 1.0 };
        let lhs = matrix.phi_middle_coords(&g[0..3], &g[3..6], &g[6..9]);
        let rhs = bch.phi_middle_coords(&g[0..3], &g[3..6], &g[6..9]);
        for (l, r) in lhs.iter().zip(&rhs) {
            prop_assert!((l - r).abs() < GROUP_TOL);
        }
        let diag = bch.phi_middle_coords(&g[0..3], &g[0..3], &g[0..3]);
        for (l, r) in diag.iter().zip(&g[0..3]) {
            prop_assert!((l - r).abs() < GROUP_TOL);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn exp_jacobians_match_finite_differences(
        a in proptest::collection::vec(quadratic(), 4),
        lam in proptest::collection::vec(-0.3f64..0.3, 2),
        y in proptest::collection::vec(-0.3f64..0.3, 2),
    ) {
        let c = plane();
        let fields = vec![
            Arc::new(CompiledField::new(&field(&c, &a[0..2])).unwrap()),
            Arc::new(CompiledField::new(&field(&c, &a[2..4])).unwrap()),
        ];
        let (_, jy, jl) = exp_with_jacobians(&fields, &lam, &y, DEFAULT_STEP, None).unwrap();
        let at = |l: &[f64], p: &[f64]| exp_with_jacobians(&fields, l, p, DEFAULT_STEP, None).unwrap().0;
        for k in 0..2 {
            let (mut yp, mut ym) = (y.clone(), y.clone());
            yp[k] += FD_STEP;
            ym[k] -= FD_STEP;
            let (mut lp, mut lm) = (lam.clone(), lam.clone());
            lp[k] += FD_STEP;
            lm[k] -= FD_STEP;
            let (fy1, fy0) = (at(&lam, &yp), at(&lam, &ym));
            let (fl1, fl0) = (at(&lp, &y), at(&lm, &y));
            for i in 0..2 {
                prop_assert!(((fy1[i] - fy0[i]) / (2.0 * FD_STEP) - jy[(i, k)]).abs() < JACOBIAN_TOL);
                prop_assert!(((fl1[i] - fl0[i]) / (2.0 * FD_STEP) - jl[(i, k)]).abs() < JACOBIAN_TOL);
            }
        }
    }

    #[test]
    fn holonomy_is_additive(
        p in proptest::collection::vec(-0.2f64..0.2, 6),
        q in proptest::collection::vec(-0.2f64..0.2, 3),
    ) {
        let z = su2_z();
        let first = psi_representative(z, &[1.0 + p[0], p[1], p[2], p[3], p[4], p[5]]).unwrap();
        let mut next = first.target.clone();
        next.extend(&q);
        let second = psi_representative(z, &next).unwrap();
        prop_assert!((first.holonomy[0] - p[5]).abs() < HOLONOMY_TOL);
        let joined = APath::concat(&[&first.path, &second.path]);
        let total = z.holonomy(&joined)[0];
        prop_assert!((total - first.holonomy[0] - second.holonomy[0]).abs() < HOLONOMY_TOL);
        let back = z.holonomy(&first.path.inverse())[0];
        prop_assert!((back + first.holonomy[0]).abs() < HOLONOMY_TOL);
    }

    #[test]
    fn fiber_dimensions_add_up(p in proptest::collection::vec((-9i64..=9, 1i64..=4), 3)) {
        let a = Algebroid::su2_star();
        let x: Vec<Rational> = p.into_iter().map(|(n, d)| rat(n, d)).collect();
        let k = kernel_module(&a, 4, std::slice::from_ref(&x)).unwrap();
        let d = &k.table[0];
        prop_assert_eq!(d.seq_dim + d.dim_fx, d.rank);
        let nonzero = x.iter().any(|v| *v != rat(0, 1));
        prop_assert_eq!(hx_dimensions(&a, &x).unwrap().0, usize::from(nonzero));
    }
}

#[test]
fn target_ignores_group_coordinate() {
    assert!(!su2_z().bisub.t_depends_on_group());
}
