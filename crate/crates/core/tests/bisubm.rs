use folia_core::bisubm::{
    bisection_carry, build_path_holonomy, check_psi_diagram, verify_algebraic_bisubmersion,
    verify_foliation_bisubmersion, BiSubmersion, BisubmError, Bisection, PathHolonomyOptions, PhiVerdict, PsiModel, TripleSpace,
};
use folia_core::charts::{Chart, SmoothMap, VectorField, VfModule};
use folia_core::expr::{int, parse_expr, Expr};

const PHI_TOL: f64 = 1e-6;
const WITNESS_TOL: f64 = 1e-9;

fn map(src: &Chart, dst: &Chart, comps: &[&str]) -> SmoothMap {
    let comps = comps.iter().map(|c| parse_expr(c, src.vars()).unwrap()).collect();
    SmoothMap::new(src, dst, comps).unwrap()
}

fn level_sets_pair(f: &str) -> BiSubmersion {
    let u = Chart::new("U", &["x", "y"]).unwrap();
    let r = Chart::new("R", &["w"]).unwrap();
    let s = map(&u, &r, &["y"]);
    let t = map(&u, &r, &[&format!("{f} - y")]);
    BiSubmersion::symbolic(s, t, None, None, 8, 0, 50).unwrap()
}

fn contact_pair() -> BiSubmersion {
    let u = Chart::new("U", &["x", "y", "z"]).unwrap();
    let r2 = Chart::new("R2", &["a", "b"]).unwrap();
    let s = map(&u, &r2, &["x", "z"]);
    let t = map(&u, &r2, &["y", "z - x*y"]);
    BiSubmersion::symbolic(s, t, None, None, 8, 0, 50).unwrap()
}

fn module(vars: &[&str], gens: &[&[&str]]) -> VfModule {
    let c = Chart::new("M", vars).unwrap();
    let gens = gens
        .iter()
        .map(|g| VectorField::new(&c, g.iter().map(|e| parse_expr(e, c.vars()).unwrap()).collect()).unwrap())
        .collect();
    VfModule::new(&c, gens, 4).unwrap()
}

#[test]
fn cubic_counterexample_is_non_smooth() {
    let b = level_sets_pair("x^3");
    let cert = verify_algebraic_bisubmersion(&b, &[0.0, 0.0], 100).unwrap();
    assert_eq!(cert.verdict, PhiVerdict::NonSmoothCandidate);
    let worst = cert.smoothness.iter().map(|r| r.overall_ratio).fold(0.0, f64::max);
    assert!(worst >= 10.0, "{worst}");
    let fol = verify_foliation_bisubmersion(&b).unwrap();
    assert!(!fol.passed);
    assert_eq!(fol.witness.as_deref(), Some("6*x∂y"));
}

#[test]
fn linear_case_exists() {
    let b = level_sets_pair("x");
    let cert = verify_algebraic_bisubmersion(&b, &[0.0, 0.0], 100).unwrap();
    assert_eq!(cert.verdict, PhiVerdict::Exists, "{cert:?}");
    assert!(cert.max_residual <= PHI_TOL);
    let space = TripleSpace::new(&b, &[0.0, 0.0], 0).unwrap();
    let (solve, w) = space.middle_solve(&[0.1], &[0.05, -0.02], &[-0.07]).unwrap();
    let expect = w[0][0] + w[2][0] - w[1][0];
    assert!((solve.z[0] - expect).abs() < PHI_TOL);
    assert!(verify_foliation_bisubmersion(&b).unwrap().passed);
}

#[test]
fn contact_counterexample_is_inconsistent() {
    let b = contact_pair();
    let cert = verify_algebraic_bisubmersion(&b, &[0.0, 0.0, 0.0], 50).unwrap();
    assert_eq!(cert.verdict, PhiVerdict::InconsistentConstraints);
    let space = TripleSpace::new(&b, &[0.0, 0.0, 0.0], 0).unwrap();
    let (solve, w) = space.middle_solve(&[-0.5], &[-1.0, 0.5, 0.0], &[1.0]).unwrap();
    assert!((w[2][0] - w[0][0] - 1.0).abs() < WITNESS_TOL);
    assert!((w[1][1] - w[0][1] - 0.5).abs() < WITNESS_TOL);
    assert!((solve.residual - 0.5).abs() < WITNESS_TOL, "{solve:?}");
    assert!(!verify_foliation_bisubmersion(&b).unwrap().passed);
}

#[test]
fn translation_path_holonomy() {
    let m = module(&["x"], &[&["1"]]);
    let b = build_path_holonomy(&m, &[int(0)], &PathHolonomyOptions::default()).unwrap();
    let fol = verify_foliation_bisubmersion(&b).unwrap();
    assert!(fol.passed);
    assert_eq!(fol.induced_match, Some(true));
    let cert = verify_algebraic_bisubmersion(&b, &[0.0, 0.0], 30).unwrap();
    assert_eq!(cert.verdict, PhiVerdict::Exists);
    let (carried, _) = bisection_carry(&b, &Bisection::ConstantFiber(vec![0.1]), 10).unwrap();
    assert!((carried.eval(&[0.3]).unwrap()[0] - 0.4).abs() < 1e-12);
    let inv = b.inverse();
    assert_eq!(inv.inverse(), b);
    let (back, _) = bisection_carry(&inv, &Bisection::ConstantFiber(vec![0.1]), 10).unwrap();
    assert!((back.eval(&[0.3]).unwrap()[0] - 0.2).abs() < 1e-9);
    let rep = check_psi_diagram(&b, &[0.0, 0.0], PsiModel::PairTargetSource, 20, 1e-6).unwrap();
    assert!(rep.max_discrepancy <= 1e-6);
}

#[test]
fn sl2_path_holonomy_exists() {
    let m = module(&["x", "y"], &[&["y", "0"], &["0", "x"], &["x", "-y"]]);
    let b = build_path_holonomy(&m, &[int(1), int(0)], &PathHolonomyOptions::default()).unwrap();
    let cert = verify_algebraic_bisubmersion(&b, &[1.0, 0.0], 30).unwrap();
    assert_eq!(cert.verdict, PhiVerdict::Exists, "{:?}", cert.smoothness);
    let fol = verify_foliation_bisubmersion(&b).unwrap();
    assert!(fol.passed, "{fol:?}");
}

#[test]
fn pair_groupoid_identity_psi() {
    let m = Chart::new("M", &["x", "y"]).unwrap();
    let b = BiSubmersion::pair_groupoid(&m, 4).unwrap();
    let rep = check_psi_diagram(&b, &[0.1, 0.2, 0.3, 0.4], PsiModel::PairIdentity, 20, 1e-9).unwrap();
    assert!(rep.max_discrepancy <= 1e-9);
    let _ = Expr::zero();
}

#[test]
fn rotation_path_holonomy() {
    let m = module(&["x1", "x2", "x3"], &[&["0", "-x3", "x2"], &["x3", "0", "-x1"], &["-x2", "x1", "0"]]);
    let x = [int(1), int(0), int(0)];
    let minimal = PathHolonomyOptions {
        minimal: true,
        ..Default::default()
    };
    assert!(matches!(
        build_path_holonomy(&m, &x, &minimal),
        Err(BisubmError::NotMinimal { m: 3, dim_fx: 2 })
    ));
    let b = build_path_holonomy(&m, &x, &PathHolonomyOptions::default()).unwrap();
    assert!(b.path_holonomy().is_some());
    let fol = verify_foliation_bisubmersion(&b).unwrap();
    assert!(fol.passed, "{fol:?}");
    assert_eq!(fol.induced_match, Some(true));
}
