use std::f64::consts::TAU;

use folia_core::algebroid::Algebroid;
use folia_core::expr::int;
use folia_core::weinstein::{
    base_path_from_fiber, build_weinstein_bisubmersion, check_apath, diagram_check_weinstein, psi_representative,
    roundtrip_residual, APath, FiberFrame,
};

const APATH_TOL: f64 = 1e-4;
const ROUNDTRIP_TOL: f64 = 1e-6;

fn circle(grid: usize) -> APath {
    APath::from_fn(
        grid,
        |t| vec![(TAU * t).cos(), (TAU * t).sin()],
        |t| vec![-TAU * (TAU * t).sin(), TAU * (TAU * t).cos()],
    )
}

#[test]
fn tangent_circle_is_an_apath() {
    let a = Algebroid::tangent(2);
    let r = check_apath(&a, &circle(256)).unwrap();
    assert!(r.valid, "{r:?}");
    assert!(r.residual < APATH_TOL);
}

#[test]
fn tangent_circle_roundtrip() {
    let a = Algebroid::tangent(2);
    let f = FiberFrame::at(&a, &[int(0), int(0)]).unwrap();
    let res = roundtrip_residual(&a, &f, &circle(256)).unwrap();
    assert!(res < ROUNDTRIP_TOL, "{res}");
}

#[test]
fn su2_rotation_about_e3() {
    let a = Algebroid::su2_star();
    let x = [int(1), int(0), int(0)];
    let f = FiberFrame::at(&a, &x).unwrap();
    let p = APath::from_fn(256, |t| vec![t.cos(), -t.sin(), 0.0], |_| vec![0.0, 0.0, 1.0]);
    assert!(check_apath(&a, &p).unwrap().valid);
    let res = roundtrip_residual(&a, &f, &p).unwrap();
    eprintln!("su2 roundtrip {res:e} mu {:?}", f.mu);
    let alpha: Vec<Vec<f64>> = p.fiber.iter().map(|v| f.coordinates(v)).collect();
    let rec = base_path_from_fiber(&a, &f, &[1.0, 0.0, 0.0], &alpha).unwrap();
    assert!((rec.target()[0] - 1f64.cos()).abs() < ROUNDTRIP_TOL);
}

#[test]
fn su2_weinstein_bisubmersion() {
    let a = Algebroid::su2_star();
    let z = build_weinstein_bisubmersion(&a, &[int(1), int(0), int(0)]).unwrap();
    let s = z.summary();
    eprintln!("{s:?}");
    assert_eq!((s.n, s.k), (2, 1));
    assert!(s.abelian);
    let rep = psi_representative(&z, &[1.0, 0.1, 0.05, 0.2, -0.1, 0.05]).unwrap();
    assert!(rep.commutation_residual < 1e-4);
    assert!(check_apath(&a, &rep.path).unwrap().valid);
    let d = diagram_check_weinstein(&z, 5).unwrap();
    eprintln!("{d:?}");
}
