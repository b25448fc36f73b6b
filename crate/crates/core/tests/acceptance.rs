//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p folia-core --test acceptance -- --nocapture` to see the lines.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use folia_core::algebroid::{
    dimension_line, hx_dimensions, induced_foliation, kernel_module, origin, Algebroid,
};
use folia_core::bisubm::{
    build_path_holonomy, groupoid_phi, verify_algebraic_bisubmersion, verify_foliation_bisubmersion, BiSubmersion,
    PathHolonomyOptions, PhiVerdict, TripleSpace,
};
use folia_core::charts::{Chart, SmoothMap, VectorField};
use folia_core::expr::{int, parse_expr, Rational};
use folia_core::flows::{accel_velocity_check, flow, flow_sum_compose, middle_term, CompiledField, TimeDependentField};
use folia_core::sampling::{self, nonzero_rational_point, small_rational, uniform_cube};
use folia_core::weinstein::{
    build_weinstein_bisubmersion, check_apath, diagram_check_weinstein, psi_representative, roundtrip_residual,
    APath, FiberFrame,
};

const PHI_RESIDUAL_TOL: f64 = 1e-6;
const NONSMOOTH_RATIO: f64 = 10.0;
const WITNESS_TOL: f64 = 1e-9;
const FLOW_TOL: f64 = 1e-6;
const RK4_RATIO: f64 = 12.0;
const ACCEL_TOL: f64 = 1e-4;
const COMMUTE_TOL: f64 = 1e-4;
const APATH_TOL: f64 = 1e-4;
const HALVING_FACTOR: f64 = 4.0;
const PRECISION_FLOOR: f64 = 1e-10;
const ANCHOR_IDENTITY_TOL: f64 = 1e-12;
const DIM_POINTS: usize = 10;
const DIM_DEGREE: u32 = 4;
const PHI_TRIPLES: usize = 1000;
const FLOW_PAIRS: usize = 20;
const ACCEL_RANDOM: usize = 10;
const WEINSTEIN_SAMPLES: usize = 50;
const GRID: usize = 256;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let e = start.elapsed();
    check(e <= limit, format!("runtime {e:?} exceeds {limit:?}"))
}

fn map(src: &Chart, dst: &Chart, comps: &[&str]) -> SmoothMap {
    let comps = comps.iter().map(|c| parse_expr(c, src.vars()).unwrap()).collect();
    SmoothMap::new(src, dst, comps).unwrap()
}

fn field(chart: &Chart, comps: &[String]) -> VectorField {
    VectorField::new(chart, comps.iter().map(|c| parse_expr(c, chart.vars()).unwrap()).collect()).unwrap()
}

fn level_sets_pair(f: &str, degree_bound: u32) -> BiSubmersion {
    let u = Chart::new("U", &["x", "y"]).unwrap();
    let r = Chart::new("R", &["w"]).unwrap();
    BiSubmersion::symbolic(map(&u, &r, &["y"]), map(&u, &r, &[&format!("{f} - y")]), None, None, degree_bound, 0, 50)
        .unwrap()
}

fn contact_pair() -> BiSubmersion {
    let u = Chart::new("U", &["x", "y", "z"]).unwrap();
    let r2 = Chart::new("R2", &["a", "b"]).unwrap();
    BiSubmersion::symbolic(map(&u, &r2, &["x", "z"]), map(&u, &r2, &["y", "z - x*y"]), None, None, 8, 0, 50).unwrap()
}

/// Random polynomial of degree at most 2 in `x, y` with rational coefficients in `[−1, 1]`.
fn random_quadratic(rng: &mut sampling::SampleRng) -> String {
    ["1", "x", "y", "x^2", "x*y", "y^2"]
        .iter()
        .map(|m| format!("({})*{m}", small_rational(rng, 4, 4)))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cubic_d2 = level_sets_pair("x^3", 2);
    let fol = verify_foliation_bisubmersion(&cubic_d2).map_err(|e| e.to_string())?;
    check(!fol.passed, "cubic foliation check passed")?;
    check(fol.witness.as_deref() == Some("6*x∂y"), format!("witness {:?}", fol.witness))?;
    let cubic = level_sets_pair("x^3", 8);
    let cert = verify_algebraic_bisubmersion(&cubic, &[0.0, 0.0], 100).map_err(|e| e.to_string())?;
    check(cert.verdict == PhiVerdict::NonSmoothCandidate, format!("cubic verdict {:?}", cert.verdict))?;
    let ratio = cert.smoothness.iter().map(|r| r.overall_ratio).fold(0.0, f64::max);
    check(ratio >= NONSMOOTH_RATIO, format!("derivative ratio {ratio}"))?;
    let linear = level_sets_pair("x", 8);
    check(verify_foliation_bisubmersion(&linear).map_err(|e| e.to_string())?.passed, "linear not involutive")?;
    let cert = verify_algebraic_bisubmersion(&linear, &[0.0, 0.0], 100).map_err(|e| e.to_string())?;
    check(cert.verdict == PhiVerdict::Exists, format!("linear verdict {:?}", cert.verdict))?;
    check(cert.max_residual <= PHI_RESIDUAL_TOL, format!("linear residual {:e}", cert.max_residual))?;
    within(start, Duration::from_secs(10))?;
    Ok(format!("witness 6*x∂y, ratio {ratio:.1}, linear residual {:.1e}", cert.max_residual))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let b = contact_pair();
    let cert = verify_algebraic_bisubmersion(&b, &[0.0, 0.0, 0.0], 50).map_err(|e| e.to_string())?;
    check(cert.verdict == PhiVerdict::InconsistentConstraints, format!("verdict {:?}", cert.verdict))?;
    let space = TripleSpace::new(&b, &[0.0, 0.0, 0.0], 0).map_err(|e| e.to_string())?;
    let (solve, w) = space.middle_solve(&[-0.5], &[-1.0, 0.5, 0.0], &[1.0]).map_err(|e| e.to_string())?;
    check((w[2][0] - w[0][0] - 1.0).abs() <= WITNESS_TOL, "x3 - x1 != 1")?;
    check((w[1][1] - w[0][1] - 0.5).abs() <= WITNESS_TOL, "y2 - y1 != 1/2")?;
    check((solve.residual - 0.5).abs() <= WITNESS_TOL, format!("irreducible residual {}", solve.residual))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("irreducible residual {:.12}", solve.residual))
}

fn criterion_3() -> Outcome {
    let mut rng = sampling::rng(3);
    let point = |rng: &mut sampling::SampleRng| -> Vec<Rational> { (0..2).map(|_| small_rational(rng, 50, 7)).collect() };
    for _ in 0..PHI_TRIPLES {
        let (a, b, c, d) = (point(&mut rng), point(&mut rng), point(&mut rng), point(&mut rng));
        let triple = [(a.clone(), b.clone()), (c.clone(), b), (c, d)];
        let out = groupoid_phi(&triple).map_err(|e| e.to_string())?;
        check(out[0] == triple[2] && out[2] == triple[0], "p∘φ = q or q∘φ = p fails")?;
        check(groupoid_phi(&out).map_err(|e| e.to_string())? == triple, "φ is not an involution")?;
        let g = triple[0].clone();
        let diag = [g.clone(), g.clone(), g];
        check(groupoid_phi(&diag).map_err(|e| e.to_string())? == diag, "diagonal not fixed")?;
    }
    Ok(format!("{PHI_TRIPLES} exact triples"))
}

fn criterion_4() -> Outcome {
    let c = Chart::new("R2", &["x", "y"]).unwrap();
    let mut rng = sampling::rng(4);
    let mut worst_sum: f64 = 0.0;
    let mut worst_mid: f64 = 0.0;
    for _ in 0..FLOW_PAIRS {
        let x = field(&c, &[random_quadratic(&mut rng), random_quadratic(&mut rng)]);
        let y = field(&c, &[random_quadratic(&mut rng), random_quadratic(&mut rng)]);
        let p = uniform_cube(&mut rng, 2, 0.5);
        worst_sum = worst_sum.max(flow_sum_compose(&x, &y, &p, 0.5).map_err(|e| e.to_string())?.residual);
        worst_mid = worst_mid.max(middle_term(&x, &y, &p, 0.5).map_err(|e| e.to_string())?.residual);
    }
    check(worst_sum <= FLOW_TOL, format!("flow-sum residual {worst_sum:e}"))?;
    check(worst_mid <= FLOW_TOL, format!("middle-term residual {worst_mid:e}"))?;
    let lin = CompiledField::new(&field(&c, &["x".into(), "-2*y".into()])).map_err(|e| e.to_string())?;
    let exact = [1f64.exp(), (-2f64).exp()];
    let err = |h: f64| -> Result<f64, String> {
        let v = flow(&lin, &[1.0, 1.0], 0.0, 1.0, h, None).map_err(|e| e.to_string())?;
        Ok(v.iter().zip(exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    };
    let ratio = err(0.1)? / err(0.05)?;
    check(ratio >= RK4_RATIO, format!("RK4 halving ratio {ratio}"))?;
    Ok(format!("flow-sum {worst_sum:.1e}, middle {worst_mid:.1e}, RK4 ratio {ratio:.1}"))
}

fn criterion_5() -> Outcome {
    let c = Chart::new("R2", &["x", "y"]).unwrap();
    let t = parse_expr("t", &["t".to_string()]).unwrap();
    let t2 = parse_expr("t^2", &["t".to_string()]).unwrap();
    let mut cases = vec![
        (TimeDependentField::new(&c, "t", vec![(t.clone(), field(&c, &["1".into(), "0".into()]))]), [0.3, -0.2]),
        (TimeDependentField::new(&c, "t", vec![(t.clone(), field(&c, &["x".into(), "0".into()]))]), [0.7, 0.1]),
    ];
    let mut rng = sampling::rng(5);
    for _ in 0..ACCEL_RANDOM {
        let a = field(&c, &[random_quadratic(&mut rng), random_quadratic(&mut rng)]);
        let b = field(&c, &[random_quadratic(&mut rng), random_quadratic(&mut rng)]);
        let p = uniform_cube(&mut rng, 2, 0.5);
        cases.push((TimeDependentField::new(&c, "t", vec![(t.clone(), a), (t2.clone(), b)]), [p[0], p[1]]));
    }
    let mut worst: f64 = 0.0;
    for (z, p) in cases {
        let z = z.map_err(|e| e.to_string())?;
        worst = worst.max(accel_velocity_check(&z, &p).map_err(|e| e.to_string())?.residual);
    }
    check(worst <= ACCEL_TOL, format!("residual {worst:e}"))?;
    Ok(format!("max residual {worst:.1e} over {} fields", ACCEL_RANDOM + 2))
}

fn criterion_6() -> Outcome {
    let mut notes = Vec::new();
    for (name, mut a) in [("sl2", Algebroid::sl2_action()), ("su2*", Algebroid::su2_star())] {
        a.degree_bound = DIM_DEGREE;
        let n = a.chart().dim();
        let mut rng = sampling::rng(6);
        for _ in 0..DIM_POINTS {
            let x = nonzero_rational_point(&mut rng, n, 9, 4);
            let (seq, _) = hx_dimensions(&a, &x).map_err(|e| e.to_string())?;
            check(seq == 1, format!("{name}: seq_dim {seq} at {x:?}"))?;
        }
        let o = origin(n);
        let k = kernel_module(&a, DIM_DEGREE, &[o]).map_err(|e| e.to_string())?;
        let d = &k.table[0];
        check(d.seq_dim == 0, format!("{name}: seq_dim {} at the origin", d.seq_dim))?;
        check(d.module_fiber_dim == 1, format!("{name}: module fiber dim {} at the origin", d.module_fiber_dim))?;
        let line = dimension_line(d);
        check(line.contains("differs"), format!("{name}: no discrepancy note in `{line}`"))?;
        notes.push(format!("{name}: {line}"));
    }
    Ok(notes.join("; "))
}

fn criterion_7() -> Outcome {
    let mut out = Vec::new();
    for (name, a) in [("sl2", Algebroid::sl2_action()), ("su2*", Algebroid::su2_star())] {
        let k = kernel_module(&a, a.degree_bound, &[]).map_err(|e| e.to_string())?;
        check(k.generators.len() == 1, format!("{name}: {} generators", k.generators.len()))?;
        let g = &k.generator_exprs(a.chart().vars())[0];
        let image = a.anchor_of(g);
        check(image.is_zero().map_err(|e| e.to_string())?, format!("{name}: ρ(ν) = {image:?}"))?;
        out.push(format!("{name}: ({})", g.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")));
    }
    Ok(out.join("; "))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let a = Algebroid::su2_star();
    let x = [int(1), int(0), int(0)];
    let z = build_weinstein_bisubmersion(&a, &x).map_err(|e| e.to_string())?;
    check((z.n, z.k) == (2, 1), format!("n = {}, k = {}", z.n, z.k))?;
    check(z.group.is_abelian(), "group model is not abelian")?;
    let cert = verify_algebraic_bisubmersion(&z.bisub, &z.base_point(), WEINSTEIN_SAMPLES).map_err(|e| e.to_string())?;
    check(cert.verdict == PhiVerdict::Exists, format!("φ_Z verdict {:?}", cert.verdict))?;
    let mut rng = sampling::rng(8);
    let mut worst: f64 = 0.0;
    for _ in 0..WEINSTEIN_SAMPLES {
        let y = uniform_cube(&mut rng, 3, 0.1);
        let mut p = vec![1.0 + y[0], y[1], y[2]];
        p.extend(uniform_cube(&mut rng, 2, 0.2));
        p.extend(uniform_cube(&mut rng, 1, 0.2));
        let rep = psi_representative(&z, &p).map_err(|e| e.to_string())?;
        worst = worst.max(rep.commutation_residual);
    }
    check(worst <= COMMUTE_TOL, format!("ψ commutation {worst:e}"))?;
    let diagram = diagram_check_weinstein(&z, WEINSTEIN_SAMPLES).map_err(|e| e.to_string())?;
    check(diagram.max_mismatch() <= COMMUTE_TOL, format!("diagram mismatch {:e}", diagram.max_mismatch()))?;
    let z0 = build_weinstein_bisubmersion(&a, &origin(3)).map_err(|e| e.to_string())?;
    check(z0.k == 0, format!("k = {} at the origin", z0.k))?;
    let ph = build_path_holonomy(&induced_foliation(&a), &origin(3), &PathHolonomyOptions::default())
        .map_err(|e| e.to_string())?;
    check(z0.bisub == ph, "origin construction differs from path-holonomy")?;
    within(start, Duration::from_secs(60))?;
    Ok(format!(
        "n=2 k=1 abelian, φ_Z Exists, ψ {worst:.1e}, diagram {:.1e}, origin = path-holonomy",
        diagram.max_mismatch()
    ))
}

fn apath_examples() -> Vec<(&'static str, Algebroid, Vec<Rational>, Box<dyn Fn(usize) -> APath>)> {
    vec![
        (
            "zero",
            Algebroid::su2_star(),
            vec![int(1), int(0), int(0)],
            Box::new(|n| APath::constant(&[1.0, 0.0, 0.0], 3, n)),
        ),
        (
            "circle",
            Algebroid::tangent(2),
            origin(2),
            Box::new(|n| {
                APath::from_fn(
                    n,
                    |t| vec![(TAU * t).cos(), (TAU * t).sin()],
                    |t| vec![-TAU * (TAU * t).sin(), TAU * (TAU * t).cos()],
                )
            }),
        ),
        (
            "su2-rotation",
            Algebroid::su2_star(),
            vec![int(1), int(0), int(0)],
            Box::new(|n| APath::from_fn(n, |t| vec![t.cos(), -t.sin(), 0.0], |_| vec![0.0, 0.0, 1.0])),
        ),
    ]
}

fn halves(coarse: f64, fine: f64) -> bool {
    fine * HALVING_FACTOR <= coarse || coarse <= PRECISION_FLOOR
}

fn criterion_9() -> Outcome {
    let mut out = Vec::new();
    for (name, a, x, path) in apath_examples() {
        let frame = FiberFrame::at(&a, &x).map_err(|e| e.to_string())?;
        let (p, p2) = (path(GRID), path(2 * GRID));
        let (r, r2) = (check_apath(&a, &p).map_err(|e| e.to_string())?, check_apath(&a, &p2).map_err(|e| e.to_string())?);
        check(r.valid, format!("{name}: check_apath residual {:e}", r.residual))?;
        let tangent = Algebroid::tangent(a.chart().dim());
        let image = folia_core::weinstein::anchor_image(&a, &p).map_err(|e| e.to_string())?;
        let ri = check_apath(&tangent, &image).map_err(|e| e.to_string())?;
        check(
            (ri.residual - r.residual).abs() <= ANCHOR_IDENTITY_TOL,
            format!("{name}: anchor image residual {:e} vs {:e}", ri.residual, r.residual),
        )?;
        let (rt, rt2) = (
            roundtrip_residual(&a, &frame, &p).map_err(|e| e.to_string())?,
            roundtrip_residual(&a, &frame, &p2).map_err(|e| e.to_string())?,
        );
        check(rt <= APATH_TOL, format!("{name}: roundtrip {rt:e}"))?;
        check(halves(r.residual, r2.residual), format!("{name}: stencil {:e} -> {:e}", r.residual, r2.residual))?;
        check(halves(rt, rt2), format!("{name}: roundtrip {rt:e} -> {rt2:e}"))?;
        out.push(format!("{name} roundtrip {rt:.1e}"));
    }
    Ok(out.join(", "))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 cubic and linear examples", criterion_1),
        ("2 contact example", criterion_2),
        ("3 pair-groupoid φ", criterion_3),
        ("4 flow formulas", criterion_4),
        ("5 acceleration lemma", criterion_5),
        ("6 algebroid fibers", criterion_6),
        ("7 kernel modules", criterion_7),
        ("8 Weinstein construction", criterion_8),
        ("9 A-path suite", criterion_9),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let start = Instant::now();
        match run() {
            Ok(detail) => println!("PASS {name}: {detail} [{:.2?}]", start.elapsed()),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
